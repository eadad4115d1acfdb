/* Copyright 2026 The ganwild Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "ganwild/content.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "json.hpp"

namespace ganwild {

using nlohmann::json;

namespace {

bool is_alnum_byte(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

std::size_t utf8_length(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s) n += (c & 0xC0) != 0x80;
  return n;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void normalize(std::vector<double>& v) {
  double n = 0.0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  if (n > 0.0) {
    for (double& x : v) x /= n;
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace

std::string normalize_whitespace(std::string_view text) {
  std::string out;
  bool pending = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending = !out.empty();
    } else {
      if (pending) out += ' ';
      pending = false;
      out += c;
    }
  }
  return out;
}

TweetIngest parse_tweets_jsonl(std::string_view text) {
  TweetIngest out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      TweetRecord t;
      const auto& id = j.at("tweet_id");
      t.tweet_id = id.is_string() ? id.get<std::string>() : std::to_string(id.get<std::int64_t>());
      const auto& acc = j.at("account_id");
      t.account_id = acc.is_string() ? acc.get<std::string>() : std::to_string(acc.get<std::int64_t>());
      t.text = normalize_whitespace(j.at("text").get<std::string>());
      t.language = j.value("language", std::string());
      t.created_at = parse_timestamp(j.at("created_at").get<std::string>());
      t.is_retweet = j.value("is_retweet", false);
      if (t.text.empty()) {
        out.warnings.push_back(fmt::format("line {}: tweet {} has empty text, dropped", number, t.tweet_id));
        continue;
      }
      out.tweets.push_back(std::move(t));
    } catch (const std::exception& e) {
      throw Error(fmt::format("tweet line {}: {}", number, e.what()));
    }
  }
  return out;
}

TweetIngest read_tweets(const fs::path& path) { return parse_tweets_jsonl(read_file_text(path)); }

std::string tweet_to_json_line(const TweetRecord& t) {
  const json j{{"tweet_id", t.tweet_id},
               {"account_id", t.account_id},
               {"text", t.text},
               {"language", t.language},
               {"created_at", format_timestamp(t.created_at)},
               {"is_retweet", t.is_retweet}};
  return j.dump() + "\n";
}

std::vector<double> HashingEmbedder::embed(std::string_view text) const {
  std::vector<double> v(dim_, 0.0);
  for (const auto& token : tokenize(text)) {
    const std::uint64_t h = fnv1a(token);
    v[h % static_cast<std::uint64_t>(dim_)] += (h >> 63) ? -1.0 : 1.0;
  }
  return v;
}

PrecomputedEmbedder::PrecomputedEmbedder(std::map<std::string, std::vector<double>> vectors) {
  for (auto& [text, v] : vectors) {
    if (dim_ == 0) dim_ = static_cast<int>(v.size());
    if (static_cast<int>(v.size()) != dim_) throw Error("precomputed embeddings differ in dimension");
    vectors_.emplace(text, std::move(v));
  }
}

PrecomputedEmbedder PrecomputedEmbedder::load(const fs::path& path) {
  std::map<std::string, std::vector<double>> vectors;
  std::istringstream in{read_file_text(path)};
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const json j = json::parse(line);
    vectors[normalize_whitespace(j.at("text").get<std::string>())] = j.at("vector").get<std::vector<double>>();
  }
  return PrecomputedEmbedder(std::move(vectors));
}

std::vector<double> PrecomputedEmbedder::embed(std::string_view text) const {
  const auto it = vectors_.find(text);
  if (it == vectors_.end()) throw Error(fmt::format("no precomputed embedding for '{}'", text));
  return it->second;
}

ClusteringResult cluster_stream(std::span<const TweetRecord> tweets, const EmbeddingAdapter& embedder,
                                double threshold, std::size_t min_cluster_size) {
  std::vector<std::size_t> order(tweets.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (tweets[a].created_at != tweets[b].created_at) return tweets[a].created_at < tweets[b].created_at;
    return tweets[a].tweet_id < tweets[b].tweet_id;
  });

  const auto d = static_cast<std::size_t>(embedder.dimension());
  std::vector<std::vector<double>> sums;
  std::vector<std::vector<double>> centroids;
  std::vector<std::size_t> sizes;
  ClusteringResult result;
  result.assignments.reserve(tweets.size());
  for (auto idx : order) {
    auto e = embedder.embed(tweets[idx].text);
    if (e.size() != d) {
      throw Error(fmt::format("embedding of tweet {} has dimension {}, expected {}", tweets[idx].tweet_id, e.size(), d));
    }
    normalize(e);
    int best = kNoiseCluster;
    double best_sim = -2.0;
    for (std::size_t c = 0; c < centroids.size(); ++c) {
      const double s = dot(e, centroids[c]);
      if (s > best_sim) {
        best_sim = s;
        best = static_cast<int>(c);
      }
    }
    ClusterAssignment a{tweets[idx].tweet_id, kNoiseCluster, 1.0};
    if (best != kNoiseCluster && best_sim >= threshold) {
      a.cluster_id = best;
      a.similarity = best_sim;
      auto& sum = sums[best];
      for (std::size_t i = 0; i < d; ++i) sum[i] += e[i];
      centroids[best] = sum;
      normalize(centroids[best]);
      ++sizes[best];
    } else {
      a.cluster_id = static_cast<int>(centroids.size());
      sums.push_back(e);
      centroids.push_back(e);
      sizes.push_back(1);
    }
    result.assignments.push_back(std::move(a));
  }
  result.clusters_formed = centroids.size();
  for (auto& a : result.assignments) {
    if (sizes[a.cluster_id] < min_cluster_size) a.cluster_id = kNoiseCluster;
  }
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    if (sizes[c] >= min_cluster_size) result.profiles.push_back({static_cast<int>(c), sizes[c], centroids[c], {}});
  }
  return result;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  const std::size_t n = text.size();
  auto flush = [&](std::string& tok) {
    if (utf8_length(tok) > 1) tokens.push_back(tok);
    tok.clear();
  };
  std::string tok;
  while (i < n) {
    const auto c = static_cast<unsigned char>(text[i]);
    if ((c == '#' || c == '@') && tok.empty() && i + 1 < n && is_alnum_byte(static_cast<unsigned char>(text[i + 1]))) {
      tok += static_cast<char>(c);
      ++i;
      while (i < n) {
        const auto d = static_cast<unsigned char>(text[i]);
        if (!is_alnum_byte(d) && d != '_') break;
        tok += static_cast<char>(d < 0x80 ? std::tolower(d) : d);
        ++i;
      }
      flush(tok);
      continue;
    }
    if (is_alnum_byte(c)) {
      tok += static_cast<char>(c < 0x80 ? std::tolower(c) : c);
    } else if (!tok.empty()) {
      flush(tok);
    }
    ++i;
  }
  if (!tok.empty()) flush(tok);
  return tokens;
}

std::map<int, TermWeights> ctfidf(std::span<const ClusterAssignment> assignments,
                                  std::span<const TweetRecord> tweets, std::size_t top_n) {
  std::map<std::string_view, const TweetRecord*> by_id;
  for (const auto& t : tweets) by_id.emplace(t.tweet_id, &t);

  std::map<int, std::map<std::string, std::size_t>> counts;
  std::map<int, std::size_t> totals;
  std::map<std::string, std::size_t> term_totals;
  for (const auto& a : assignments) {
    if (a.cluster_id == kNoiseCluster) continue;
    const auto it = by_id.find(a.tweet_id);
    if (it == by_id.end()) throw Error(fmt::format("assignment references unknown tweet {}", a.tweet_id));
    for (auto& tok : tokenize(it->second->text)) {
      ++counts[a.cluster_id][tok];
      ++totals[a.cluster_id];
      ++term_totals[tok];
    }
  }
  std::map<int, TermWeights> out;
  if (totals.empty()) return out;
  double all = 0.0;
  for (const auto& [c, n] : totals) all += static_cast<double>(n);
  const double mean_tokens = all / static_cast<double>(totals.size());
  for (const auto& [c, terms] : counts) {
    const double total = static_cast<double>(totals[c]);
    TermWeights w;
    for (const auto& [term, n] : terms) {
      const double tf = static_cast<double>(n) / total;
      w.emplace_back(term, tf * std::log(1.0 + mean_tokens / static_cast<double>(term_totals[term])));
    }
    std::sort(w.begin(), w.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    if (w.size() > top_n) w.resize(top_n);
    out.emplace(c, std::move(w));
  }
  return out;
}

void attach_terms(ClusteringResult& result, std::span<const TweetRecord> tweets, std::size_t top_n) {
  auto terms = ctfidf(result.assignments, tweets, top_n);
  for (auto& p : result.profiles) {
    if (auto it = terms.find(p.cluster_id); it != terms.end()) p.top_terms = std::move(it->second);
  }
}

std::vector<LanguageStats> language_breakdown(std::span<const TweetRecord> tweets,
                                              const std::map<std::string, AccountStatus>& status_by_account) {
  std::map<std::string, LanguageStats> stats;
  std::map<std::string, std::set<std::string>> accounts;
  for (const auto& t : tweets) {
    if (t.language.empty()) continue;
    auto& s = stats[t.language];
    s.language = t.language;
    ++s.tweets;
    accounts[t.language].insert(t.account_id);
    const auto it = status_by_account.find(t.account_id);
    if (it != status_by_account.end() && it->second != AccountStatus::ACTIVE) ++s.inactive_tweets;
  }
  std::vector<LanguageStats> out;
  for (auto& [lang, s] : stats) {
    s.accounts = accounts[lang].size();
    s.inactive_share = static_cast<double>(s.inactive_tweets) / static_cast<double>(s.tweets);
    out.push_back(s);
  }
  std::sort(out.begin(), out.end(), [](const LanguageStats& a, const LanguageStats& b) {
    if (a.tweets != b.tweets) return a.tweets > b.tweets;
    return a.language < b.language;
  });
  return out;
}

std::map<std::string, std::vector<TweetRecord>> group_by_language_status(
    std::span<const TweetRecord> tweets, const std::map<std::string, AccountStatus>& status_by_account) {
  std::map<std::string, std::vector<TweetRecord>> out;
  for (const auto& t : tweets) {
    const auto it = status_by_account.find(t.account_id);
    const bool inactive = it != status_by_account.end() && it->second != AccountStatus::ACTIVE;
    out[fmt::format("{}/{}", t.language.empty() ? "und" : t.language, inactive ? "inactive" : "active")].push_back(t);
  }
  return out;
}

std::string content_clusters_to_json(const ClusteringResult& result, double threshold, std::size_t min_cluster_size) {
  json clusters = json::array();
  for (const auto& p : result.profiles) {
    json terms = json::array();
    for (const auto& [t, w] : p.top_terms) terms.push_back({{"term", t}, {"weight", w}});
    json members = json::array();
    for (const auto& a : result.assignments) {
      if (a.cluster_id == p.cluster_id) members.push_back(a.tweet_id);
    }
    clusters.push_back({{"cluster_id", p.cluster_id}, {"size", p.size}, {"top_terms", terms}, {"tweet_ids", members}});
  }
  std::size_t noise = 0;
  for (const auto& a : result.assignments) noise += a.cluster_id == kNoiseCluster;
  const json j{{"threshold", threshold},
               {"min_cluster_size", min_cluster_size},
               {"tweets", result.assignments.size()},
               {"clusters_formed", result.clusters_formed},
               {"noise", noise},
               {"clusters", clusters}};
  return j.dump(2) + "\n";
}

std::string cluster_terms_csv(const ClusteringResult& result) {
  std::string out = "cluster_id,rank,term,weight\n";
  for (const auto& p : result.profiles) {
    for (std::size_t r = 0; r < p.top_terms.size(); ++r) {
      out += fmt::format("{},{},{},{:.12g}\n", p.cluster_id, r + 1, p.top_terms[r].first, p.top_terms[r].second);
    }
  }
  return out;
}

std::string languages_csv(std::span<const LanguageStats> stats) {
  std::string out = "language,tweets,accounts,inactive_tweets,inactive_share\n";
  for (const auto& s : stats) {
    out += fmt::format("{},{},{},{},{:.6f}\n", s.language, s.tweets, s.accounts, s.inactive_tweets, s.inactive_share);
  }
  return out;
}

}  // namespace ganwild
