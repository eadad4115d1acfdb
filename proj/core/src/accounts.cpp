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

#include "ganwild/accounts.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "json.hpp"

namespace ganwild {

using nlohmann::json;

namespace {

std::string string_or_number(const json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer()) return std::to_string(j.get<std::int64_t>());
  throw Error("expected a string or integer id");
}

std::optional<std::string> optional_string(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<std::string>();
}

std::uint64_t count_field(const json& j, const char* key) {
  const json* src = nullptr;
  if (const auto pm = j.find("public_metrics"); pm != j.end() && pm->contains(key)) {
    src = &(*pm)[key];
  } else if (j.contains(key)) {
    src = &j[key];
  }
  if (!src) throw Error(fmt::format("missing {}", key));
  if (src->is_number_integer() && src->get<std::int64_t>() < 0) throw Error(fmt::format("{} is negative", key));
  return src->get<std::uint64_t>();
}

// Type-7 quantile of sorted values.
double quantile(std::span<const double> sorted, double p) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

std::string_view to_string(AccountGroup group) {
  return group == AccountGroup::FAKE_IMAGE ? "FAKE_IMAGE" : "REAL_IMAGE";
}

AccountGroup parse_account_group(std::string_view text) {
  const std::string s = to_lower_ascii(trim(text));
  if (s == "fake_image" || s == "fake") return AccountGroup::FAKE_IMAGE;
  if (s == "real_image" || s == "real") return AccountGroup::REAL_IMAGE;
  throw Error(fmt::format("unknown account group '{}'", text));
}

AccountRecord account_from_json(std::string_view line) {
  const json j = json::parse(line);
  AccountRecord a;
  a.id = string_or_number(j.at("id"));
  a.username = j.value("username", std::string());
  a.display_name = j.contains("name") ? j.at("name").get<std::string>() : j.value("display_name", std::string());
  a.created_at = parse_timestamp(j.at("created_at").get<std::string>());
  a.location = optional_string(j, "location");
  a.description = j.value("description", std::string());
  a.url = optional_string(j, "url");
  a.profile_image_url = optional_string(j, "profile_image_url");
  a.followers_count = count_field(j, "followers_count");
  a.following_count = count_field(j, "following_count");
  a.tweet_count = count_field(j, "tweet_count");
  a.listed_count = count_field(j, "listed_count");
  a.is_protected = j.value("protected", false);
  a.verified = j.value("verified", false);
  a.image_id = j.value("image_id", std::string());
  if (j.contains("group")) a.group = parse_account_group(j.at("group").get<std::string>());
  return a;
}

std::string account_to_json_line(const AccountRecord& a) {
  json j{{"id", a.id},
         {"username", a.username},
         {"name", a.display_name},
         {"created_at", format_timestamp(a.created_at)},
         {"location", a.location ? json(*a.location) : json(nullptr)},
         {"description", a.description},
         {"url", a.url ? json(*a.url) : json(nullptr)},
         {"public_metrics",
          {{"followers_count", a.followers_count},
           {"following_count", a.following_count},
           {"tweet_count", a.tweet_count},
           {"listed_count", a.listed_count}}},
         {"protected", a.is_protected},
         {"verified", a.verified},
         {"image_id", a.image_id},
         {"group", to_string(a.group)}};
  if (a.profile_image_url) j["profile_image_url"] = *a.profile_image_url;
  return j.dump() + "\n";
}

std::vector<AccountRecord> parse_accounts_jsonl(std::string_view text) {
  std::vector<AccountRecord> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (trim(line).empty()) continue;
    try {
      out.push_back(account_from_json(line));
    } catch (const std::exception& e) {
      throw Error(fmt::format("account line {}: {}", number, e.what()));
    }
  }
  return out;
}

std::vector<AccountRecord> read_accounts(const fs::path& path) { return parse_accounts_jsonl(read_file_text(path)); }

std::string_view to_string(AccountStatus status) {
  switch (status) {
    case AccountStatus::ACTIVE: return "ACTIVE";
    case AccountStatus::DEACTIVATED: return "DEACTIVATED";
    case AccountStatus::SUSPENDED: return "SUSPENDED";
  }
  return "ACTIVE";
}

AccountStatus parse_account_status(std::string_view text) {
  const std::string s = to_lower_ascii(trim(text));
  if (s == "active") return AccountStatus::ACTIVE;
  if (s == "deactivated") return AccountStatus::DEACTIVATED;
  if (s == "suspended") return AccountStatus::SUSPENDED;
  throw Error(fmt::format("unknown account status '{}'", text));
}

std::vector<StatusCheck> parse_status_csv(std::string_view text) {
  std::vector<StatusCheck> out;
  std::map<std::pair<std::string, Timestamp>, AccountStatus> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    line = trim(line);
    if (line.empty()) continue;
    if (number == 1 && line.starts_with("account_id")) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
    if (cells.size() != 3) throw Error(fmt::format("status line {}: expected 3 columns", number));
    StatusCheck c{cells[0], parse_timestamp(cells[1]), parse_account_status(cells[2])};
    const auto [it, inserted] = seen.emplace(std::make_pair(c.account_id, c.checked_at), c.status);
    if (!inserted) {
      if (it->second != c.status) {
        throw Error(fmt::format("status line {}: conflicting status for {} at {}", number, c.account_id, cells[1]));
      }
      continue;
    }
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<StatusCheck> read_status_checks(const fs::path& path) { return parse_status_csv(read_file_text(path)); }

std::string_view to_string(Metric metric) {
  switch (metric) {
    case Metric::FOLLOWERS: return "followers_count";
    case Metric::FOLLOWING: return "following_count";
    case Metric::TWEETS: return "tweet_count";
    case Metric::LISTED: return "listed_count";
    case Metric::TWEETS_PER_DAY: return "tweets_per_day";
  }
  return "followers_count";
}

Metric parse_metric(std::string_view text) {
  std::string s = to_lower_ascii(trim(text));
  if (s.starts_with("public_metrics.")) s = s.substr(15);
  if (s == "followers_count" || s == "followers") return Metric::FOLLOWERS;
  if (s == "following_count" || s == "following") return Metric::FOLLOWING;
  if (s == "tweet_count" || s == "tweets") return Metric::TWEETS;
  if (s == "listed_count" || s == "listed") return Metric::LISTED;
  if (s == "tweets_per_day") return Metric::TWEETS_PER_DAY;
  throw Error(fmt::format("unknown metric '{}'", text));
}

std::int64_t account_age_days(const AccountRecord& account, Timestamp collected_at) {
  const auto secs = (collected_at - account.created_at).count();
  const std::int64_t days = secs >= 0 ? secs / 86400 : 0;
  return std::max<std::int64_t>(1, days);
}

double metric_value(const AccountRecord& a, Metric metric, Timestamp collected_at) {
  switch (metric) {
    case Metric::FOLLOWERS: return static_cast<double>(a.followers_count);
    case Metric::FOLLOWING: return static_cast<double>(a.following_count);
    case Metric::TWEETS: return static_cast<double>(a.tweet_count);
    case Metric::LISTED: return static_cast<double>(a.listed_count);
    case Metric::TWEETS_PER_DAY:
      return static_cast<double>(a.tweet_count) / static_cast<double>(account_age_days(a, collected_at));
  }
  return 0.0;
}

std::vector<double> metric_values(std::span<const AccountRecord> accounts, Metric metric, Timestamp collected_at) {
  std::vector<double> out;
  out.reserve(accounts.size());
  for (const auto& a : accounts) out.push_back(metric_value(a, metric, collected_at));
  return out;
}

MetricSummary summarize(std::span<const double> values) {
  if (values.empty()) throw Error("metric summary of an empty account set");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  MetricSummary s;
  s.count = sorted.size();
  long double sum = 0.0L;
  for (double v : sorted) sum += v;
  s.mean = static_cast<double>(sum / static_cast<long double>(sorted.size()));
  const std::size_t n = sorted.size();
  s.median = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  s.q1 = quantile(sorted, 0.25);
  s.q3 = quantile(sorted, 0.75);
  s.min = sorted.front();
  s.max = sorted.back();
  return s;
}

MetricSummary metric_summary(std::span<const AccountRecord> accounts, Metric metric, Timestamp collected_at) {
  const auto values = metric_values(accounts, metric, collected_at);
  return summarize(values);
}

std::vector<ValueSpike> exact_value_spikes(std::span<const double> values, double min_share) {
  std::map<double, std::size_t> freq;
  for (double v : values) ++freq[v];
  std::vector<ValueSpike> out;
  if (values.empty()) return out;
  const double n = static_cast<double>(values.size());
  for (const auto& [v, c] : freq) {
    const double share = static_cast<double>(c) / n;
    if (share >= min_share) out.push_back({v, c, share});
  }
  std::stable_sort(out.begin(), out.end(), [](const ValueSpike& a, const ValueSpike& b) { return a.count > b.count; });
  return out;
}

std::vector<ValueSpike> exact_value_spikes(std::span<const AccountRecord> accounts, Metric metric, double min_share,
                                           Timestamp collected_at) {
  const auto values = metric_values(accounts, metric, collected_at);
  return exact_value_spikes(values, min_share);
}

std::vector<CreationWindow> bulk_creation_windows(std::span<const AccountRecord> accounts,
                                                  std::chrono::seconds window, std::size_t min_count) {
  if (window.count() <= 0) throw ConfigError("creation window must be positive");
  const std::int64_t w = window.count();
  std::map<std::int64_t, std::size_t> bins;
  for (const auto& a : accounts) {
    const std::int64_t t = a.created_at.time_since_epoch().count();
    const std::int64_t bin = t >= 0 ? t / w : -((-t + w - 1) / w);
    ++bins[bin];
  }
  std::vector<CreationWindow> out;
  std::optional<std::int64_t> last;
  for (const auto& [bin, count] : bins) {
    if (count < min_count) continue;
    const Timestamp start{std::chrono::seconds(bin * w)};
    if (last && *last + 1 == bin) {
      out.back().end = start + window;
      out.back().count += count;
      out.back().peak = std::max(out.back().peak, count);
    } else {
      out.push_back({start, start + window, count, count});
    }
    last = bin;
  }
  return out;
}

std::map<std::string, AccountStatus> latest_status(std::span<const StatusCheck> checks) {
  std::map<std::string, std::pair<Timestamp, AccountStatus>> latest;
  for (const auto& c : checks) {
    auto it = latest.find(c.account_id);
    if (it == latest.end() || it->second.first < c.checked_at) latest[c.account_id] = {c.checked_at, c.status};
  }
  std::map<std::string, AccountStatus> out;
  for (const auto& [id, v] : latest) out.emplace(id, v.second);
  return out;
}

namespace {

StatusShares shares_from(const std::map<std::string, AccountStatus>& status, const std::set<std::string>* filter) {
  StatusShares s;
  for (const auto& [id, st] : status) {
    if (filter && !filter->contains(id)) continue;
    ++s.counts[st];
    ++s.total;
  }
  for (const auto& [st, c] : s.counts) s.shares[st] = static_cast<double>(c) / static_cast<double>(s.total);
  return s;
}

}  // namespace

StatusShares status_shares(std::span<const StatusCheck> checks) { return shares_from(latest_status(checks), nullptr); }

StatusShares status_breakdown(std::span<const StatusCheck> checks, std::span<const AccountRecord> accounts,
                              AccountGroup group) {
  std::set<std::string> members;
  for (const auto& a : accounts) {
    if (a.group == group) members.insert(a.id);
  }
  return shares_from(latest_status(checks), &members);
}

std::string metric_summary_to_json(const MetricSummary& s) {
  const json j{{"count", s.count}, {"mean", s.mean}, {"median", s.median}, {"q1", s.q1},
               {"q3", s.q3},       {"min", s.min},   {"max", s.max}};
  return j.dump();
}

std::string histogram_csv(std::span<const double> values, std::size_t bins) {
  std::string out = "bin_start,bin_end,count\n";
  if (values.empty() || bins == 0) return out;
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  const double width = hi > lo ? (hi - lo) / static_cast<double>(bins) : 1.0;
  std::vector<std::size_t> counts(bins, 0);
  for (double v : values) {
    auto b = static_cast<std::size_t>((v - lo) / width);
    ++counts[std::min(b, bins - 1)];
  }
  for (std::size_t b = 0; b < bins; ++b) {
    out += fmt::format("{},{},{}\n", lo + width * b, lo + width * (b + 1), counts[b]);
  }
  return out;
}

}  // namespace ganwild
