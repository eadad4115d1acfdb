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

#ifndef GANWILD_CONTENT_HPP_
#define GANWILD_CONTENT_HPP_

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ganwild/accounts.hpp"
#include "ganwild/common.hpp"

namespace ganwild {

struct TweetRecord {
  std::string tweet_id;
  std::string account_id;
  std::string text;
  std::string language;
  Timestamp created_at{};
  bool is_retweet = false;
};

// Collapses whitespace runs to one space and trims.
std::string normalize_whitespace(std::string_view text);

struct TweetIngest {
  std::vector<TweetRecord> tweets;
  std::vector<std::string> warnings;  // dropped empty texts
};

// JSON Lines {tweet_id, account_id, text, language, created_at, is_retweet}.
TweetIngest parse_tweets_jsonl(std::string_view text);
TweetIngest read_tweets(const fs::path& path);
std::string tweet_to_json_line(const TweetRecord& tweet);

class EmbeddingAdapter {
 public:
  virtual ~EmbeddingAdapter() = default;
  virtual int dimension() const = 0;
  virtual std::vector<double> embed(std::string_view text) const = 0;
};

// Signed feature hashing of the tokens; deterministic stand-in for a
// sentence encoder.
class HashingEmbedder final : public EmbeddingAdapter {
 public:
  explicit HashingEmbedder(int dimension = 256) : dim_(dimension) {}
  int dimension() const override { return dim_; }
  std::vector<double> embed(std::string_view text) const override;

 private:
  int dim_;
};

// Vectors looked up by exact text, e.g. produced offline by an external
// encoder. File format: JSON Lines {"text": ..., "vector": [...]}.
class PrecomputedEmbedder final : public EmbeddingAdapter {
 public:
  explicit PrecomputedEmbedder(std::map<std::string, std::vector<double>> vectors);
  static PrecomputedEmbedder load(const fs::path& path);
  int dimension() const override { return dim_; }
  std::vector<double> embed(std::string_view text) const override;

 private:
  std::map<std::string, std::vector<double>, std::less<>> vectors_;
  int dim_ = 0;
};

inline constexpr int kNoiseCluster = -1;
inline constexpr double kDefaultSimilarityThreshold = 0.6;
inline constexpr std::size_t kDefaultMinClusterSize = 50;

struct ClusterAssignment {
  std::string tweet_id;
  int cluster_id = kNoiseCluster;
  double similarity = 0.0;  // to the joined centroid; 1 for founders
};

struct ClusterProfile {
  int cluster_id = 0;
  std::size_t size = 0;
  std::vector<double> centroid;  // unit length
  std::vector<std::pair<std::string, double>> top_terms;
};

struct ClusteringResult {
  std::vector<ClusterAssignment> assignments;  // processing order
  std::vector<ClusterProfile> profiles;        // reported clusters only
  std::size_t clusters_formed = 0;             // before the size filter
};

// Single pass in (created_at, tweet_id) order. Each tweet joins the cluster
// whose normalized centroid has the highest cosine similarity if that is
// >= threshold (ties to the lower id), otherwise founds a new cluster.
// Clusters smaller than min_cluster_size are reported as noise.
// Throws Error on an embedding dimension mismatch.
ClusteringResult cluster_stream(std::span<const TweetRecord> tweets, const EmbeddingAdapter& embedder,
                                double threshold = kDefaultSimilarityThreshold,
                                std::size_t min_cluster_size = kDefaultMinClusterSize);

// Lowercase, split on non-alphanumerics; '#' and '@' tokens keep their
// prefix and inner underscores. Tokens of one character are dropped.
std::vector<std::string> tokenize(std::string_view text);

using TermWeights = std::vector<std::pair<std::string, double>>;

// weight(t, c) = count(t, c) / tokens(c) * log(1 + A / f_t), A = mean tokens
// per cluster, f_t = count of t over all clusters. Noise is ignored; top_n
// terms per cluster by weight, ties by term.
std::map<int, TermWeights> ctfidf(std::span<const ClusterAssignment> assignments,
                                  std::span<const TweetRecord> tweets, std::size_t top_n);
void attach_terms(ClusteringResult& result, std::span<const TweetRecord> tweets, std::size_t top_n);

struct LanguageStats {
  std::string language;
  std::size_t tweets = 0;
  std::size_t accounts = 0;
  std::size_t inactive_tweets = 0;
  double inactive_share = 0.0;
};

// Tweets without a language code are skipped. Accounts without a status
// count as active. Sorted by tweets descending, then language.
std::vector<LanguageStats> language_breakdown(std::span<const TweetRecord> tweets,
                                              const std::map<std::string, AccountStatus>& status_by_account);

// Splits tweets by "<language>/<active|inactive>".
std::map<std::string, std::vector<TweetRecord>> group_by_language_status(
    std::span<const TweetRecord> tweets, const std::map<std::string, AccountStatus>& status_by_account);

std::string content_clusters_to_json(const ClusteringResult& result, double threshold, std::size_t min_cluster_size);
std::string cluster_terms_csv(const ClusteringResult& result);
std::string languages_csv(std::span<const LanguageStats> stats);

}  // namespace ganwild

#endif  // GANWILD_CONTENT_HPP_
