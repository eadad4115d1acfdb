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

#ifndef GANWILD_ACCOUNTS_HPP_
#define GANWILD_ACCOUNTS_HPP_

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ganwild/common.hpp"

namespace ganwild {

enum class AccountGroup { REAL_IMAGE, FAKE_IMAGE };
std::string_view to_string(AccountGroup group);
AccountGroup parse_account_group(std::string_view text);

struct AccountRecord {
  std::string id;
  std::string username;
  std::string display_name;
  Timestamp created_at{};
  std::optional<std::string> location;
  std::string description;
  std::optional<std::string> url;
  std::optional<std::string> profile_image_url;
  std::uint64_t followers_count = 0;
  std::uint64_t following_count = 0;
  std::uint64_t tweet_count = 0;
  std::uint64_t listed_count = 0;
  bool is_protected = false;
  bool verified = false;
  std::string image_id;
  AccountGroup group = AccountGroup::REAL_IMAGE;
};

// One account per line using the platform's field names (id, username, name,
// created_at, public_metrics.{followers,following,tweet,listed}_count, ...);
// the counts may also appear at top level. image_id and group are artifact
// fields. Throws Error with the line number on malformed input.
AccountRecord account_from_json(std::string_view line);
std::string account_to_json_line(const AccountRecord& account);
std::vector<AccountRecord> parse_accounts_jsonl(std::string_view text);
std::vector<AccountRecord> read_accounts(const fs::path& path);

enum class AccountStatus { ACTIVE, DEACTIVATED, SUSPENDED };
std::string_view to_string(AccountStatus status);
AccountStatus parse_account_status(std::string_view text);

struct StatusCheck {
  std::string account_id;
  Timestamp checked_at{};
  AccountStatus status = AccountStatus::ACTIVE;
};

// CSV with header account_id,checked_at,status. Throws Error when one
// (account_id, checked_at) pair carries two different statuses.
std::vector<StatusCheck> parse_status_csv(std::string_view text);
std::vector<StatusCheck> read_status_checks(const fs::path& path);

enum class Metric { FOLLOWERS, FOLLOWING, TWEETS, LISTED, TWEETS_PER_DAY };
std::string_view to_string(Metric metric);
// Accepts followers_count / followers, following_count / following,
// tweet_count / tweets, listed_count / listed, tweets_per_day.
Metric parse_metric(std::string_view text);

// Whole days from creation to collection, floored, at least 1.
std::int64_t account_age_days(const AccountRecord& account, Timestamp collected_at);
double metric_value(const AccountRecord& account, Metric metric, Timestamp collected_at);
std::vector<double> metric_values(std::span<const AccountRecord> accounts, Metric metric, Timestamp collected_at);

struct MetricSummary {
  std::size_t count = 0;
  double mean = 0.0;
  double median = 0.0;  // mean of the two central values for even count
  double q1 = 0.0;      // linear interpolation between order statistics
  double q3 = 0.0;
  double min = 0.0;
  double max = 0.0;
};

// Throws Error on empty input.
MetricSummary summarize(std::span<const double> values);
MetricSummary metric_summary(std::span<const AccountRecord> accounts, Metric metric, Timestamp collected_at);

struct ValueSpike {
  double value = 0.0;
  std::size_t count = 0;
  double share = 0.0;
};

// Values whose exact frequency share is >= min_share, by share descending
// then value ascending.
std::vector<ValueSpike> exact_value_spikes(std::span<const double> values, double min_share);
std::vector<ValueSpike> exact_value_spikes(std::span<const AccountRecord> accounts, Metric metric, double min_share,
                                           Timestamp collected_at);

struct CreationWindow {
  Timestamp start{};
  Timestamp end{};  // exclusive
  std::size_t count = 0;
  std::size_t peak = 0;  // largest single-bin count inside the window
};

// Creation times are binned into UTC-aligned windows of the given length;
// bins with count >= min_count are reported, adjacent ones merged.
std::vector<CreationWindow> bulk_creation_windows(std::span<const AccountRecord> accounts,
                                                  std::chrono::seconds window, std::size_t min_count);

struct StatusShares {
  std::map<AccountStatus, std::size_t> counts;
  std::map<AccountStatus, double> shares;
  std::size_t total = 0;
};

// Latest check per account.
std::map<std::string, AccountStatus> latest_status(std::span<const StatusCheck> checks);
StatusShares status_shares(std::span<const StatusCheck> checks);
// Restricted to accounts of `group`; checks for unknown accounts are ignored.
StatusShares status_breakdown(std::span<const StatusCheck> checks, std::span<const AccountRecord> accounts,
                              AccountGroup group);

std::string metric_summary_to_json(const MetricSummary& summary);
std::string histogram_csv(std::span<const double> values, std::size_t bins);

}  // namespace ganwild

#endif  // GANWILD_ACCOUNTS_HPP_
