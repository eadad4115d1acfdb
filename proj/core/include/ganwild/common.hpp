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

#ifndef GANWILD_COMMON_HPP_
#define GANWILD_COMMON_HPP_

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ganwild {

namespace fs = std::filesystem;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when image bytes cannot be decoded. Kept distinct from detection
// outcomes so callers can tell "no face" apart from "no image".
class DecodeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

using Timestamp = std::chrono::sys_seconds;

// ISO-8601 UTC, e.g. "2023-02-16T08:00:00Z".
std::string format_timestamp(Timestamp t);
// Accepts "YYYY-MM-DD", "YYYY-MM-DDTHH:MM:SS" with optional fractional
// seconds and an optional "Z" or "+HH:MM"/"-HH:MM" offset.
Timestamp parse_timestamp(std::string_view text);
Timestamp now_utc();

std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(std::string_view bytes);

std::vector<std::uint8_t> read_file_bytes(const fs::path& path);
std::string read_file_text(const fs::path& path);
// Writes through a temporary sibling and renames it into place.
void write_file_atomic(const fs::path& path, std::span<const std::uint8_t> bytes);
void write_file_atomic(const fs::path& path, std::string_view text);

// splitmix64 finalizer; used to derive independent per-item seeds.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream);

// Seeded generator with distribution code written out explicitly, so the
// same seed reproduces the same draws with any standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();
  // Uniform on [0, 1).
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  // Uniform integer on the closed range [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  bool bernoulli(double p) { return uniform01() < p; }
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i) - 1));
      using std::swap;
      swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::string to_lower_ascii(std::string_view s);
std::string trim(std::string_view s);

}  // namespace ganwild

#endif  // GANWILD_COMMON_HPP_
