// Copyright 2026 The reclab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace reclab {

using UserId = std::string;
using ItemId = std::string;

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

// One (user, item, value, optional timestamp) feedback event.
struct Rating {
  UserId user;
  ItemId item;
  double value = 0.0;
  std::optional<std::int64_t> timestamp;

  // Throws ValidationError when user/item are empty, value is not finite or
  // the timestamp is negative.
  static Rating make(UserId user, ItemId item, double value,
                     std::optional<std::int64_t> timestamp = std::nullopt);

  friend bool operator==(const Rating&, const Rating&) = default;
};

// Ordered ratings with at most one entry per (user, item) pair.
class RatingSet {
 public:
  RatingSet() = default;

  // Collapses duplicate (user, item) pairs, keeping the last occurrence.
  // The number of discarded entries is written to `duplicates` when given.
  static RatingSet from_ratings(std::vector<Rating> ratings,
                                std::size_t* duplicates = nullptr);

  const std::vector<Rating>& ratings() const { return ratings_; }
  std::size_t size() const { return ratings_.size(); }
  bool empty() const { return ratings_.empty(); }
  auto begin() const { return ratings_.begin(); }
  auto end() const { return ratings_.end(); }
  const Rating& operator[](std::size_t i) const { return ratings_[i]; }

  friend bool operator==(const RatingSet&, const RatingSet&) = default;

 private:
  explicit RatingSet(std::vector<Rating> ratings)
      : ratings_(std::move(ratings)) {}

  // Only split routines may build a RatingSet from a known-unique subset.
  friend struct RatingSetAccess;

  std::vector<Rating> ratings_;
};

enum class SplitMethod { kRandom, kTimestamp };

std::string_view to_string(SplitMethod method);
// Throws ValidationError on unknown names.
SplitMethod parse_split_method(std::string_view name);

struct ExperimentConfig {
  std::string dataset_id;
  SplitMethod split_method = SplitMethod::kRandom;
  double test_fraction = 0.2;
  int k = 10;
  double rating_threshold = 3.0;
  std::vector<std::string> recommender_ids;
  std::uint64_t seed = 0;

  friend bool operator==(const ExperimentConfig&,
                         const ExperimentConfig&) = default;
};

// Returns one human-readable message per violated invariant; empty when the
// configuration is acceptable.
std::vector<std::string> validate_config(const ExperimentConfig& config);

struct RecommendationList {
  UserId user;
  std::vector<ItemId> items;

  friend bool operator==(const RecommendationList&,
                         const RecommendationList&) = default;
};

// Lists keyed by user id.
using RecommendationMap = std::map<UserId, std::vector<ItemId>>;

struct MetricsReport {
  double coverage = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double ndcg = 0.0;
  double novelty = 0.0;
  // Absent when k == 1: pairwise diversity is undefined for single items.
  std::optional<double> diversity;
  double serendipity = 0.0;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

// Metric names in presentation order.
inline constexpr std::string_view kMetricNames[] = {
    "coverage", "precision", "recall",     "ndcg",
    "novelty",  "diversity", "serendipity"};

void to_json(nlohmann::json& j, const ExperimentConfig& config);
// Throws ValidationError on missing fields or wrong types.
void from_json(const nlohmann::json& j, ExperimentConfig& config);

void to_json(nlohmann::json& j, const MetricsReport& report);
void from_json(const nlohmann::json& j, MetricsReport& report);

}  // namespace reclab
