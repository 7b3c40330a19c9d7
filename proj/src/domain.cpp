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

#include "reclab/domain.hpp"

#include <cmath>
#include <set>
#include <unordered_map>

#include "internal.hpp"

namespace reclab {

Rating Rating::make(UserId user, ItemId item, double value,
                    std::optional<std::int64_t> timestamp) {
  if (user.empty()) throw ValidationError("rating has an empty user id");
  if (item.empty()) throw ValidationError("rating has an empty item id");
  if (!std::isfinite(value)) {
    throw ValidationError("rating value for (" + user + ", " + item +
                          ") is not finite");
  }
  if (timestamp && *timestamp < 0) {
    throw ValidationError("rating timestamp for (" + user + ", " + item +
                          ") is negative");
  }
  return Rating{std::move(user), std::move(item), value, timestamp};
}

RatingSet RatingSet::from_ratings(std::vector<Rating> ratings,
                                  std::size_t* duplicates) {
  // Index of the last occurrence of every (user, item) pair.
  std::unordered_map<std::string, std::size_t> last;
  last.reserve(ratings.size());
  for (std::size_t i = 0; i < ratings.size(); ++i) {
    std::string key = ratings[i].user;
    key.push_back('\0');
    key += ratings[i].item;
    last[std::move(key)] = i;
  }
  if (duplicates) *duplicates = ratings.size() - last.size();
  if (last.size() == ratings.size()) return RatingSet(std::move(ratings));

  std::vector<bool> keep(ratings.size(), false);
  for (const auto& [key, index] : last) keep[index] = true;
  std::vector<Rating> unique;
  unique.reserve(last.size());
  for (std::size_t i = 0; i < ratings.size(); ++i) {
    if (keep[i]) unique.push_back(std::move(ratings[i]));
  }
  return RatingSet(std::move(unique));
}

std::string_view to_string(SplitMethod method) {
  switch (method) {
    case SplitMethod::kRandom:
      return "random";
    case SplitMethod::kTimestamp:
      return "timestamp";
  }
  return "unknown";
}

SplitMethod parse_split_method(std::string_view name) {
  if (name == "random") return SplitMethod::kRandom;
  if (name == "timestamp") return SplitMethod::kTimestamp;
  throw ValidationError("unknown split method '" + std::string(name) +
                        "' (expected random or timestamp)");
}

std::vector<std::string> validate_config(const ExperimentConfig& config) {
  std::vector<std::string> violations;
  if (config.dataset_id.empty()) {
    violations.emplace_back("dataset_id must not be empty");
  }
  if (!(config.test_fraction > 0.0 && config.test_fraction < 1.0)) {
    violations.emplace_back("test_fraction must lie strictly between 0 and 1");
  }
  if (config.k < 1) violations.emplace_back("k must be at least 1");
  if (!std::isfinite(config.rating_threshold)) {
    violations.emplace_back("rating_threshold must be finite");
  }
  if (config.recommender_ids.empty()) {
    violations.emplace_back("recommender_ids must not be empty");
  } else {
    std::set<std::string> seen;
    for (const auto& id : config.recommender_ids) {
      if (id.empty()) {
        violations.emplace_back("recommender_ids contains an empty id");
      } else if (!seen.insert(id).second) {
        violations.emplace_back("recommender_ids contains duplicate '" + id +
                                "'");
      }
    }
  }
  return violations;
}

void to_json(nlohmann::json& j, const ExperimentConfig& config) {
  j = nlohmann::json{{"dataset_id", config.dataset_id},
                     {"split_method", std::string(to_string(config.split_method))},
                     {"test_fraction", config.test_fraction},
                     {"k", config.k},
                     {"rating_threshold", config.rating_threshold},
                     {"recommender_ids", config.recommender_ids},
                     {"seed", config.seed}};
}

void from_json(const nlohmann::json& j, ExperimentConfig& config) {
  if (!j.is_object()) throw ValidationError("experiment config must be an object");
  try {
    ExperimentConfig out;
    out.dataset_id = j.at("dataset_id").get<std::string>();
    out.split_method =
        parse_split_method(j.value("split_method", std::string("random")));
    out.test_fraction = j.value("test_fraction", 0.2);
    out.k = j.value("k", 10);
    out.rating_threshold = j.value("rating_threshold", 3.0);
    out.recommender_ids =
        j.at("recommender_ids").get<std::vector<std::string>>();
    out.seed = j.value("seed", std::uint64_t{0});
    config = std::move(out);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed experiment config: ") +
                          e.what());
  }
}

void to_json(nlohmann::json& j, const MetricsReport& report) {
  j = nlohmann::json{{"coverage", report.coverage},
                     {"precision", report.precision},
                     {"recall", report.recall},
                     {"ndcg", report.ndcg},
                     {"novelty", report.novelty},
                     {"diversity", nullptr},
                     {"serendipity", report.serendipity}};
  if (report.diversity) j["diversity"] = *report.diversity;
}

void from_json(const nlohmann::json& j, MetricsReport& report) {
  report.coverage = j.at("coverage").get<double>();
  report.precision = j.at("precision").get<double>();
  report.recall = j.at("recall").get<double>();
  report.ndcg = j.at("ndcg").get<double>();
  report.novelty = j.at("novelty").get<double>();
  const auto& diversity = j.at("diversity");
  report.diversity = diversity.is_null()
                         ? std::nullopt
                         : std::optional<double>(diversity.get<double>());
  report.serendipity = j.at("serendipity").get<double>();
}

}  // namespace reclab
