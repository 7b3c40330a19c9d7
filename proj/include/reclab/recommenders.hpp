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

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "reclab/domain.hpp"

namespace reclab::recommenders {

enum class Kind { kRandom, kMostPopular, kItemKnn, kUserKnn };

std::string_view to_string(Kind kind);
// Accepts "most-popular" as well as "most_popular" and so on; throws
// ValidationError listing the valid kinds otherwise.
Kind parse_kind(std::string_view name);
std::string valid_kind_names();

// Users considered by user-KNN when scoring items.
inline constexpr std::size_t kUserNeighbourhood = 80;

// A trained reference recommender.
//
// Every kind skips items the user rated in training and ranks candidates as
// follows:
//   random        uniform sample without replacement, seeded per user
//   most_popular  training rating count, descending
//   item_knn      sum of cosine similarities to the items the user liked
//   user_knn      sum of similarities of the 80 most similar users who liked
//                 the item
// KNN scores tie-break on popularity and then on item id, so a user without
// likes (including cold-start users) gets the most-popular list.
class Model {
 public:
  // Throws ValidationError on an empty training set.
  static Model train(Kind kind, const RatingSet& training_set, double threshold,
                     std::uint64_t seed);

  Model(Model&&) noexcept;
  Model& operator=(Model&&) noexcept;
  ~Model();

  // At most k items; shorter only when the candidates run out.
  RecommendationList recommend(const UserId& user, int k) const;

  Kind kind() const;
  double threshold() const;
  // Training items in lexicographic order.
  const std::vector<ItemId>& catalog() const;
  std::size_t popularity(const ItemId& item) const;
  bool seen(const UserId& user, const ItemId& item) const;
  // Cosine similarity of the binary liker vectors of two items.
  double item_similarity(const ItemId& a, const ItemId& b) const;
  // Cosine similarity of the binary liked-item vectors of two users.
  double user_similarity(const UserId& a, const UserId& b) const;

 private:
  struct Data;
  explicit Model(std::unique_ptr<Data> data);
  std::unique_ptr<Data> data_;
};

struct ServiceOptions {
  Kind kind = Kind::kMostPopular;
  std::uint64_t seed = 0;
  std::chrono::milliseconds fetch_timeout{std::chrono::minutes(5)};
};

// HTTP service exposing the five protocol resources around a single model
// slot. Training and recommendation run on worker threads so status polls
// answer immediately; creating a model replaces the previous one.
class RecommenderService {
 public:
  explicit RecommenderService(ServiceOptions options);
  ~RecommenderService();
  RecommenderService(const RecommenderService&) = delete;
  RecommenderService& operator=(const RecommenderService&) = delete;

  // Binds the listening socket; port 0 picks a free port. Returns the bound
  // port or nullopt when binding fails.
  std::optional<int> bind(const std::string& host, int port);
  // Serves on a background thread (after bind).
  void start();
  // Serves on the calling thread until stop() (after bind).
  void run();
  void stop();

 private:
  struct State;
  std::unique_ptr<State> state_;
};

}  // namespace reclab::recommenders
