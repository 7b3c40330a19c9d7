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

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "reclab/domain.hpp"

namespace reclab::testing {

struct MetricFixture {
  std::vector<Rating> train;
  std::vector<Rating> test;
  double threshold = 3;
  int k = 10;
  RecommendationMap recs;
};

// Random split-like fixture: at most 30 users and 60 items, values 1..5,
// lists that may be short, missing, padded with unknown items or addressed to
// users outside the test set.
inline MetricFixture random_metric_fixture(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto pick = [&](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };
  static constexpr int kValues[] = {1, 2, 3, 4, 5};
  static constexpr int kListSizes[] = {1, 2, 5, 10};

  MetricFixture f;
  f.k = kListSizes[pick(0, 3)];
  f.threshold = pick(0, 4);
  const int users = pick(2, 30);
  const int items = pick(2, 60);
  std::set<std::pair<int, int>> used;
  const int ratings = pick(users, users * 6);
  for (int n = 0; n < ratings; ++n) {
    const int u = pick(0, users - 1);
    const int i = pick(0, items - 1);
    if (!used.insert({u, i}).second) continue;
    auto rating = Rating::make("u" + std::to_string(u), "i" + std::to_string(i),
                               kValues[pick(0, 4)], pick(0, 1000));
    (pick(0, 4) == 0 ? f.test : f.train).push_back(std::move(rating));
  }
  if (f.train.empty()) f.train.push_back(Rating::make("u0", "i0", 5, 0));
  if (f.test.empty()) f.test.push_back(Rating::make("u1", "i1", 4, 1));

  std::set<std::string> test_users;
  for (const auto& r : f.test) test_users.insert(r.user);
  for (int u = 0; u < users + 2; ++u) {
    const auto user = "u" + std::to_string(u);
    if (pick(0, 9) == 0) continue;  // missing list
    std::vector<int> pool(items + 3);
    for (int i = 0; i < items + 3; ++i) pool[i] = i;  // a few unknown items
    std::shuffle(pool.begin(), pool.end(), rng);
    const int length = pick(0, f.k + 2);
    std::vector<ItemId> list;
    for (int i = 0; i < length && i < static_cast<int>(pool.size()); ++i) {
      list.push_back("i" + std::to_string(pool[i]));
    }
    f.recs[user] = std::move(list);
  }
  return f;
}

inline RatingSet as_set(const std::vector<Rating>& ratings) {
  return RatingSet::from_ratings(ratings);
}

}  // namespace reclab::testing
