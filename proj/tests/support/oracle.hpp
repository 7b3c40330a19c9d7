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

// Brute-force metric definitions used as a test oracle. Written directly from
// the formulas with plain containers and long double accumulation; it shares
// no code with the engine.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "reclab/domain.hpp"

namespace reclab::testing {

struct OracleReport {
  long double coverage = 0;
  long double precision = 0;
  long double recall = 0;
  long double ndcg = 0;
  long double novelty = 0;
  std::optional<long double> diversity;
  long double serendipity = 0;
};

inline OracleReport oracle_evaluate(const std::vector<Rating>& train,
                                    const std::vector<Rating>& test,
                                    double threshold, int k,
                                    const std::map<std::string, std::vector<std::string>>& recs) {
  std::set<std::string> users;
  for (const auto& r : test) users.insert(r.user);

  std::set<std::string> catalog;
  for (const auto& r : train) catalog.insert(r.item);

  auto count = [&](const std::string& item) {
    long double c = 0;
    for (const auto& r : train) c += r.item == item ? 1 : 0;
    return c;
  };
  auto freq = [&](const std::string& item) {
    return count(item) / static_cast<long double>(train.size());
  };
  auto likers = [&](const std::string& item) {
    std::set<std::string> out;
    for (const auto& r : train) {
      if (r.item == item && r.value > threshold) out.insert(r.user);
    }
    return out;
  };
  auto sim = [&](const std::string& a, const std::string& b) -> long double {
    const auto la = likers(a);
    const auto lb = likers(b);
    if (la.empty() || lb.empty()) return 0;
    long double common = 0;
    for (const auto& u : la) common += lb.count(u);
    return common / std::sqrt(static_cast<long double>(la.size()) *
                              static_cast<long double>(lb.size()));
  };
  auto liked_in_test = [&](const std::string& user, const std::string& item) {
    for (const auto& r : test) {
      if (r.user == user && r.item == item && r.value > threshold) return true;
    }
    return false;
  };
  auto ref_size = [&](const std::string& user) {
    long double n = 0;
    for (const auto& r : test) n += (r.user == user && r.value > threshold) ? 1 : 0;
    return n;
  };

  std::vector<std::pair<long double, std::string>> ranked;
  for (const auto& item : catalog) ranked.emplace_back(-count(item), item);
  std::sort(ranked.begin(), ranked.end());
  std::set<std::string> prim;
  for (std::size_t i = 0; i < ranked.size() && i < static_cast<std::size_t>(k); ++i) {
    prim.insert(ranked[i].second);
  }

  long double idcg = 0;
  for (int i = 1; i <= k; ++i) idcg += 1.0L / std::log2(static_cast<long double>(i + 1));

  OracleReport out;
  std::set<std::string> recommended;
  long double diversity_sum = 0;
  for (const auto& user : users) {
    std::vector<std::string> list;
    if (auto it = recs.find(user); it != recs.end()) list = it->second;
    if (list.size() > static_cast<std::size_t>(k)) list.resize(k);

    long double hits = 0, unexpected_hits = 0, dcg = 0, surprise = 0, dissimilar = 0;
    for (std::size_t i = 0; i < list.size(); ++i) {
      const auto& item = list[i];
      if (catalog.count(item)) recommended.insert(item);
      if (liked_in_test(user, item)) {
        hits += 1;
        dcg += 1.0L / std::log2(static_cast<long double>(i + 2));
        if (!prim.count(item)) unexpected_hits += 1;
      }
      const auto f = freq(item);
      if (f > 0) surprise -= std::log2(f);
      for (std::size_t j = i + 1; j < list.size(); ++j) dissimilar += 1 - sim(item, list[j]);
    }
    out.precision += hits / k;
    const auto refs = ref_size(user);
    out.recall += refs > 0 ? hits / refs : 0;
    out.ndcg += dcg / idcg;
    out.novelty += surprise / k;
    out.serendipity += unexpected_hits / k;
    if (k > 1) diversity_sum += dissimilar / (static_cast<long double>(k) * (k - 1));
  }
  const auto n = static_cast<long double>(users.size());
  if (n > 0) {
    out.precision /= n;
    out.recall /= n;
    out.ndcg /= n;
    out.novelty /= n;
    out.serendipity /= n;
    diversity_sum /= n;
  }
  if (k > 1) out.diversity = diversity_sum;
  out.coverage = catalog.empty() ? 0
                                 : static_cast<long double>(recommended.size()) /
                                       static_cast<long double>(catalog.size());
  return out;
}

}  // namespace reclab::testing
