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

// Writes a small MovieLens-100K-shaped ratings file (user \t item \t rating \t
// timestamp) with a popular head and clustered long tail. The bundled
// data/synthetic_ml100k.data was produced with the default arguments.
//
//   make_synthetic [output] [seed]

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace {

constexpr int kUsers = 250;
constexpr int kRatingsPerUser = 20;
constexpr int kHeadItems = 12;
constexpr int kClusters = 6;
constexpr int kItemsPerCluster = 65;
constexpr std::int64_t kFirstTimestamp = 874965758;

std::vector<double> zipf_weights(int n, double exponent) {
  std::vector<double> weights(n);
  for (int i = 0; i < n; ++i) weights[i] = 1.0 / std::pow(i + 1.0, exponent);
  return weights;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string output = argc > 1 ? argv[1] : "synthetic_ml100k.data";
  const std::uint64_t seed = argc > 2 ? std::stoull(argv[2]) : 20240607;
  std::mt19937_64 rng(seed);

  auto head_weights = zipf_weights(kHeadItems, 0.8);
  auto tail_weights = zipf_weights(kItemsPerCluster, 0.7);
  std::discrete_distribution<int> pick_head(head_weights.begin(), head_weights.end());
  std::discrete_distribution<int> pick_tail(tail_weights.begin(), tail_weights.end());
  std::uniform_int_distribution<int> pick_cluster(0, kClusters - 1);
  std::uniform_int_distribution<int> head_count(1, 4);
  std::bernoulli_distribution own_cluster(0.85);
  std::uniform_int_distribution<int> gap(60, 86400);

  // Item ids: 1..kHeadItems, then cluster c occupies a contiguous block.
  auto tail_item = [](int cluster, int rank) {
    return kHeadItems + 1 + cluster * kItemsPerCluster + rank;
  };
  auto rating_for = [&](double mean) {
    std::normal_distribution<double> noise(mean, 0.8);
    return static_cast<int>(std::clamp(std::lround(noise(rng)), 1L, 5L));
  };

  std::ofstream out(output);
  if (!out) {
    std::cerr << "cannot write " << output << "\n";
    return 1;
  }
  for (int user = 1; user <= kUsers; ++user) {
    const int cluster = pick_cluster(rng);
    std::set<int> items;
    std::vector<std::pair<int, int>> rated;  // item, rating
    const int heads = head_count(rng);
    while (static_cast<int>(items.size()) < heads) {
      const int item = 1 + pick_head(rng);
      if (items.insert(item).second) rated.emplace_back(item, rating_for(4.0));
    }
    while (static_cast<int>(items.size()) < kRatingsPerUser) {
      const bool own = own_cluster(rng);
      const int c = own ? cluster : pick_cluster(rng);
      const int item = tail_item(c, pick_tail(rng));
      if (items.insert(item).second) rated.emplace_back(item, rating_for(own ? 4.0 : 2.5));
    }
    std::int64_t ts = kFirstTimestamp + gap(rng) * static_cast<std::int64_t>(user);
    for (const auto& [item, rating] : rated) {
      ts += gap(rng);
      out << user << '\t' << item << '\t' << rating << '\t' << ts << '\n';
    }
  }
  return out ? 0 : 1;
}
