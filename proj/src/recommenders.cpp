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

#include "reclab/recommenders.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "internal.hpp"

namespace reclab::recommenders {

std::string_view to_string(Kind kind) {
  switch (kind) {
    case Kind::kRandom:
      return "random";
    case Kind::kMostPopular:
      return "most_popular";
    case Kind::kItemKnn:
      return "item_knn";
    case Kind::kUserKnn:
      return "user_knn";
  }
  return "unknown";
}

std::string valid_kind_names() {
  return "random, most-popular, item-knn, user-knn";
}

Kind parse_kind(std::string_view name) {
  std::string normalized(name);
  std::replace(normalized.begin(), normalized.end(), '-', '_');
  for (auto kind : {Kind::kRandom, Kind::kMostPopular, Kind::kItemKnn,
                    Kind::kUserKnn}) {
    if (to_string(kind) == normalized) return kind;
  }
  throw ValidationError("unknown recommender kind '" + std::string(name) +
                        "' (valid: " + valid_kind_names() + ")");
}

namespace {

using Index = std::uint32_t;

double cosine(std::size_t common, std::size_t left, std::size_t right) {
  if (left == 0 || right == 0) return 0.0;
  return static_cast<double>(common) /
         std::sqrt(static_cast<double>(left) * static_cast<double>(right));
}

std::size_t intersection_size(const std::vector<Index>& a,
                              const std::vector<Index>& b) {
  std::size_t count = 0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++count;
      ++i;
      ++j;
    }
  }
  return count;
}

}  // namespace

struct Model::Data {
  Kind kind = Kind::kRandom;
  double threshold = 0.0;
  std::uint64_t seed = 0;

  std::vector<ItemId> items;  // lexicographic
  std::unordered_map<ItemId, Index> item_index;
  std::vector<UserId> users;  // lexicographic
  std::unordered_map<UserId, Index> user_index;

  std::vector<std::size_t> popularity;
  std::vector<Index> by_popularity;        // item indices, most popular first
  std::vector<std::vector<Index>> seen;    // per user, sorted item indices
  std::vector<std::vector<Index>> liked;   // per user, sorted item indices
  std::vector<std::vector<Index>> likers;  // per item, sorted user indices
  // item_knn only: co-like counts, items.size() squared.
  std::vector<std::uint32_t> co_likes;

  std::optional<Index> user_of(const UserId& user) const {
    const auto it = user_index.find(user);
    if (it == user_index.end()) return std::nullopt;
    return it->second;
  }
  std::optional<Index> item_of(const ItemId& item) const {
    const auto it = item_index.find(item);
    if (it == item_index.end()) return std::nullopt;
    return it->second;
  }

  double item_cosine(Index a, Index b) const {
    const auto n = items.size();
    return cosine(co_likes[static_cast<std::size_t>(a) * n + b],
                  likers[a].size(), likers[b].size());
  }

  // Unseen candidates ordered by (score desc, popularity desc, id asc).
  std::vector<ItemId> rank(const std::vector<double>& score,
                           const std::vector<bool>& excluded, int k) const {
    std::vector<Index> candidates;
    for (Index i = 0; i < items.size(); ++i) {
      if (!excluded[i]) candidates.push_back(i);
    }
    const auto take = std::min(candidates.size(), static_cast<std::size_t>(k));
    std::partial_sort(candidates.begin(), candidates.begin() + take,
                      candidates.end(), [&](Index a, Index b) {
                        if (score[a] != score[b]) return score[a] > score[b];
                        if (popularity[a] != popularity[b]) {
                          return popularity[a] > popularity[b];
                        }
                        return a < b;
                      });
    std::vector<ItemId> out;
    out.reserve(take);
    for (std::size_t i = 0; i < take; ++i) out.push_back(items[candidates[i]]);
    return out;
  }
};

Model::Model(std::unique_ptr<Data> data) : data_(std::move(data)) {}
Model::Model(Model&&) noexcept = default;
Model& Model::operator=(Model&&) noexcept = default;
Model::~Model() = default;

Model Model::train(Kind kind, const RatingSet& training_set, double threshold,
                   std::uint64_t seed) {
  if (training_set.empty()) throw ValidationError("the training set is empty");
  auto data = std::make_unique<Data>();
  data->kind = kind;
  data->threshold = threshold;
  data->seed = seed;

  for (const auto& rating : training_set) {
    data->items.push_back(rating.item);
    data->users.push_back(rating.user);
  }
  for (auto* ids : {&data->items, &data->users}) {
    std::sort(ids->begin(), ids->end());
    ids->erase(std::unique(ids->begin(), ids->end()), ids->end());
  }
  for (Index i = 0; i < data->items.size(); ++i) data->item_index[data->items[i]] = i;
  for (Index u = 0; u < data->users.size(); ++u) data->user_index[data->users[u]] = u;

  data->popularity.assign(data->items.size(), 0);
  data->seen.resize(data->users.size());
  data->liked.resize(data->users.size());
  data->likers.resize(data->items.size());
  for (const auto& rating : training_set) {
    const Index item = data->item_index.at(rating.item);
    const Index user = data->user_index.at(rating.user);
    ++data->popularity[item];
    data->seen[user].push_back(item);
    if (rating.value > threshold) {
      data->liked[user].push_back(item);
      data->likers[item].push_back(user);
    }
  }
  for (auto* lists : {&data->seen, &data->liked, &data->likers}) {
    for (auto& list : *lists) std::sort(list.begin(), list.end());
  }

  data->by_popularity.resize(data->items.size());
  std::iota(data->by_popularity.begin(), data->by_popularity.end(), Index{0});
  std::stable_sort(data->by_popularity.begin(), data->by_popularity.end(),
                   [&](Index a, Index b) {
                     return data->popularity[a] > data->popularity[b];
                   });

  if (kind == Kind::kItemKnn) {
    const auto n = data->items.size();
    data->co_likes.assign(n * n, 0);
    for (const auto& liked : data->liked) {
      for (const Index a : liked) {
        auto* row = data->co_likes.data() + static_cast<std::size_t>(a) * n;
        for (const Index b : liked) ++row[b];
      }
    }
  }
  return Model(std::move(data));
}

RecommendationList Model::recommend(const UserId& user, int k) const {
  const Data& d = *data_;
  RecommendationList out{user, {}};
  if (k <= 0) return out;

  const auto user_index = d.user_of(user);
  std::vector<bool> excluded(d.items.size(), false);
  if (user_index) {
    for (const Index item : d.seen[*user_index]) excluded[item] = true;
  }

  switch (d.kind) {
    case Kind::kRandom: {
      std::vector<Index> candidates;
      for (Index i = 0; i < d.items.size(); ++i) {
        if (!excluded[i]) candidates.push_back(i);
      }
      const auto user_hash = internal::fnv1a(user);
      std::seed_seq seq{static_cast<std::uint32_t>(d.seed),
                        static_cast<std::uint32_t>(d.seed >> 32),
                        static_cast<std::uint32_t>(user_hash),
                        static_cast<std::uint32_t>(user_hash >> 32)};
      std::mt19937_64 rng(seq);
      const auto take = std::min(candidates.size(), static_cast<std::size_t>(k));
      for (std::size_t i = 0; i < take; ++i) {
        const auto j = i + internal::uniform_index(rng, candidates.size() - i);
        std::swap(candidates[i], candidates[j]);
        out.items.push_back(d.items[candidates[i]]);
      }
      return out;
    }
    case Kind::kMostPopular: {
      for (const Index item : d.by_popularity) {
        if (out.items.size() == static_cast<std::size_t>(k)) break;
        if (!excluded[item]) out.items.push_back(d.items[item]);
      }
      return out;
    }
    case Kind::kItemKnn: {
      std::vector<double> score(d.items.size(), 0.0);
      if (user_index) {
        for (const Index liked : d.liked[*user_index]) {
          for (Index i = 0; i < d.items.size(); ++i) {
            score[i] += d.item_cosine(i, liked);
          }
        }
      }
      out.items = d.rank(score, excluded, k);
      return out;
    }
    case Kind::kUserKnn: {
      std::vector<double> score(d.items.size(), 0.0);
      if (user_index && !d.liked[*user_index].empty()) {
        const auto& mine = d.liked[*user_index];
        std::vector<std::uint32_t> common(d.users.size(), 0);
        for (const Index item : mine) {
          for (const Index other : d.likers[item]) ++common[other];
        }
        std::vector<std::pair<double, Index>> neighbours;
        for (Index v = 0; v < d.users.size(); ++v) {
          if (v == *user_index || common[v] == 0) continue;
          neighbours.emplace_back(
              cosine(common[v], mine.size(), d.liked[v].size()), v);
        }
        const auto take = std::min(neighbours.size(), kUserNeighbourhood);
        std::partial_sort(neighbours.begin(), neighbours.begin() + take,
                          neighbours.end(), [](const auto& a, const auto& b) {
                            if (a.first != b.first) return a.first > b.first;
                            return a.second < b.second;
                          });
        for (std::size_t n = 0; n < take; ++n) {
          const auto [similarity, v] = neighbours[n];
          for (const Index item : d.liked[v]) score[item] += similarity;
        }
      }
      out.items = d.rank(score, excluded, k);
      return out;
    }
  }
  return out;
}

Kind Model::kind() const { return data_->kind; }
double Model::threshold() const { return data_->threshold; }
const std::vector<ItemId>& Model::catalog() const { return data_->items; }

std::size_t Model::popularity(const ItemId& item) const {
  const auto index = data_->item_of(item);
  return index ? data_->popularity[*index] : 0;
}

bool Model::seen(const UserId& user, const ItemId& item) const {
  const auto u = data_->user_of(user);
  const auto i = data_->item_of(item);
  if (!u || !i) return false;
  return std::binary_search(data_->seen[*u].begin(), data_->seen[*u].end(), *i);
}

double Model::item_similarity(const ItemId& a, const ItemId& b) const {
  const auto i = data_->item_of(a);
  const auto j = data_->item_of(b);
  if (!i || !j) return 0.0;
  return cosine(intersection_size(data_->likers[*i], data_->likers[*j]),
                data_->likers[*i].size(), data_->likers[*j].size());
}

double Model::user_similarity(const UserId& a, const UserId& b) const {
  const auto u = data_->user_of(a);
  const auto v = data_->user_of(b);
  if (!u || !v) return 0.0;
  return cosine(intersection_size(data_->liked[*u], data_->liked[*v]),
                data_->liked[*u].size(), data_->liked[*v].size());
}

}  // namespace reclab::recommenders
