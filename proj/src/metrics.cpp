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

#include "reclab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <span>

#include <spdlog/spdlog.h>

#include "internal.hpp"

namespace reclab::metrics {

namespace {

const std::unordered_set<ItemId> kNoItems;
const std::vector<ItemId> kEmptyList;

// The first k entries of the user's list, or an empty span.
std::span<const ItemId> top_k(const EvaluationContext& ctx,
                              const RecommendationMap& recs,
                              const UserId& user) {
  const auto it = recs.find(user);
  if (it == recs.end()) return kEmptyList;
  const auto size = std::min(it->second.size(), static_cast<std::size_t>(ctx.k()));
  return std::span<const ItemId>(it->second.data(), size);
}

// Mean over test users of `term(user, list)`, summed in user order.
template <typename Term>
double mean_over_users(const EvaluationContext& ctx,
                       const RecommendationMap& recs, Term term) {
  const auto& users = ctx.test_users();
  if (users.empty()) return 0.0;
  internal::CompensatedSum sum;
  for (const auto& user : users) sum.add(term(user, top_k(ctx, recs, user)));
  return sum.value() / static_cast<double>(users.size());
}

std::size_t hits(std::span<const ItemId> list,
                 const std::unordered_set<ItemId>& relevant) {
  return static_cast<std::size_t>(std::count_if(
      list.begin(), list.end(),
      [&](const ItemId& item) { return relevant.contains(item); }));
}

std::size_t intersection_size(std::span<const std::uint32_t> a,
                              std::span<const std::uint32_t> b) {
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

EvaluationContext EvaluationContext::build(const RatingSet& train,
                                           const RatingSet& test,
                                           double threshold, int k) {
  if (k < 1) throw ValidationError("k must be at least 1");
  if (train.empty()) throw ValidationError("the training set is empty");

  EvaluationContext ctx;
  ctx.k_ = k;
  ctx.threshold_ = threshold;

  std::unordered_map<UserId, std::uint32_t> user_index;
  for (const auto& rating : train) {
    auto [it, inserted] = ctx.index_.try_emplace(rating.item, ctx.items_.size());
    if (inserted) {
      ctx.items_.push_back(rating.item);
      ctx.counts_.push_back(0);
      ctx.likers_.emplace_back();
    }
    const std::size_t item = it->second;
    ++ctx.counts_[item];
    if (rating.value > threshold) {
      const auto [user, _] = user_index.try_emplace(
          rating.user, static_cast<std::uint32_t>(user_index.size()));
      ctx.likers_[item].push_back(user->second);
    }
  }
  // RatingSet holds one rating per (user, item), so liker lists only need
  // sorting.
  for (auto& likers : ctx.likers_) std::sort(likers.begin(), likers.end());

  ctx.freq_.resize(ctx.items_.size());
  const double total = static_cast<double>(train.size());
  for (std::size_t i = 0; i < ctx.items_.size(); ++i) {
    ctx.freq_[i] = static_cast<double>(ctx.counts_[i]) / total;
  }

  std::vector<std::size_t> order(ctx.items_.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const auto popular_count = std::min(order.size(), static_cast<std::size_t>(k));
  std::partial_sort(order.begin(), order.begin() + popular_count, order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (ctx.counts_[a] != ctx.counts_[b]) {
                        return ctx.counts_[a] > ctx.counts_[b];
                      }
                      return ctx.items_[a] < ctx.items_[b];
                    });
  for (std::size_t i = 0; i < popular_count; ++i) {
    ctx.popular_topk_.push_back(ctx.items_[order[i]]);
    ctx.popular_set_.insert(ctx.items_[order[i]]);
  }

  for (const auto& rating : test) {
    auto& relevant = ctx.relevant_[rating.user];
    if (rating.value > threshold) relevant.insert(rating.item);
  }
  ctx.test_users_.reserve(ctx.relevant_.size());
  for (const auto& [user, _] : ctx.relevant_) ctx.test_users_.push_back(user);
  std::sort(ctx.test_users_.begin(), ctx.test_users_.end());

  internal::CompensatedSum ideal;
  for (int i = 1; i <= k; ++i) ideal.add(1.0 / std::log2(i + 1.0));
  ctx.ideal_dcg_ = ideal.value();
  return ctx;
}

const std::unordered_set<ItemId>& EvaluationContext::relevant(
    const UserId& user) const {
  const auto it = relevant_.find(user);
  return it == relevant_.end() ? kNoItems : it->second;
}

std::optional<std::size_t> EvaluationContext::index_of(const ItemId& item) const {
  const auto it = index_.find(item);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

double EvaluationContext::freq(const ItemId& item) const {
  const auto index = index_of(item);
  return index ? freq_[*index] : 0.0;
}

std::size_t EvaluationContext::popularity(const ItemId& item) const {
  const auto index = index_of(item);
  return index ? counts_[*index] : 0;
}

std::span<const std::uint32_t> EvaluationContext::likers(
    const ItemId& item) const {
  const auto index = index_of(item);
  if (!index) return {};
  return likers_[*index];
}

double EvaluationContext::similarity(const ItemId& a, const ItemId& b) const {
  const auto left = likers(a);
  const auto right = likers(b);
  if (left.empty() || right.empty()) return 0.0;
  const auto common = intersection_size(left, right);
  return static_cast<double>(common) /
         std::sqrt(static_cast<double>(left.size()) *
                   static_cast<double>(right.size()));
}

double coverage(const EvaluationContext& ctx, const RecommendationMap& recs) {
  std::unordered_set<ItemId> suggested;
  for (const auto& user : ctx.test_users()) {
    for (const auto& item : top_k(ctx, recs, user)) {
      if (ctx.in_train(item)) suggested.insert(item);
    }
  }
  return static_cast<double>(suggested.size()) /
         static_cast<double>(ctx.train_item_count());
}

double precision(const EvaluationContext& ctx, const RecommendationMap& recs) {
  const double k = ctx.k();
  return mean_over_users(ctx, recs, [&](const UserId& user, auto list) {
    return static_cast<double>(hits(list, ctx.relevant(user))) / k;
  });
}

double recall(const EvaluationContext& ctx, const RecommendationMap& recs) {
  return mean_over_users(ctx, recs, [&](const UserId& user, auto list) {
    const auto& relevant = ctx.relevant(user);
    if (relevant.empty()) return 0.0;
    return static_cast<double>(hits(list, relevant)) /
           static_cast<double>(relevant.size());
  });
}

double ndcg(const EvaluationContext& ctx, const RecommendationMap& recs) {
  return mean_over_users(ctx, recs, [&](const UserId& user, auto list) {
    const auto& relevant = ctx.relevant(user);
    internal::CompensatedSum dcg;
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (relevant.contains(list[i])) dcg.add(1.0 / std::log2(i + 2.0));
    }
    return dcg.value() / ctx.ideal_dcg();
  });
}

double novelty(const EvaluationContext& ctx, const RecommendationMap& recs) {
  const double k = ctx.k();
  return mean_over_users(ctx, recs, [&](const UserId&, auto list) {
    internal::CompensatedSum sum;
    for (const auto& item : list) {
      const double f = ctx.freq(item);
      if (f > 0.0) sum.add(-std::log2(f));  // log2(0) is taken as 0
    }
    return sum.value() / k;
  });
}

std::optional<double> diversity(const EvaluationContext& ctx,
                                const RecommendationMap& recs) {
  if (ctx.k() < 2) return std::nullopt;
  const double pairs = static_cast<double>(ctx.k()) * (ctx.k() - 1);
  std::size_t empty_lists = 0;
  const double value = mean_over_users(ctx, recs, [&](const UserId&, auto list) {
    if (list.empty()) ++empty_lists;
    internal::CompensatedSum sum;
    for (std::size_t i = 0; i < list.size(); ++i) {
      for (std::size_t j = i + 1; j < list.size(); ++j) {
        sum.add(1.0 - ctx.similarity(list[i], list[j]));
      }
    }
    return sum.value() / pairs;
  });
  if (empty_lists > 0) {
    spdlog::warn("diversity: {} of {} test users have empty lists and count as 0",
                 empty_lists, ctx.test_users().size());
  }
  return value;
}

double serendipity(const EvaluationContext& ctx, const RecommendationMap& recs) {
  const double k = ctx.k();
  return mean_over_users(ctx, recs, [&](const UserId& user, auto list) {
    const auto& relevant = ctx.relevant(user);
    const auto unexpected = std::count_if(
        list.begin(), list.end(), [&](const ItemId& item) {
          return !ctx.is_popular(item) && relevant.contains(item);
        });
    return static_cast<double>(unexpected) / k;
  });
}

MetricsReport evaluate_all(const EvaluationContext& ctx,
                           const RecommendationMap& recs) {
  MetricsReport report;
  report.coverage = coverage(ctx, recs);
  report.precision = precision(ctx, recs);
  report.recall = recall(ctx, recs);
  report.ndcg = ndcg(ctx, recs);
  report.novelty = novelty(ctx, recs);
  report.diversity = diversity(ctx, recs);
  report.serendipity = serendipity(ctx, recs);
  return report;
}

}  // namespace reclab::metrics
