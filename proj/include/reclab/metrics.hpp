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
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "reclab/domain.hpp"

namespace reclab::metrics {

// Everything the metrics need from a split, precomputed once and shared by
// all recommenders of an experiment.
//
// Popularity is the number of training ratings of an item; freq(i) is that
// count divided by the training-set size. An item is "liked" by a user whose
// training rating is strictly above the threshold, and the similarity of two
// items is the cosine of their binary liker vectors (0 when either is empty).
// Items outside the training catalog have freq 0 and no likers.
class EvaluationContext {
 public:
  // Throws ValidationError when k < 1 or the training set is empty.
  static EvaluationContext build(const RatingSet& train, const RatingSet& test,
                                 double threshold, int k);

  int k() const { return k_; }
  double threshold() const { return threshold_; }

  // Every user with at least one test rating, sorted.
  const std::vector<UserId>& test_users() const { return test_users_; }
  // Items rated above the threshold in the test set.
  const std::unordered_set<ItemId>& relevant(const UserId& user) const;

  std::size_t train_item_count() const { return items_.size(); }
  bool in_train(const ItemId& item) const { return index_.contains(item); }
  std::vector<ItemId> train_items() const { return items_; }

  double freq(const ItemId& item) const;
  std::size_t popularity(const ItemId& item) const;
  // Sorted training-user indices of the users who liked the item.
  std::span<const std::uint32_t> likers(const ItemId& item) const;
  double similarity(const ItemId& a, const ItemId& b) const;

  // The k most popular training items, most popular first; ties broken by
  // item id.
  const std::vector<ItemId>& popular_topk() const { return popular_topk_; }
  bool is_popular(const ItemId& item) const {
    return popular_set_.contains(item);
  }

  // Sum over positions 1..k of 1/log2(i + 1).
  double ideal_dcg() const { return ideal_dcg_; }

 private:
  std::optional<std::size_t> index_of(const ItemId& item) const;

  int k_ = 1;
  double threshold_ = 0.0;
  std::vector<UserId> test_users_;
  std::unordered_map<UserId, std::unordered_set<ItemId>> relevant_;
  std::vector<ItemId> items_;
  std::unordered_map<ItemId, std::size_t> index_;
  std::vector<std::size_t> counts_;
  std::vector<double> freq_;
  std::vector<std::vector<std::uint32_t>> likers_;
  std::vector<ItemId> popular_topk_;
  std::unordered_set<ItemId> popular_set_;
  double ideal_dcg_ = 0.0;
};

inline EvaluationContext build_context(const RatingSet& train,
                                       const RatingSet& test, double threshold,
                                       int k) {
  return EvaluationContext::build(train, test, threshold, k);
}

// Each metric averages over ctx.test_users(). A user missing from `recs`
// counts as an empty list; entries for users outside the test set are
// ignored; only the first k items of a list are considered. Lists are assumed
// duplicate-free (see protocol::sanitize).
double coverage(const EvaluationContext& ctx, const RecommendationMap& recs);
double precision(const EvaluationContext& ctx, const RecommendationMap& recs);
double recall(const EvaluationContext& ctx, const RecommendationMap& recs);
double ndcg(const EvaluationContext& ctx, const RecommendationMap& recs);
double novelty(const EvaluationContext& ctx, const RecommendationMap& recs);
// nullopt when k == 1.
std::optional<double> diversity(const EvaluationContext& ctx,
                                const RecommendationMap& recs);
double serendipity(const EvaluationContext& ctx, const RecommendationMap& recs);

MetricsReport evaluate_all(const EvaluationContext& ctx,
                           const RecommendationMap& recs);

}  // namespace reclab::metrics
