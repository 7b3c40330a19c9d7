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

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "reclab/metrics.hpp"
#include "support/fixtures.hpp"
#include "support/oracle.hpp"

namespace reclab::metrics {
namespace {

using reclab::testing::as_set;
using reclab::testing::oracle_evaluate;
using reclab::testing::random_metric_fixture;

RatingSet ratings(std::initializer_list<std::tuple<const char*, const char*, double>> list) {
  std::vector<Rating> out;
  for (const auto& [u, i, v] : list) out.push_back(Rating::make(u, i, v));
  return RatingSet::from_ratings(std::move(out));
}

TEST(EvaluationContext, FrequencyAndLikes) {
  const auto train = ratings({{"u", "a", 5}, {"v", "a", 1}, {"u", "b", 2}, {"v", "c", 3}});
  const auto ctx = build_context(train, ratings({{"u", "d", 5}}), 3, 2);
  EXPECT_DOUBLE_EQ(ctx.freq("a"), 0.5);
  EXPECT_DOUBLE_EQ(ctx.freq("zzz"), 0.0);
  EXPECT_EQ(ctx.likers("a").size(), 1u);
  EXPECT_TRUE(ctx.likers("b").empty());
  double total = 0;
  for (const auto& item : ctx.train_items()) total += ctx.freq(item);
  EXPECT_NEAR(total, 1.0, 1e-9);
}

TEST(EvaluationContext, NoLikesBelowThreshold) {
  const auto ctx =
      build_context(ratings({{"u", "a", 3}, {"v", "b", 1}}), ratings({{"u", "c", 1}}), 3, 1);
  EXPECT_TRUE(ctx.likers("a").empty());
  EXPECT_TRUE(ctx.likers("b").empty());
}

TEST(EvaluationContext, PopularTiesAreLexicographic) {
  const auto ctx = build_context(
      ratings({{"u", "b", 1}, {"v", "b", 1}, {"u", "c", 1}, {"v", "a", 1}, {"w", "z", 1}}),
      ratings({{"u", "d", 5}}), 3, 3);
  EXPECT_EQ(ctx.popular_topk(), (std::vector<ItemId>{"b", "a", "c"}));
}

TEST(EvaluationContext, RejectsBadInputs) {
  EXPECT_THROW(build_context(RatingSet{}, ratings({{"u", "a", 5}}), 3, 2), ValidationError);
  EXPECT_THROW(build_context(ratings({{"u", "a", 5}}), RatingSet{}, 3, 0), ValidationError);
}

TEST(Coverage, Examples) {
  const auto train = ratings({{"x", "a", 1}, {"x", "b", 1}, {"x", "c", 1}, {"x", "d", 1}});
  const auto ctx = build_context(train, ratings({{"u", "e", 5}, {"v", "e", 5}}), 3, 2);
  EXPECT_DOUBLE_EQ(coverage(ctx, {{"u", {"a"}}, {"v", {"b", "zzz"}}}), 0.5);
  EXPECT_DOUBLE_EQ(coverage(ctx, {{"u", {"a", "c"}}, {"v", {"a", "c"}}}), 0.5);
}

TEST(Precision, ExamplesIncludingShortLists) {
  const auto train = ratings({{"x", "z", 1}});
  auto ctx = build_context(train, ratings({{"u", "a", 5}}), 3, 2);
  EXPECT_DOUBLE_EQ(precision(ctx, {{"u", {"a", "b"}}}), 0.5);

  ctx = build_context(train,
                      ratings({{"u", "a", 5}, {"u", "b", 4}, {"u", "c", 1}, {"u", "d", 1}}),
                      3, 10);
  EXPECT_DOUBLE_EQ(precision(ctx, {{"u", {"a", "b", "c", "d"}}}), 0.2);
}

TEST(Recall, Examples) {
  const auto train = ratings({{"x", "z", 1}});
  const auto test = ratings({{"u", "a", 5}, {"u", "b", 5}, {"u", "c", 5}, {"u", "d", 5},
                             {"v", "a", 1}});
  const auto ctx = build_context(train, test, 3, 5);
  // u: 2 of 4 liked items; v: no liked items, recall 0 by definition.
  EXPECT_DOUBLE_EQ(recall(ctx, {{"u", {"a", "b", "q"}}, {"v", {"a"}}}), 0.25);
  EXPECT_DOUBLE_EQ(recall(ctx, {{"u", {"a", "b", "c", "d", "q"}}}), 0.5);
}

TEST(Ndcg, RelevantAtOneAndThree) {
  const auto ctx = build_context(ratings({{"x", "z", 1}}),
                                 ratings({{"u", "a", 5}, {"u", "c", 5}}), 3, 3);
  const RecommendationMap recs{{"u", {"a", "b", "c"}}};
  const double dcg = 1.0 / std::log2(2.0) + 1.0 / std::log2(4.0);
  EXPECT_EQ(dcg, 1.5);
  // Frozen from the oracle (long double sums).
  const auto expected = static_cast<double>(
      oracle_evaluate({Rating::make("x", "z", 1)},
                      {Rating::make("u", "a", 5), Rating::make("u", "c", 5)}, 3, 3,
                      recs)
          .ndcg);
  EXPECT_NEAR(expected, 0.70391808903413475, 1e-15);
  EXPECT_NEAR(ndcg(ctx, recs), expected, 1e-12);
}

TEST(Ndcg, AllRelevantIsOne) {
  const auto ctx = build_context(ratings({{"x", "z", 1}}),
                                 ratings({{"u", "a", 5}, {"u", "b", 5}}), 3, 2);
  EXPECT_DOUBLE_EQ(ndcg(ctx, {{"u", {"b", "a"}}}), 1.0);
}

TEST(Novelty, Examples) {
  auto ctx = build_context(ratings({{"x", "a", 1}, {"y", "b", 1}}), ratings({{"u", "q", 5}}),
                           3, 1);
  EXPECT_DOUBLE_EQ(novelty(ctx, {{"u", {"a"}}}), 1.0);
  EXPECT_DOUBLE_EQ(novelty(ctx, {{"u", {"unknown"}}}), 0.0);

  ctx = build_context(ratings({{"x", "a", 1}, {"x", "b", 1}, {"x", "c", 1}, {"x", "d", 1}}),
                      ratings({{"u", "q", 5}}), 3, 2);
  EXPECT_DOUBLE_EQ(novelty(ctx, {{"u", {"a", "b"}}}), 2.0);
}

TEST(Diversity, Examples) {
  const auto same = ratings({{"x", "a", 5}, {"x", "b", 5}, {"y", "a", 5}, {"y", "b", 5}});
  auto ctx = build_context(same, ratings({{"u", "q", 5}}), 3, 2);
  EXPECT_DOUBLE_EQ(*diversity(ctx, {{"u", {"a", "b"}}}), 0.0);

  const auto disjoint = ratings({{"x", "a", 5}, {"y", "b", 5}});
  ctx = build_context(disjoint, ratings({{"u", "q", 5}}), 3, 2);
  EXPECT_DOUBLE_EQ(*diversity(ctx, {{"u", {"a", "b"}}}), 0.5);

  ctx = build_context(disjoint, ratings({{"u", "q", 5}}), 3, 1);
  EXPECT_FALSE(diversity(ctx, {{"u", {"a"}}}).has_value());
  EXPECT_FALSE(evaluate_all(ctx, {{"u", {"a"}}}).diversity.has_value());
}

TEST(Serendipity, Examples) {
  const auto train = ratings({{"x", "p1", 1}, {"y", "p1", 1}, {"x", "p2", 1}, {"y", "p2", 1},
                              {"x", "t1", 1}, {"y", "t2", 1}});
  const auto test = ratings({{"u", "p1", 5}, {"u", "t1", 5}, {"u", "t2", 5}});
  const auto ctx = build_context(train, test, 3, 2);
  ASSERT_EQ(ctx.popular_topk(), (std::vector<ItemId>{"p1", "p2"}));
  EXPECT_DOUBLE_EQ(serendipity(ctx, {{"u", {"p1", "p2"}}}), 0.0);
  const RecommendationMap tail{{"u", {"t1", "t2"}}};
  EXPECT_DOUBLE_EQ(serendipity(ctx, tail), precision(ctx, tail));
  EXPECT_DOUBLE_EQ(serendipity(ctx, {{"u", {"p1", "t1"}}}), 0.5);
}

TEST(EvaluateAll, PerfectAndEmptyRecommenders) {
  const auto train = ratings({{"x", "a", 5}, {"x", "b", 2}});
  const auto test = ratings({{"u", "c", 5}, {"u", "d", 4}, {"v", "c", 5}, {"v", "e", 5}});
  const auto ctx = build_context(train, test, 3, 2);
  const auto perfect = evaluate_all(ctx, {{"u", {"c", "d"}}, {"v", {"e", "c"}}});
  EXPECT_DOUBLE_EQ(perfect.precision, 1.0);
  EXPECT_DOUBLE_EQ(perfect.ndcg, 1.0);
  EXPECT_DOUBLE_EQ(perfect.recall, 1.0);

  const auto empty = evaluate_all(ctx, {});
  EXPECT_EQ(empty.precision, 0.0);
  EXPECT_EQ(empty.recall, 0.0);
  EXPECT_EQ(empty.ndcg, 0.0);
  EXPECT_EQ(empty.serendipity, 0.0);
  EXPECT_EQ(empty.coverage, 0.0);
}

TEST(EvaluateAll, IgnoresUsersOutsideTestAndItemsPastK) {
  const auto train = ratings({{"x", "a", 5}, {"x", "b", 2}, {"x", "c", 2}});
  const auto test = ratings({{"u", "c", 5}});
  const auto ctx = build_context(train, test, 3, 1);
  const auto report = evaluate_all(ctx, {{"u", {"a", "c"}}, {"stranger", {"b"}}});
  EXPECT_EQ(report.precision, 0.0);
  EXPECT_DOUBLE_EQ(report.coverage, 1.0 / 3.0);
}

void expect_matches_oracle(const reclab::testing::MetricFixture& f, std::uint64_t seed) {
  const auto ctx = build_context(as_set(f.train), as_set(f.test), f.threshold, f.k);
  const auto got = evaluate_all(ctx, f.recs);
  const auto want = oracle_evaluate(f.train, f.test, f.threshold, f.k, f.recs);
  SCOPED_TRACE("fixture seed " + std::to_string(seed));
  EXPECT_NEAR(got.coverage, static_cast<double>(want.coverage), 1e-9);
  EXPECT_NEAR(got.precision, static_cast<double>(want.precision), 1e-9);
  EXPECT_NEAR(got.recall, static_cast<double>(want.recall), 1e-9);
  EXPECT_NEAR(got.ndcg, static_cast<double>(want.ndcg), 1e-9);
  EXPECT_NEAR(got.novelty, static_cast<double>(want.novelty), 1e-9);
  EXPECT_NEAR(got.serendipity, static_cast<double>(want.serendipity), 1e-9);
  ASSERT_EQ(got.diversity.has_value(), want.diversity.has_value());
  if (got.diversity) {
    EXPECT_NEAR(*got.diversity, static_cast<double>(*want.diversity), 1e-9);
  }
}

TEST(MetricsOracle, AgreesOnRandomFixtures) {
  for (std::uint64_t seed = 1000; seed < 1060; ++seed) {
    expect_matches_oracle(random_metric_fixture(seed), seed);
  }
}

}  // namespace
}  // namespace reclab::metrics
