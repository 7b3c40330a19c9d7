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

#include <gtest/gtest.h>
#include <httplib.h>

#include "support/evaluator_harness.hpp"

namespace reclab::orchestrator {
namespace {

using namespace std::chrono_literals;
using nlohmann::json;
using reclab::testing::EvaluatorHarness;
using reclab::testing::MockRecommender;

class ApiTest : public ::testing::Test {
 protected:
  ApiTest() : harness_(registry()), client_(harness_.api()) {}

  RecommenderRegistry registry() {
    RecommenderRegistry r;
    r.add("m", mock_.base_uri());
    r.add("offline", "http://127.0.0.1:1");
    return r;
  }

  json post_experiment(const json& body, int expected_status) {
    auto res = client_.Post("/experiments", body.dump(), "application/json");
    EXPECT_TRUE(res);
    EXPECT_EQ(res->status, expected_status) << res->body;
    return json::parse(res->body);
  }

  MockRecommender mock_;
  EvaluatorHarness harness_;
  httplib::Client client_;
};

TEST_F(ApiTest, SubmitAndFetchRecord) {
  const auto created = post_experiment({{"dataset_id", "ml"},
                                        {"split_method", "random"},
                                        {"test_fraction", 0.2},
                                        {"k", 5},
                                        {"rating_threshold", 3},
                                        {"recommender_ids", {"m"}},
                                        {"seed", 7}},
                                       201);
  const auto id = created.at("id").get<std::string>();
  auto res = client_.Get("/experiments/" + id);
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  const auto record = record_from_json(json::parse(res->body));
  EXPECT_EQ(record.status, ExperimentStatus::kQueued);
  EXPECT_EQ(record.config.seed, 7u);

  harness_.orchestrator().run_experiment(id);
  res = client_.Get("/experiments/" + id);
  const auto done = record_from_json(json::parse(res->body));
  EXPECT_EQ(done.status, ExperimentStatus::kDone);
  EXPECT_EQ(done.digest, compute_digest(done));
  EXPECT_EQ(done, harness_.orchestrator().get(id));
}

TEST_F(ApiTest, ValidationErrorsListViolations) {
  const auto body = post_experiment(
      {{"dataset_id", "ml"}, {"k", 0}, {"recommender_ids", {"m", "ghost"}}}, 400);
  EXPECT_EQ(body.at("violations").size(), 2u);
  post_experiment({{"dataset_id", "lastfm"},
                   {"split_method", "timestamp"},
                   {"recommender_ids", {"m"}}},
                  400);
  auto res = client_.Post("/experiments", "{not json", "application/json");
  EXPECT_EQ(res->status, 400);
}

TEST_F(ApiTest, UnknownIdsAre404) {
  EXPECT_EQ(client_.Get("/experiments/nope")->status, 404);
  EXPECT_EQ(client_.Get("/experiments/nope/training-set")->status, 404);
}

TEST_F(ApiTest, ListingFiltersAndPages) {
  for (int i = 0; i < 3; ++i) {
    post_experiment({{"dataset_id", "ml"}, {"recommender_ids", {"m"}}}, 201);
  }
  auto res = client_.Get("/experiments?status=queued&dataset=ml&page=1&page_size=2");
  ASSERT_EQ(res->status, 200);
  const auto page = json::parse(res->body);
  EXPECT_EQ(page.at("total"), 3);
  EXPECT_EQ(page.at("page_size"), 2);
  EXPECT_EQ(page.at("experiments").size(), 2u);
  const auto& first = page.at("experiments")[0];
  for (const char* key : {"id", "dataset_id", "split_method", "k", "status",
                          "recommender_ids", "created_at"}) {
    EXPECT_TRUE(first.contains(key)) << key;
  }
  res = client_.Get("/experiments?status=done");
  EXPECT_EQ(json::parse(res->body).at("total"), 0);
  EXPECT_EQ(client_.Get("/experiments?status=bogus")->status, 400);
  EXPECT_EQ(client_.Get("/experiments?page=0")->status, 400);
}

TEST_F(ApiTest, RegistriesAreListed) {
  auto res = client_.Get("/recommenders");
  ASSERT_EQ(res->status, 200);
  const auto recommenders = json::parse(res->body);
  ASSERT_EQ(recommenders.size(), 2u);
  for (const auto& r : recommenders) {
    EXPECT_EQ(r.at("reachable").get<bool>(), r.at("id") == "m") << r.dump();
  }
  res = client_.Get("/datasets");
  const auto datasets = json::parse(res->body);
  ASSERT_EQ(datasets.size(), 2u);
  for (const auto& d : datasets) {
    EXPECT_EQ(d.at("has_timestamps").get<bool>(), d.at("id") == "ml");
    EXPECT_TRUE(d.contains("format"));
  }
}

TEST_F(ApiTest, ImportEndpoint) {
  const auto created = post_experiment({{"dataset_id", "ml"}, {"recommender_ids", {"m"}}}, 201);
  const auto record = harness_.orchestrator().run_experiment(created.at("id"));
  const auto body = to_json(record).dump();
  // Same id again: conflict.
  EXPECT_EQ(client_.Post("/experiments/import", body, "application/json")->status, 409);
  auto tampered = to_json(record);
  tampered["id"] = "20200101T000000000Z-000000";
  EXPECT_EQ(client_.Post("/experiments/import", tampered.dump(), "application/json")->status,
            422);
  EXPECT_EQ(client_.Post("/experiments/import", "[]", "application/json")->status, 400);
}

TEST_F(ApiTest, CorsHeaderForBrowserClients) {
  auto res = client_.Get("/datasets");
  EXPECT_EQ(res->get_header_value("Access-Control-Allow-Origin"), "*");
}

}  // namespace
}  // namespace reclab::orchestrator
