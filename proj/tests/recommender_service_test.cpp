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

#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>

#include "reclab/protocol.hpp"
#include "reclab/recommenders.hpp"
#include "support/mock_recommender.hpp"

namespace reclab::recommenders {
namespace {

using namespace std::chrono_literals;
using reclab::testing::fast_client_options;
using reclab::testing::StaticFileServer;

RatingSet train_set() {
  return RatingSet::from_ratings({Rating::make("u1", "a", 5, 1), Rating::make("u1", "b", 4, 2),
                                  Rating::make("u2", "a", 4, 3), Rating::make("u2", "c", 2, 4),
                                  Rating::make("u3", "d", 5, 5)});
}

class ServiceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    port_ = *service_.bind("127.0.0.1", 0);
    service_.start();
  }
  std::string base() const { return "http://127.0.0.1:" + std::to_string(port_); }

  RecommenderService service_{ServiceOptions{Kind::kMostPopular, 0, 5s}};
  int port_ = 0;
  StaticFileServer files_{protocol::serialize_training_set(train_set())};
};

TEST_F(ServiceTest, InitialStateIsNone) {
  httplib::Client client(base());
  auto res = client.Get("/model");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(protocol::parse_model_status(res->body).status, protocol::ModelState::kNone);
}

TEST_F(ServiceTest, RecommendationBeforeReadyIsRefused) {
  httplib::Client client(base());
  auto res = client.Post("/recommendation", R"({"users":["u1"],"k":2})", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 409);
  const auto body = protocol::parse_recommend_response(res->body);
  EXPECT_EQ(body.status, protocol::RecommendState::kFailed);
  EXPECT_TRUE(body.detail.has_value());
}

TEST_F(ServiceTest, MalformedBodiesGet400) {
  httplib::Client client(base());
  auto res = client.Post("/model", R"({"training_set_uri":5})", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
}

TEST_F(ServiceTest, LifecycleThroughClient) {
  protocol::RecommenderClient client(base(), fast_client_options());
  ASSERT_EQ(client.train_remote({files_.uri(), 3}).status, protocol::ModelState::kReady);
  const auto seen = protocol::SeenIndex::build(train_set());
  const auto outcome = client.recommend_remote({{"u1", "u3", "cold"}, 2}, seen);
  ASSERT_EQ(outcome.response.status, protocol::RecommendState::kReady);
  EXPECT_EQ(outcome.violations.total(), 0u);
  std::map<UserId, std::vector<ItemId>> lists;
  for (const auto& l : outcome.response.recommendations) lists[l.user] = l.items;
  EXPECT_EQ(lists["u1"], (std::vector<ItemId>{"c", "d"}));
  EXPECT_EQ(lists["u3"], (std::vector<ItemId>{"a", "b"}));
  EXPECT_EQ(lists["cold"], (std::vector<ItemId>{"a", "b"}));
  EXPECT_TRUE(client.delete_model());
  EXPECT_EQ(client.probe()->status, protocol::ModelState::kNone);
  EXPECT_TRUE(client.delete_model());
}

TEST_F(ServiceTest, UnreachableTrainingSetFailsWithDetail) {
  protocol::RecommenderClient client(base(), fast_client_options());
  const auto status = client.train_remote({files_.uri() + "-missing", 3});
  EXPECT_EQ(status.status, protocol::ModelState::kFailed);
  EXPECT_TRUE(status.detail.has_value());
}

TEST(Service, BindFailsOnUsedPort) {
  RecommenderService first(ServiceOptions{});
  const auto port = first.bind("127.0.0.1", 0);
  ASSERT_TRUE(port);
  RecommenderService second(ServiceOptions{});
  EXPECT_FALSE(second.bind("127.0.0.1", *port).has_value());
}

}  // namespace
}  // namespace reclab::recommenders
