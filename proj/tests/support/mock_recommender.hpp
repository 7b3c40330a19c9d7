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

// Scriptable recommender service for protocol tests. It records every request
// it receives, the raw training-set bytes it downloads and the recommendation
// payloads, so tests can assert ordering, fairness and leakage.

#include <algorithm>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>

#include "reclab/protocol.hpp"

namespace reclab::testing {

struct MockBehaviour {
  int polls_until_ready = 0;  // GET /model answers "training" this many times
  bool train_fails = false;
  bool never_ready = false;
  int polls_until_recommendations = 0;
  bool recommend_fails = false;
  bool fail_delete = false;
  // Defaults to the first k unseen catalog items in id order.
  std::function<std::vector<RecommendationList>(const protocol::RecommendRequest&,
                                                const RatingSet&)>
      recommend;
};

class MockRecommender {
 public:
  explicit MockRecommender(MockBehaviour behaviour = {})
      : behaviour_(std::move(behaviour)) {
    install();
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockRecommender() { stop(); }

  void stop() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  std::string base_uri() const { return "http://127.0.0.1:" + std::to_string(port_); }

  std::vector<std::string> events() const {
    std::lock_guard lock(mutex_);
    return events_;
  }
  std::vector<std::string> training_bodies() const {
    std::lock_guard lock(mutex_);
    return training_bodies_;
  }
  std::vector<std::string> training_uris() const {
    std::lock_guard lock(mutex_);
    return training_uris_;
  }
  std::vector<protocol::RecommendRequest> recommend_requests() const {
    std::lock_guard lock(mutex_);
    return recommend_requests_;
  }

 private:
  static std::vector<RecommendationList> first_unseen(
      const protocol::RecommendRequest& request, const RatingSet& train) {
    std::vector<ItemId> catalog;
    for (const auto& r : train) catalog.push_back(r.item);
    std::sort(catalog.begin(), catalog.end());
    catalog.erase(std::unique(catalog.begin(), catalog.end()), catalog.end());
    std::vector<RecommendationList> out;
    for (const auto& user : request.users) {
      RecommendationList list{user, {}};
      for (const auto& item : catalog) {
        if (static_cast<int>(list.items.size()) == request.k) break;
        const bool seen = std::any_of(train.begin(), train.end(), [&](const Rating& r) {
          return r.user == user && r.item == item;
        });
        if (!seen) list.items.push_back(item);
      }
      out.push_back(std::move(list));
    }
    return out;
  }

  void log(std::string event) { events_.push_back(std::move(event)); }

  void install() {
    using namespace protocol;
    server_.Post("/model", [this](const httplib::Request& req, httplib::Response& res) {
      const auto request = parse_train_request(req.body);
      {
        std::lock_guard lock(mutex_);
        log("POST /model");
        training_uris_.push_back(request.training_set_uri);
      }
      const auto uri = parse_uri(request.training_set_uri);
      httplib::Client client(uri.origin());
      auto fetched = client.Get(uri.path);
      std::lock_guard lock(mutex_);
      state_ = ModelState::kTraining;
      polls_ = 0;
      recommendation_polls_ = -1;
      if (!fetched || fetched->status != 200) {
        state_ = ModelState::kFailed;
      } else {
        training_bodies_.push_back(fetched->body);
        train_ = parse_training_set(fetched->body);
      }
      res.status = 202;
      res.set_content(R"({"status":"training"})", "application/json");
    });
    server_.Get("/model", [this](const httplib::Request&, httplib::Response& res) {
      std::lock_guard lock(mutex_);
      log("GET /model");
      ModelStatus status{state_, std::nullopt};
      if (state_ == ModelState::kTraining) {
        if (behaviour_.train_fails) {
          state_ = ModelState::kFailed;
        } else if (!behaviour_.never_ready && polls_++ >= behaviour_.polls_until_ready) {
          state_ = ModelState::kReady;
        }
        status.status = state_;
      }
      if (status.status == ModelState::kFailed) status.detail = "mock training failure";
      res.set_content(to_json(status).dump(), "application/json");
    });
    server_.Delete("/model", [this](const httplib::Request&, httplib::Response& res) {
      std::lock_guard lock(mutex_);
      log("DELETE /model");
      state_ = ModelState::kNone;
      recommendation_polls_ = -1;
      res.status = behaviour_.fail_delete ? 500 : 204;
    });
    server_.Post("/recommendation", [this](const httplib::Request& req,
                                           httplib::Response& res) {
      std::lock_guard lock(mutex_);
      log("POST /recommendation");
      if (state_ != ModelState::kReady) {
        res.status = 409;
        res.set_content(R"({"status":"failed","detail":"model is not ready"})",
                        "application/json");
        return;
      }
      pending_ = parse_recommend_request(req.body);
      recommend_requests_.push_back(pending_);
      recommendation_polls_ = 0;
      res.status = 202;
      res.set_content(R"({"status":"computing"})", "application/json");
    });
    server_.Get("/recommendation", [this](const httplib::Request&,
                                          httplib::Response& res) {
      std::lock_guard lock(mutex_);
      log("GET /recommendation");
      RecommendResponse response;
      if (recommendation_polls_ < 0) {
        response = RecommendResponse::failed("nothing requested");
      } else if (behaviour_.recommend_fails) {
        response = RecommendResponse::failed("mock recommendation failure");
      } else if (recommendation_polls_++ >= behaviour_.polls_until_recommendations) {
        response.status = RecommendState::kReady;
        response.recommendations = behaviour_.recommend
                                       ? behaviour_.recommend(pending_, train_)
                                       : first_unseen(pending_, train_);
      }
      res.set_content(to_json(response).dump(), "application/json");
    });
  }

  MockBehaviour behaviour_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;

  mutable std::mutex mutex_;
  std::vector<std::string> events_;
  std::vector<std::string> training_bodies_;
  std::vector<std::string> training_uris_;
  std::vector<protocol::RecommendRequest> recommend_requests_;
  protocol::ModelState state_ = protocol::ModelState::kNone;
  int polls_ = 0;
  int recommendation_polls_ = -1;
  RatingSet train_;
  protocol::RecommendRequest pending_;
};

// Serves a fixed body at /train.csv, for driving the client without an
// evaluator.
class StaticFileServer {
 public:
  explicit StaticFileServer(std::string body) : body_(std::move(body)) {
    server_.Get("/train.csv", [this](const httplib::Request&, httplib::Response& res) {
      res.set_content(body_, "text/csv");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StaticFileServer() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }
  std::string uri() const {
    return "http://127.0.0.1:" + std::to_string(port_) + "/train.csv";
  }

 private:
  std::string body_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

inline protocol::ClientOptions fast_client_options() {
  protocol::ClientOptions options;
  options.poll_interval = std::chrono::milliseconds(5);
  options.train_timeout = std::chrono::seconds(10);
  options.recommend_timeout = std::chrono::seconds(10);
  options.retries = 1;
  options.backoff = std::chrono::milliseconds(5);
  options.io_timeout = std::chrono::seconds(5);
  return options;
}

}  // namespace reclab::testing
