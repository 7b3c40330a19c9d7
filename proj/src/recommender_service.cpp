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

#include <atomic>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "reclab/protocol.hpp"
#include "reclab/recommenders.hpp"

namespace reclab::recommenders {

namespace proto = reclab::protocol;

struct RecommenderService::State {
  explicit State(ServiceOptions options) : options(options) {}

  ServiceOptions options;
  httplib::Server server;
  std::thread listener;

  std::mutex mutex;
  std::uint64_t generation = 0;  // bumped whenever the model slot is replaced
  std::uint64_t request_generation = 0;  // bumped per recommendation request
  proto::ModelStatus model_status;
  std::shared_ptr<const Model> model;
  std::optional<proto::RecommendResponse> recommendation;
  struct Worker {
    std::jthread thread;
    std::shared_ptr<std::atomic<bool>> done;
  };
  std::vector<Worker> workers;

  void reply(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  // Joins finished workers; called with the mutex held.
  void reap() {
    std::erase_if(workers, [](const Worker& worker) { return worker.done->load(); });
  }

  template <typename Job>
  void spawn(Job job) {
    auto done = std::make_shared<std::atomic<bool>>(false);
    workers.push_back({std::jthread([job = std::move(job), done] {
                         job();
                         done->store(true);
                       }),
                       done});
  }

  void train(std::uint64_t job, proto::TrainRequest request) {
    proto::ModelStatus status;
    std::shared_ptr<const Model> trained;
    try {
      const auto training_set =
          proto::fetch_training_set(request.training_set_uri, options.fetch_timeout);
      trained = std::make_shared<const Model>(Model::train(
          options.kind, training_set, request.rating_threshold, options.seed));
      status.status = proto::ModelState::kReady;
    } catch (const std::exception& e) {
      status = proto::ModelStatus::failed(e.what());
      spdlog::error("training failed: {}", e.what());
    }
    std::lock_guard lock(mutex);
    if (job != generation) return;  // replaced or deleted meanwhile
    model_status = std::move(status);
    model = std::move(trained);
  }

  void recommend(std::uint64_t job, std::uint64_t request_job,
                 std::shared_ptr<const Model> snapshot,
                 proto::RecommendRequest request) {
    proto::RecommendResponse response;
    response.status = proto::RecommendState::kReady;
    for (const auto& user : request.users) {
      response.recommendations.push_back(snapshot->recommend(user, request.k));
    }
    std::lock_guard lock(mutex);
    if (job != generation || request_job != request_generation) return;
    recommendation = std::move(response);
  }

  void install_routes() {
    // httplib defaults to SO_REUSEPORT, which lets a second service bind an
    // occupied port silently.
    server.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    });
    server.Post("/model", [this](const httplib::Request& req,
                                 httplib::Response& res) {
      proto::TrainRequest request;
      try {
        request = proto::parse_train_request(req.body);
      } catch (const proto::ProtocolError& e) {
        reply(res, 400, proto::to_json(proto::ModelStatus::failed(e.what())));
        return;
      }
      std::lock_guard lock(mutex);
      reap();
      const auto job = ++generation;
      model_status = {proto::ModelState::kTraining, std::nullopt};
      model.reset();
      recommendation.reset();
      spawn([this, job, request] { train(job, request); });
      reply(res, 202, proto::to_json(model_status));
    });

    server.Get("/model", [this](const httplib::Request&, httplib::Response& res) {
      std::lock_guard lock(mutex);
      reply(res, 200, proto::to_json(model_status));
    });

    server.Delete("/model", [this](const httplib::Request&, httplib::Response& res) {
      std::lock_guard lock(mutex);
      reap();
      ++generation;
      model_status = {};
      model.reset();
      recommendation.reset();
      res.status = 204;
    });

    server.Post("/recommendation", [this](const httplib::Request& req,
                                          httplib::Response& res) {
      proto::RecommendRequest request;
      try {
        request = proto::parse_recommend_request(req.body);
      } catch (const proto::ProtocolError& e) {
        reply(res, 400, proto::to_json(proto::RecommendResponse::failed(e.what())));
        return;
      }
      std::lock_guard lock(mutex);
      if (!model || model_status.status != proto::ModelState::kReady) {
        reply(res, 409, proto::to_json(proto::RecommendResponse::failed(
                            "model is not ready")));
        return;
      }
      reap();
      const auto job = generation;
      const auto request_job = ++request_generation;
      recommendation = proto::RecommendResponse{};
      spawn([this, job, request_job, snapshot = model, request] {
        recommend(job, request_job, snapshot, request);
      });
      reply(res, 202, proto::to_json(*recommendation));
    });

    server.Get("/recommendation", [this](const httplib::Request&,
                                         httplib::Response& res) {
      std::lock_guard lock(mutex);
      if (!recommendation) {
        reply(res, 200, proto::to_json(proto::RecommendResponse::failed(
                            "no recommendation has been requested")));
        return;
      }
      reply(res, 200, proto::to_json(*recommendation));
    });
  }
};

RecommenderService::RecommenderService(ServiceOptions options)
    : state_(std::make_unique<State>(options)) {
  state_->install_routes();
}

RecommenderService::~RecommenderService() {
  stop();
  std::vector<State::Worker> workers;
  {
    std::lock_guard lock(state_->mutex);
    workers.swap(state_->workers);
  }
  // jthread joins on destruction.
}

std::optional<int> RecommenderService::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = state_->server.bind_to_any_port(host);
    if (bound <= 0) return std::nullopt;
    return bound;
  }
  if (!state_->server.bind_to_port(host, port)) return std::nullopt;
  return port;
}

void RecommenderService::start() {
  state_->listener = std::thread([this] { state_->server.listen_after_bind(); });
  state_->server.wait_until_ready();
}

void RecommenderService::run() { state_->server.listen_after_bind(); }

void RecommenderService::stop() {
  state_->server.stop();
  if (state_->listener.joinable()) state_->listener.join();
}

}  // namespace reclab::recommenders
