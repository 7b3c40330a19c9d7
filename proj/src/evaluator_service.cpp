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

#include "reclab/evaluator_service.hpp"

#include <charconv>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

namespace reclab::orchestrator {

using nlohmann::json;

namespace {

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, int status, const std::string& message) {
  reply(res, status, json{{"error", message}});
}

std::optional<std::size_t> positive_param(const httplib::Request& req,
                                          const char* name, std::size_t fallback) {
  if (!req.has_param(name)) return fallback;
  const auto text = req.get_param_value(name);
  std::size_t value = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size() || value == 0) {
    return std::nullopt;
  }
  return value;
}

}  // namespace

struct EvaluatorService::State {
  explicit State(Orchestrator& orchestrator) : orchestrator(orchestrator) {}

  Orchestrator& orchestrator;
  httplib::Server server;
  std::thread listener;

  void install_routes() {
    // httplib defaults to SO_REUSEPORT, which lets a second service bind an
    // occupied port silently.
    server.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    });
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
    server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
      res.status = 204;
    });

    server.Post("/experiments", [this](const httplib::Request& req,
                                       httplib::Response& res) {
      ExperimentConfig config;
      try {
        config = json::parse(req.body).get<ExperimentConfig>();
      } catch (const std::exception& e) {
        reply(res, 400, json{{"error", e.what()}, {"violations", {e.what()}}});
        return;
      }
      try {
        reply(res, 201, json{{"id", orchestrator.submit(config)}});
      } catch (const ConfigRejected& e) {
        reply(res, 400, json{{"error", e.what()}, {"violations", e.violations()}});
      }
    });

    server.Get("/experiments", [this](const httplib::Request& req,
                                      httplib::Response& res) {
      ListQuery query;
      if (req.has_param("status")) {
        try {
          query.status = parse_experiment_status(req.get_param_value("status"));
        } catch (const ValidationError& e) {
          return reply_error(res, 400, e.what());
        }
      }
      if (req.has_param("dataset")) query.dataset_id = req.get_param_value("dataset");
      const auto page = positive_param(req, "page", 1);
      const auto page_size = positive_param(req, "page_size", 50);
      if (!page || !page_size) {
        return reply_error(res, 400, "page and page_size must be positive integers");
      }
      query.page = *page;
      query.page_size = *page_size;
      reply(res, 200, to_json(orchestrator.list(query)));
    });

    server.Post("/experiments/import", [this](const httplib::Request& req,
                                              httplib::Response& res) {
      ExperimentRecord record;
      try {
        record = record_from_json(json::parse(req.body));
      } catch (const std::exception& e) {
        return reply_error(res, 400, e.what());
      }
      try {
        orchestrator.import_record(record);
        reply(res, 201, json{{"id", record.id}});
      } catch (const ImmutableRecordError& e) {
        reply_error(res, 409, e.what());
      } catch (const IntegrityError& e) {
        reply_error(res, 422, e.what());
      } catch (const ValidationError& e) {
        reply_error(res, 400, e.what());
      }
    });

    server.Get(R"(/experiments/([^/]+))", [this](const httplib::Request& req,
                                                 httplib::Response& res) {
      try {
        reply(res, 200, to_json(orchestrator.get(req.matches[1])));
      } catch (const NotFoundError& e) {
        reply_error(res, 404, e.what());
      } catch (const IntegrityError& e) {
        reply_error(res, 500, e.what());
      }
    });

    server.Get(R"(/experiments/([^/]+)/training-set)",
               [this](const httplib::Request& req, httplib::Response& res) {
                 std::shared_ptr<const RatingSet> train;
                 try {
                   train = orchestrator.training_set(req.matches[1]);
                 } catch (const NotFoundError& e) {
                   return reply_error(res, 404, e.what());
                 }
                 if (req.has_param("recommender")) {
                   spdlog::debug("training set of {} requested by {}",
                                 req.matches[1].str(),
                                 req.get_param_value("recommender"));
                 }
                 auto streamer = std::make_shared<protocol::TrainingSetStreamer>(train);
                 res.set_chunked_content_provider(
                     std::string(protocol::kTrainingSetContentType),
                     [streamer](std::size_t, httplib::DataSink& sink) {
                       if (auto chunk = streamer->next()) {
                         return sink.write(chunk->data(), chunk->size());
                       }
                       sink.done();
                       return true;
                     });
               });

    server.Get("/recommenders", [this](const httplib::Request&,
                                       httplib::Response& res) {
      json out = json::array();
      auto options = orchestrator.client_options();
      options.io_timeout = std::chrono::seconds(2);
      for (const auto& [id, uri] : orchestrator.recommenders().entries()) {
        bool reachable = false;
        try {
          reachable = protocol::RecommenderClient(uri, options).probe().has_value();
        } catch (const std::exception&) {
        }
        out.push_back({{"id", id}, {"uri", uri}, {"reachable", reachable}});
      }
      reply(res, 200, out);
    });

    server.Get("/datasets", [this](const httplib::Request&, httplib::Response& res) {
      json out = json::array();
      for (const auto& [id, descriptor] : orchestrator.datasets().entries()) {
        out.push_back({{"id", id},
                       {"format", std::string(datasets::to_string(descriptor.format))},
                       {"has_timestamps", descriptor.has_timestamps}});
      }
      reply(res, 200, out);
    });

    server.set_exception_handler([](const httplib::Request&, httplib::Response& res,
                                    std::exception_ptr error) {
      std::string message = "internal error";
      try {
        std::rethrow_exception(error);
      } catch (const std::exception& e) {
        message = e.what();
      } catch (...) {
      }
      spdlog::error("request failed: {}", message);
      reply_error(res, 500, message);
    });
  }
};

EvaluatorService::EvaluatorService(Orchestrator& orchestrator)
    : state_(std::make_unique<State>(orchestrator)) {
  state_->install_routes();
}

EvaluatorService::~EvaluatorService() { stop(); }

std::optional<int> EvaluatorService::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = state_->server.bind_to_any_port(host);
    if (bound <= 0) return std::nullopt;
    return bound;
  }
  if (!state_->server.bind_to_port(host, port)) return std::nullopt;
  return port;
}

void EvaluatorService::start() {
  state_->listener = std::thread([this] { state_->server.listen_after_bind(); });
  state_->server.wait_until_ready();
}

void EvaluatorService::run() { state_->server.listen_after_bind(); }

void EvaluatorService::stop() {
  state_->server.stop();
  if (state_->listener.joinable()) state_->listener.join();
}

}  // namespace reclab::orchestrator
