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

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "reclab/protocol.hpp"

namespace reclab::protocol {

namespace {

using Clock = std::chrono::steady_clock;

std::string describe(const httplib::Result& result) {
  return httplib::to_string(result.error());
}

std::string describe_status(const httplib::Response& response) {
  std::string text = "HTTP " + std::to_string(response.status);
  if (!response.body.empty()) text += ": " + response.body.substr(0, 200);
  return text;
}

}  // namespace

struct RecommenderClient::Impl {
  Impl(const Uri& uri, const ClientOptions& options)
      : prefix(uri.path), client(uri.origin()), options(options) {
    client.set_connection_timeout(options.io_timeout);
    client.set_read_timeout(options.io_timeout);
    client.set_write_timeout(options.io_timeout);
  }

  std::string path(std::string_view resource) const {
    return prefix + std::string(resource);
  }

  // Repeats `call` on transport errors with exponential backoff.
  template <typename Call>
  httplib::Result with_retries(std::string_view what, Call call) {
    auto delay = options.backoff;
    for (int attempt = 0;; ++attempt) {
      auto result = call();
      if (result || attempt >= options.retries) return result;
      spdlog::warn("{} failed ({}); retry {}/{} in {} ms", what, describe(result),
                   attempt + 1, options.retries, delay.count());
      std::this_thread::sleep_for(delay);
      delay *= 2;
    }
  }

  std::string prefix;
  httplib::Client client;
  ClientOptions options;
};

RecommenderClient::RecommenderClient(std::string base_uri, ClientOptions options)
    : base_uri_(std::move(base_uri)),
      options_(options),
      impl_(std::make_unique<Impl>(parse_uri(base_uri_), options_)) {}

RecommenderClient::~RecommenderClient() = default;
RecommenderClient::RecommenderClient(RecommenderClient&&) noexcept = default;
RecommenderClient& RecommenderClient::operator=(RecommenderClient&&) noexcept =
    default;

ModelStatus RecommenderClient::train_remote(const TrainRequest& request) {
  model_ready_ = false;
  const auto body = to_json(request).dump();
  auto created = impl_->with_retries("POST /model", [&] {
    return impl_->client.Post(impl_->path("/model"), body, "application/json");
  });
  if (!created) return ModelStatus::failed("network failure: " + describe(created));
  if (created->status != 202 && created->status != 200) {
    return ModelStatus::failed("model creation rejected: " +
                               describe_status(*created));
  }

  const auto deadline = Clock::now() + options_.train_timeout;
  while (true) {
    auto polled = impl_->with_retries("GET /model", [&] {
      return impl_->client.Get(impl_->path("/model"));
    });
    if (!polled) return ModelStatus::failed("network failure: " + describe(polled));
    if (polled->status != 200) {
      return ModelStatus::failed("model status query failed: " +
                                 describe_status(*polled));
    }
    ModelStatus status;
    try {
      status = parse_model_status(polled->body);
    } catch (const ProtocolError& e) {
      return ModelStatus::failed(std::string("schema violation: ") + e.what());
    }
    switch (status.status) {
      case ModelState::kReady:
        model_ready_ = true;
        return status;
      case ModelState::kFailed:
        return status;
      case ModelState::kNone:
        return ModelStatus::failed("recommender reports no model after creation");
      case ModelState::kTraining:
        break;
    }
    const auto now = Clock::now();
    if (now >= deadline) return ModelStatus::failed("training timeout");
    std::this_thread::sleep_for(
        std::min<Clock::duration>(options_.poll_interval, deadline - now));
  }
}

RecommendOutcome RecommenderClient::recommend_remote(const RecommendRequest& request,
                                                     const SeenIndex& seen) {
  if (!model_ready_) {
    throw ProtocolError("recommendations requested from " + base_uri_ +
                        " before its model was ready");
  }
  const auto body = to_json(request).dump();
  auto created = impl_->with_retries("POST /recommendation", [&] {
    return impl_->client.Post(impl_->path("/recommendation"), body,
                              "application/json");
  });
  if (!created) {
    return {RecommendResponse::failed("network failure: " + describe(created)), {}};
  }
  if (created->status != 202 && created->status != 200) {
    return {RecommendResponse::failed("recommendation request rejected: " +
                                      describe_status(*created)),
            {}};
  }

  const auto deadline = Clock::now() + options_.recommend_timeout;
  while (true) {
    auto polled = impl_->with_retries("GET /recommendation", [&] {
      return impl_->client.Get(impl_->path("/recommendation"));
    });
    if (!polled) {
      return {RecommendResponse::failed("network failure: " + describe(polled)), {}};
    }
    if (polled->status != 200) {
      return {RecommendResponse::failed("recommendation status query failed: " +
                                        describe_status(*polled)),
              {}};
    }
    try {
      auto response = parse_recommend_response(polled->body);
      if (response.status == RecommendState::kFailed) {
        if (!response.detail) response.detail = "recommender reported failure";
        return {std::move(response), {}};
      }
      if (response.status == RecommendState::kReady) {
        auto sanitized = sanitize(request, response.recommendations, seen);
        if (sanitized.violations.total() > 0) {
          spdlog::warn(
              "{}: dropped {} train-rated, {} duplicate, {} overlong items and "
              "{} unrequested lists",
              base_uri_, sanitized.violations.train_rated,
              sanitized.violations.duplicates, sanitized.violations.overlong,
              sanitized.violations.unrequested);
        }
        RecommendOutcome outcome;
        outcome.response.status = RecommendState::kReady;
        for (auto& [user, items] : sanitized.lists) {
          outcome.response.recommendations.push_back({user, std::move(items)});
        }
        outcome.violations = sanitized.violations;
        return outcome;
      }
    } catch (const ProtocolError& e) {
      return {RecommendResponse::failed(std::string("schema violation: ") + e.what()),
              {}};
    }
    const auto now = Clock::now();
    if (now >= deadline) {
      return {RecommendResponse::failed("recommendation timeout"), {}};
    }
    std::this_thread::sleep_for(
        std::min<Clock::duration>(options_.poll_interval, deadline - now));
  }
}

bool RecommenderClient::delete_model() {
  model_ready_ = false;
  auto result = impl_->with_retries("DELETE /model", [&] {
    return impl_->client.Delete(impl_->path("/model"));
  });
  if (!result) {
    spdlog::warn("{}: model teardown failed: {}", base_uri_, describe(result));
    return false;
  }
  if (result->status / 100 != 2) {
    spdlog::warn("{}: model teardown answered {}", base_uri_,
                 describe_status(*result));
    return false;
  }
  return true;
}

std::optional<ModelStatus> RecommenderClient::probe() {
  auto result = impl_->client.Get(impl_->path("/model"));
  if (!result || result->status != 200) return std::nullopt;
  try {
    return parse_model_status(result->body);
  } catch (const ProtocolError&) {
    return std::nullopt;
  }
}

RatingSet fetch_training_set(const std::string& uri,
                             std::chrono::milliseconds timeout) {
  const auto parsed = parse_uri(uri);
  httplib::Client client(parsed.origin());
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  std::string body;
  auto result = client.Get(parsed.path.empty() ? "/" : parsed.path,
                           [&](const char* data, std::size_t size) {
                             body.append(data, size);
                             return true;
                           });
  if (!result) {
    throw ProtocolError("cannot fetch training set from " + uri + ": " +
                        describe(result));
  }
  if (result->status != 200) {
    throw ProtocolError("cannot fetch training set from " + uri + ": " +
                        describe_status(*result));
  }
  return parse_training_set(body);
}

}  // namespace reclab::protocol
