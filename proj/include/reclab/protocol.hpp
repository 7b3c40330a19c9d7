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

#include <chrono>
#include <cstddef>
#include <functional>
#include <istream>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "reclab/domain.hpp"

// Evaluator <-> recommender wire contract.
//
// A recommender service exposes five resources, all exchanging UTF-8 JSON:
//
//   POST   /model           {"training_set_uri": str, "rating_threshold": num}
//                           -> 202 {"status": "training"}
//   GET    /model           -> 200 {"status": "none"|"training"|"ready"|"failed",
//                                   "detail": str?}
//   DELETE /model           -> 204, empty body
//   POST   /recommendation  {"users": [str...], "k": int}
//                           -> 202 {"status": "computing"}
//   GET    /recommendation  -> 200 {"status": "computing"|"ready"|"failed",
//                                   "recommendations": [{"user": str,
//                                                        "items": [str...]}]?,
//                                   "detail": str?}
//
// The training set is fetched with a GET on training_set_uri and is sent as
// comma-separated lines under the header `user,item,value,timestamp`, the
// timestamp field left empty when absent.
namespace reclab::protocol {

class ProtocolError : public Error {
 public:
  using Error::Error;
};

enum class ModelState { kNone, kTraining, kReady, kFailed };
enum class RecommendState { kComputing, kReady, kFailed };

std::string_view to_string(ModelState state);
std::string_view to_string(RecommendState state);

struct TrainRequest {
  std::string training_set_uri;
  double rating_threshold = 0.0;
};

struct ModelStatus {
  ModelState status = ModelState::kNone;
  std::optional<std::string> detail;

  static ModelStatus failed(std::string detail) {
    return {ModelState::kFailed, std::move(detail)};
  }
};

struct RecommendRequest {
  std::vector<UserId> users;
  int k = 10;
};

struct RecommendResponse {
  RecommendState status = RecommendState::kComputing;
  std::vector<RecommendationList> recommendations;
  std::optional<std::string> detail;

  static RecommendResponse failed(std::string detail) {
    return {RecommendState::kFailed, {}, std::move(detail)};
  }
};

// JSON codecs. The parsers validate the schemas above and throw
// ProtocolError on any deviation.
nlohmann::json to_json(const TrainRequest& request);
nlohmann::json to_json(const ModelStatus& status);
nlohmann::json to_json(const RecommendRequest& request);
nlohmann::json to_json(const RecommendResponse& response);
TrainRequest parse_train_request(std::string_view body);
ModelStatus parse_model_status(std::string_view body);
RecommendRequest parse_recommend_request(std::string_view body);
RecommendResponse parse_recommend_response(std::string_view body);

// ---------------------------------------------------------------------------
// Training-set wire format.

inline constexpr std::string_view kTrainingSetHeader = "user,item,value,timestamp";
inline constexpr std::string_view kTrainingSetContentType = "text/csv";

// Produces the wire serialization of a RatingSet in bounded chunks so a
// server never holds the whole serialization in memory.
class TrainingSetStreamer {
 public:
  explicit TrainingSetStreamer(std::shared_ptr<const RatingSet> ratings,
                               std::size_t chunk_bytes = 64 * 1024);

  // Next chunk, or nullopt after the last one. A chunk never exceeds
  // chunk_bytes unless a single line does.
  std::optional<std::string> next();

 private:
  std::shared_ptr<const RatingSet> ratings_;
  std::size_t chunk_bytes_;
  std::size_t position_ = 0;
  bool header_sent_ = false;
};

std::string format_training_line(const Rating& rating);
// Whole serialization in one string; for tests and small sets.
std::string serialize_training_set(const RatingSet& ratings);
// Throws ProtocolError when the header is missing or lines are malformed.
RatingSet parse_training_set(std::istream& in);
RatingSet parse_training_set(std::string_view text);

// GET the training set from `uri` (used by recommender services). Throws
// ProtocolError on transport or format failures.
RatingSet fetch_training_set(const std::string& uri,
                             std::chrono::milliseconds timeout);

// ---------------------------------------------------------------------------
// Response sanitation.

// Items each user rated in the training set, at any value.
class SeenIndex {
 public:
  static SeenIndex build(const RatingSet& train);
  bool seen(const UserId& user, const ItemId& item) const;
  const std::unordered_set<ItemId>* items(const UserId& user) const;

 private:
  std::unordered_map<UserId, std::unordered_set<ItemId>> seen_;
};

struct ViolationCounts {
  std::size_t train_rated = 0;  // items the user already rated in training
  std::size_t duplicates = 0;   // repeated items within one list
  std::size_t overlong = 0;     // items past position k
  std::size_t unrequested = 0;  // lists for users not in the request

  std::size_t total() const {
    return train_rated + duplicates + overlong + unrequested;
  }
  friend bool operator==(const ViolationCounts&, const ViolationCounts&) = default;
};

void to_json(nlohmann::json& j, const ViolationCounts& counts);
void from_json(const nlohmann::json& j, ViolationCounts& counts);

struct SanitizedRecommendations {
  RecommendationMap lists;
  ViolationCounts violations;
};

// Drops train-rated and duplicate items, then truncates to k. Throws
// ProtocolError naming the first requested user without a list.
SanitizedRecommendations sanitize(const RecommendRequest& request,
                                  const std::vector<RecommendationList>& lists,
                                  const SeenIndex& seen);

// ---------------------------------------------------------------------------
// Evaluator-side client.

struct ClientOptions {
  std::chrono::milliseconds poll_interval{2000};
  std::chrono::milliseconds train_timeout{std::chrono::hours(1)};
  std::chrono::milliseconds recommend_timeout{std::chrono::hours(1)};
  int retries = 3;
  std::chrono::milliseconds backoff{500};  // doubled after every retry
  std::chrono::milliseconds io_timeout{std::chrono::seconds(30)};
};

struct RecommendOutcome {
  RecommendResponse response;  // sanitized when ready
  ViolationCounts violations;
};

// Drives one recommender through create -> poll -> recommend -> poll ->
// delete. Recommendation requests are refused locally until a model status
// of ready has been observed.
class RecommenderClient {
 public:
  // Throws ProtocolError when base_uri is not an absolute http URI.
  RecommenderClient(std::string base_uri, ClientOptions options = {});
  ~RecommenderClient();
  RecommenderClient(RecommenderClient&&) noexcept;
  RecommenderClient& operator=(RecommenderClient&&) noexcept;

  // Returns the terminal status; failures (network, schema, timeout) come back
  // as kFailed with a detail.
  ModelStatus train_remote(const TrainRequest& request);

  // Requires a prior ready model. On ready the lists are sanitized against
  // `seen` and violations counted.
  RecommendOutcome recommend_remote(const RecommendRequest& request,
                                    const SeenIndex& seen);

  // Best effort; returns false (and logs) on network failure.
  bool delete_model();

  // Single GET /model, without retries. nullopt when unreachable.
  std::optional<ModelStatus> probe();

  const std::string& base_uri() const { return base_uri_; }

 private:
  struct Impl;
  std::string base_uri_;
  ClientOptions options_;
  std::unique_ptr<Impl> impl_;
  bool model_ready_ = false;
};

// Components of an absolute http URI.
struct Uri {
  std::string scheme;
  std::string host;
  int port = 80;
  std::string path;  // without trailing slash; may be empty

  std::string origin() const;
};

// Throws ProtocolError on anything but http://host[:port][/path].
Uri parse_uri(std::string_view text);

}  // namespace reclab::protocol
