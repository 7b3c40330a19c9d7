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

#include "reclab/protocol.hpp"

#include <cmath>
#include <regex>
#include <set>
#include <sstream>

#include "csv.hpp"
#include "reclab/datasets.hpp"

namespace reclab::protocol {

using nlohmann::json;

std::string_view to_string(ModelState state) {
  switch (state) {
    case ModelState::kNone:
      return "none";
    case ModelState::kTraining:
      return "training";
    case ModelState::kReady:
      return "ready";
    case ModelState::kFailed:
      return "failed";
  }
  return "failed";
}

std::string_view to_string(RecommendState state) {
  switch (state) {
    case RecommendState::kComputing:
      return "computing";
    case RecommendState::kReady:
      return "ready";
    case RecommendState::kFailed:
      return "failed";
  }
  return "failed";
}

namespace {

json parse_object(std::string_view body, std::string_view what) {
  json j = json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) {
    throw ProtocolError(std::string(what) + ": body is not a JSON object");
  }
  return j;
}

const json& require(const json& j, const char* key, std::string_view what) {
  const auto it = j.find(key);
  if (it == j.end()) {
    throw ProtocolError(std::string(what) + ": missing field '" + key + "'");
  }
  return *it;
}

std::string require_string(const json& j, const char* key, std::string_view what) {
  const auto& value = require(j, key, what);
  if (!value.is_string()) {
    throw ProtocolError(std::string(what) + ": field '" + key +
                        "' must be a string");
  }
  return value.get<std::string>();
}

std::optional<std::string> optional_detail(const json& j, std::string_view what) {
  const auto it = j.find("detail");
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) {
    throw ProtocolError(std::string(what) + ": field 'detail' must be a string");
  }
  return it->get<std::string>();
}

std::vector<std::string> require_string_array(const json& j, const char* key,
                                              std::string_view what) {
  const auto& value = require(j, key, what);
  if (!value.is_array()) {
    throw ProtocolError(std::string(what) + ": field '" + key +
                        "' must be an array");
  }
  std::vector<std::string> out;
  out.reserve(value.size());
  for (const auto& element : value) {
    if (!element.is_string()) {
      throw ProtocolError(std::string(what) + ": field '" + key +
                          "' must contain only strings");
    }
    out.push_back(element.get<std::string>());
  }
  return out;
}

void check(const RecommendRequest& request) {
  if (request.users.empty()) {
    throw ProtocolError("recommend request: users must not be empty");
  }
  if (request.k < 1) throw ProtocolError("recommend request: k must be >= 1");
  std::set<std::string_view> seen;
  for (const auto& user : request.users) {
    if (user.empty()) throw ProtocolError("recommend request: empty user id");
    if (!seen.insert(user).second) {
      throw ProtocolError("recommend request: duplicate user '" + user + "'");
    }
  }
}

void check(const TrainRequest& request) {
  parse_uri(request.training_set_uri);
  if (!std::isfinite(request.rating_threshold)) {
    throw ProtocolError("train request: rating_threshold must be finite");
  }
}

}  // namespace

json to_json(const TrainRequest& request) {
  check(request);
  return json{{"training_set_uri", request.training_set_uri},
              {"rating_threshold", request.rating_threshold}};
}

json to_json(const ModelStatus& status) {
  json j{{"status", std::string(to_string(status.status))}};
  if (status.detail) j["detail"] = *status.detail;
  return j;
}

json to_json(const RecommendRequest& request) {
  check(request);
  return json{{"users", request.users}, {"k", request.k}};
}

json to_json(const RecommendResponse& response) {
  json j{{"status", std::string(to_string(response.status))}};
  if (response.status == RecommendState::kReady) {
    json lists = json::array();
    for (const auto& list : response.recommendations) {
      lists.push_back(json{{"user", list.user}, {"items", list.items}});
    }
    j["recommendations"] = std::move(lists);
  }
  if (response.detail) j["detail"] = *response.detail;
  return j;
}

TrainRequest parse_train_request(std::string_view body) {
  constexpr std::string_view what = "train request";
  const auto j = parse_object(body, what);
  TrainRequest request;
  request.training_set_uri = require_string(j, "training_set_uri", what);
  const auto& threshold = require(j, "rating_threshold", what);
  if (!threshold.is_number()) {
    throw ProtocolError("train request: rating_threshold must be a number");
  }
  request.rating_threshold = threshold.get<double>();
  check(request);
  return request;
}

ModelStatus parse_model_status(std::string_view body) {
  constexpr std::string_view what = "model status";
  const auto j = parse_object(body, what);
  const auto status = require_string(j, "status", what);
  ModelStatus out;
  if (status == "none") {
    out.status = ModelState::kNone;
  } else if (status == "training") {
    out.status = ModelState::kTraining;
  } else if (status == "ready") {
    out.status = ModelState::kReady;
  } else if (status == "failed") {
    out.status = ModelState::kFailed;
  } else {
    throw ProtocolError("model status: unknown status '" + status + "'");
  }
  out.detail = optional_detail(j, what);
  if (out.status == ModelState::kFailed && !out.detail) {
    throw ProtocolError("model status: failed status without detail");
  }
  return out;
}

RecommendRequest parse_recommend_request(std::string_view body) {
  constexpr std::string_view what = "recommend request";
  const auto j = parse_object(body, what);
  RecommendRequest request;
  request.users = require_string_array(j, "users", what);
  const auto& k = require(j, "k", what);
  if (!k.is_number_integer()) {
    throw ProtocolError("recommend request: k must be an integer");
  }
  request.k = k.get<int>();
  check(request);
  return request;
}

RecommendResponse parse_recommend_response(std::string_view body) {
  constexpr std::string_view what = "recommendation status";
  const auto j = parse_object(body, what);
  const auto status = require_string(j, "status", what);
  RecommendResponse out;
  if (status == "computing") {
    out.status = RecommendState::kComputing;
  } else if (status == "ready") {
    out.status = RecommendState::kReady;
  } else if (status == "failed") {
    out.status = RecommendState::kFailed;
  } else {
    throw ProtocolError("recommendation status: unknown status '" + status + "'");
  }
  out.detail = optional_detail(j, what);
  if (out.status != RecommendState::kReady) return out;

  const auto& lists = require(j, "recommendations", what);
  if (!lists.is_array()) {
    throw ProtocolError("recommendation status: recommendations must be an array");
  }
  for (const auto& entry : lists) {
    if (!entry.is_object()) {
      throw ProtocolError(
          "recommendation status: every recommendation must be an object");
    }
    RecommendationList list;
    list.user = require_string(entry, "user", what);
    list.items = require_string_array(entry, "items", what);
    out.recommendations.push_back(std::move(list));
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string format_training_line(const Rating& rating) {
  std::string line = csv::quote(rating.user, ',');
  line.push_back(',');
  line += csv::quote(rating.item, ',');
  line.push_back(',');
  line += csv::format_double(rating.value);
  line.push_back(',');
  if (rating.timestamp) line += std::to_string(*rating.timestamp);
  line.push_back('\n');
  return line;
}

TrainingSetStreamer::TrainingSetStreamer(std::shared_ptr<const RatingSet> ratings,
                                         std::size_t chunk_bytes)
    : ratings_(std::move(ratings)), chunk_bytes_(chunk_bytes) {}

std::optional<std::string> TrainingSetStreamer::next() {
  std::string chunk;
  if (!header_sent_) {
    header_sent_ = true;
    chunk.assign(kTrainingSetHeader);
    chunk.push_back('\n');
  }
  while (position_ < ratings_->size()) {
    auto line = format_training_line((*ratings_)[position_]);
    if (!chunk.empty() && chunk.size() + line.size() > chunk_bytes_) break;
    chunk += line;
    ++position_;
  }
  if (chunk.empty()) return std::nullopt;
  return chunk;
}

std::string serialize_training_set(const RatingSet& ratings) {
  std::string out(kTrainingSetHeader);
  out.push_back('\n');
  for (const auto& rating : ratings) out += format_training_line(rating);
  return out;
}

RatingSet parse_training_set(std::istream& in) {
  std::string header;
  if (!csv::read_record(in, header) || header != kTrainingSetHeader) {
    throw ProtocolError("training set: expected header '" +
                        std::string(kTrainingSetHeader) + "'");
  }
  auto descriptor = datasets::make_descriptor(
      "training-set", datasets::DatasetFormat::kGenericCsv, {});
  descriptor.csv.header = datasets::HeaderMode::kNone;
  try {
    auto loaded = datasets::parse_dataset(in, descriptor);
    if (loaded.malformed_lines > 0 || loaded.duplicate_ratings > 0) {
      throw ProtocolError("training set: " +
                          std::to_string(loaded.malformed_lines) +
                          " malformed lines, " +
                          std::to_string(loaded.duplicate_ratings) +
                          " duplicate ratings");
    }
    return std::move(loaded.ratings);
  } catch (const datasets::DatasetError& e) {
    throw ProtocolError(std::string("training set: ") + e.what());
  }
}

RatingSet parse_training_set(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_training_set(in);
}

// ---------------------------------------------------------------------------

SeenIndex SeenIndex::build(const RatingSet& train) {
  SeenIndex index;
  for (const auto& rating : train) index.seen_[rating.user].insert(rating.item);
  return index;
}

bool SeenIndex::seen(const UserId& user, const ItemId& item) const {
  const auto* items = this->items(user);
  return items && items->contains(item);
}

const std::unordered_set<ItemId>* SeenIndex::items(const UserId& user) const {
  const auto it = seen_.find(user);
  return it == seen_.end() ? nullptr : &it->second;
}

void to_json(json& j, const ViolationCounts& counts) {
  j = json{{"train_rated", counts.train_rated},
           {"duplicates", counts.duplicates},
           {"overlong", counts.overlong},
           {"unrequested", counts.unrequested}};
}

void from_json(const json& j, ViolationCounts& counts) {
  counts.train_rated = j.at("train_rated").get<std::size_t>();
  counts.duplicates = j.at("duplicates").get<std::size_t>();
  counts.overlong = j.at("overlong").get<std::size_t>();
  counts.unrequested = j.at("unrequested").get<std::size_t>();
}

SanitizedRecommendations sanitize(const RecommendRequest& request,
                                  const std::vector<RecommendationList>& lists,
                                  const SeenIndex& seen) {
  const std::set<UserId> requested(request.users.begin(), request.users.end());
  std::map<UserId, const RecommendationList*> by_user;
  SanitizedRecommendations out;
  for (const auto& list : lists) {
    if (!requested.contains(list.user)) {
      ++out.violations.unrequested;
      continue;
    }
    if (!by_user.emplace(list.user, &list).second) {
      throw ProtocolError("recommendation status: more than one list for user '" +
                          list.user + "'");
    }
  }

  const auto k = static_cast<std::size_t>(request.k);
  for (const auto& user : request.users) {
    const auto it = by_user.find(user);
    if (it == by_user.end()) {
      throw ProtocolError("recommendation status: no list for user '" + user + "'");
    }
    std::vector<ItemId> clean;
    std::set<ItemId> present;
    for (const auto& item : it->second->items) {
      if (seen.seen(user, item)) {
        ++out.violations.train_rated;
      } else if (present.contains(item)) {
        ++out.violations.duplicates;
      } else if (clean.size() == k) {
        ++out.violations.overlong;
      } else {
        clean.push_back(item);
        present.insert(item);
      }
    }
    out.lists.emplace(user, std::move(clean));
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string Uri::origin() const {
  return scheme + "://" + host + ":" + std::to_string(port);
}

Uri parse_uri(std::string_view text) {
  static const std::regex pattern(R"(^(http)://([^/:?#\s]+)(?::(\d{1,5}))?(/[^\s]*)?$)");
  std::match_results<std::string_view::const_iterator> match;
  if (!std::regex_match(text.begin(), text.end(), match, pattern)) {
    throw ProtocolError("not an absolute http URI: '" + std::string(text) + "'");
  }
  Uri uri;
  uri.scheme = match[1].str();
  uri.host = match[2].str();
  if (match[3].matched) {
    uri.port = std::stoi(match[3].str());
    if (uri.port < 1 || uri.port > 65535) {
      throw ProtocolError("port out of range in '" + std::string(text) + "'");
    }
  }
  if (match[4].matched) {
    uri.path = match[4].str();
    while (!uri.path.empty() && uri.path.back() == '/') uri.path.pop_back();
  }
  return uri;
}

}  // namespace reclab::protocol
