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

#include "reclab/orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <random>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <spdlog/spdlog.h>

#include "reclab/metrics.hpp"
#include "sha256.hpp"

namespace reclab::orchestrator {

using nlohmann::json;
namespace fs = std::filesystem;

std::string_view to_string(ExperimentStatus status) {
  switch (status) {
    case ExperimentStatus::kQueued:
      return "queued";
    case ExperimentStatus::kSplitting:
      return "splitting";
    case ExperimentStatus::kRunning:
      return "running";
    case ExperimentStatus::kDone:
      return "done";
    case ExperimentStatus::kFailed:
      return "failed";
  }
  return "failed";
}

std::string_view to_string(RecommenderStatus status) {
  switch (status) {
    case RecommenderStatus::kPending:
      return "pending";
    case RecommenderStatus::kTraining:
      return "training";
    case RecommenderStatus::kRecommending:
      return "recommending";
    case RecommenderStatus::kDone:
      return "done";
    case RecommenderStatus::kFailed:
      return "failed";
  }
  return "failed";
}

ExperimentStatus parse_experiment_status(std::string_view name) {
  for (auto status : {ExperimentStatus::kQueued, ExperimentStatus::kSplitting,
                      ExperimentStatus::kRunning, ExperimentStatus::kDone,
                      ExperimentStatus::kFailed}) {
    if (to_string(status) == name) return status;
  }
  throw ValidationError("unknown experiment status '" + std::string(name) + "'");
}

namespace {

RecommenderStatus parse_recommender_status(std::string_view name) {
  for (auto status : {RecommenderStatus::kPending, RecommenderStatus::kTraining,
                      RecommenderStatus::kRecommending, RecommenderStatus::kDone,
                      RecommenderStatus::kFailed}) {
    if (to_string(status) == name) return status;
  }
  throw ValidationError("unknown recommender status '" + std::string(name) + "'");
}

json optional_string(const std::optional<std::string>& value) {
  return value ? json(*value) : json(nullptr);
}

std::optional<std::string> read_optional_string(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<std::string>();
}

std::string iso8601_now() {
  const auto now = std::chrono::system_clock::now();
  const auto millis = std::chrono::duration_cast<std::chrono::milliseconds>(
                          now.time_since_epoch())
                          .count();
  const std::time_t seconds = static_cast<std::time_t>(millis / 1000);
  std::tm utc{};
  gmtime_r(&seconds, &utc);
  char buffer[40];
  std::strftime(buffer, sizeof buffer, "%Y-%m-%dT%H:%M:%S", &utc);
  char out[48];
  std::snprintf(out, sizeof out, "%s.%03lldZ", buffer,
                static_cast<long long>(millis % 1000));
  return out;
}

std::string percent_encode(std::string_view text) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : text) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 0xF]);
    }
  }
  return out;
}

void write_atomically(const fs::path& path, const std::string& content) {
  const auto temporary = path.string() + ".tmp";
  {
    std::ofstream out(temporary, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + temporary);
    out << content;
    out.flush();
    if (!out) throw Error("cannot write " + temporary);
  }
  fs::rename(temporary, path);
}

}  // namespace

// ---------------------------------------------------------------------------
// Record serialization.

json to_json(const ExperimentRecord& record) {
  json recommenders = json::object();
  for (const auto& [id, result] : record.per_recommender) {
    json entry{{"status", std::string(to_string(result.status))},
               {"metrics", nullptr},
               {"violations", result.violations},
               {"train_seconds", result.train_seconds},
               {"recommend_seconds", result.recommend_seconds},
               {"detail", optional_string(result.detail)},
               {"warning", optional_string(result.warning)}};
    if (result.metrics) entry["metrics"] = *result.metrics;
    recommenders[id] = std::move(entry);
  }
  return json{{"id", record.id},
              {"config", record.config},
              {"status", std::string(to_string(record.status))},
              {"detail", optional_string(record.detail)},
              {"split",
               {{"train_size", record.train_size},
                {"test_size", record.test_size},
                {"test_users", record.test_users},
                {"training_set_sha256", optional_string(record.training_set_sha256)}}},
              {"recommenders", std::move(recommenders)},
              {"created_at", record.created_at},
              {"finished_at", optional_string(record.finished_at)},
              {"digest", optional_string(record.digest)}};
}

ExperimentRecord record_from_json(const json& j) {
  try {
    ExperimentRecord record;
    record.id = j.at("id").get<std::string>();
    record.config = j.at("config").get<ExperimentConfig>();
    record.status = parse_experiment_status(j.at("status").get<std::string>());
    record.detail = read_optional_string(j, "detail");
    const auto& split = j.at("split");
    record.train_size = split.at("train_size").get<std::size_t>();
    record.test_size = split.at("test_size").get<std::size_t>();
    record.test_users = split.at("test_users").get<std::size_t>();
    record.training_set_sha256 = read_optional_string(split, "training_set_sha256");
    for (const auto& [id, entry] : j.at("recommenders").items()) {
      RecommenderResult result;
      result.status = parse_recommender_status(entry.at("status").get<std::string>());
      if (!entry.at("metrics").is_null()) {
        result.metrics = entry.at("metrics").get<MetricsReport>();
      }
      result.violations = entry.at("violations").get<protocol::ViolationCounts>();
      result.train_seconds = entry.at("train_seconds").get<double>();
      result.recommend_seconds = entry.at("recommend_seconds").get<double>();
      result.detail = read_optional_string(entry, "detail");
      result.warning = read_optional_string(entry, "warning");
      record.per_recommender.emplace(id, std::move(result));
    }
    record.created_at = j.at("created_at").get<std::string>();
    record.finished_at = read_optional_string(j, "finished_at");
    record.digest = read_optional_string(j, "digest");
    return record;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed experiment record: ") + e.what());
  }
}

std::string compute_digest(const ExperimentRecord& record) {
  auto j = to_json(record);
  j.erase("digest");
  return "sha256:" + internal::Sha256::of(j.dump());
}

ExperimentSummary summarize(const ExperimentRecord& record) {
  return ExperimentSummary{record.id,
                           record.config.dataset_id,
                           record.config.split_method,
                           record.config.k,
                           record.status,
                           record.config.recommender_ids,
                           record.created_at};
}

json to_json(const ExperimentSummary& summary) {
  return json{{"id", summary.id},
              {"dataset_id", summary.dataset_id},
              {"split_method", std::string(to_string(summary.split_method))},
              {"k", summary.k},
              {"status", std::string(to_string(summary.status))},
              {"recommender_ids", summary.recommender_ids},
              {"created_at", summary.created_at}};
}

json to_json(const ListPage& page) {
  json experiments = json::array();
  for (const auto& summary : page.experiments) experiments.push_back(to_json(summary));
  return json{{"total", page.total},
              {"page", page.page},
              {"page_size", page.page_size},
              {"experiments", std::move(experiments)}};
}

// ---------------------------------------------------------------------------
// Store.

ExperimentStore::ExperimentStore(fs::path dir) : dir_(std::move(dir)) {
  fs::create_directories(dir_ / "records");
  std::unique_lock lock(mutex_);
  rebuild_index_locked();
}

fs::path ExperimentStore::record_path(const std::string& id) const {
  return dir_ / "records" / (id + ".json");
}

void ExperimentStore::rebuild_index_locked() {
  index_.clear();
  for (const auto& entry : fs::directory_iterator(dir_ / "records")) {
    if (entry.path().extension() != ".json") continue;
    try {
      std::ifstream in(entry.path());
      const auto record = record_from_json(json::parse(in));
      index_[record.id] = summarize(record);
    } catch (const std::exception& e) {
      spdlog::error("skipping unreadable record {}: {}", entry.path().string(),
                    e.what());
    }
  }
  write_index_locked();
}

void ExperimentStore::write_index_locked() const {
  json index = json::array();
  for (auto it = index_.rbegin(); it != index_.rend(); ++it) {
    index.push_back(to_json(it->second));
  }
  write_atomically(dir_ / "index.json", index.dump(2) + "\n");
}

std::string ExperimentStore::allocate_id() {
  std::unique_lock lock(mutex_);
  auto millis = std::chrono::duration_cast<std::chrono::milliseconds>(
                    std::chrono::system_clock::now().time_since_epoch())
                    .count();
  if (!index_.empty()) {
    // Ids start with yyyymmddThhmmssmmm; never go backwards relative to them.
    const auto& newest = index_.rbegin()->first;
    std::tm tm{};
    if (newest.size() >= 18 &&
        strptime(newest.substr(0, 15).c_str(), "%Y%m%dT%H%M%S", &tm)) {
      const auto seconds = static_cast<std::int64_t>(timegm(&tm));
      const auto newest_millis = seconds * 1000 + std::stoll(newest.substr(15, 3));
      last_id_millis_ = std::max<std::int64_t>(last_id_millis_, newest_millis);
    }
  }
  if (millis <= last_id_millis_) millis = last_id_millis_ + 1;
  last_id_millis_ = millis;

  const std::time_t seconds = static_cast<std::time_t>(millis / 1000);
  std::tm utc{};
  gmtime_r(&seconds, &utc);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y%m%dT%H%M%S", &utc);
  std::random_device device;
  char id[64];
  std::snprintf(id, sizeof id, "%s%03lldZ-%06x", stamp,
                static_cast<long long>(millis % 1000), device() & 0xFFFFFFu);
  return id;
}

void ExperimentStore::save(ExperimentRecord record) {
  std::unique_lock lock(mutex_);
  const auto existing = index_.find(record.id);
  if (existing != index_.end() && is_terminal(existing->second.status)) {
    throw ImmutableRecordError("experiment " + record.id +
                               " is terminal and cannot be modified");
  }
  record.digest.reset();
  if (is_terminal(record.status)) record.digest = compute_digest(record);
  write_atomically(record_path(record.id), to_json(record).dump(2) + "\n");
  auto summary = summarize(record);
  if (existing != index_.end() && existing->second == summary) return;
  index_[record.id] = std::move(summary);
  write_index_locked();
}

void ExperimentStore::import_record(const ExperimentRecord& record) {
  if (!is_terminal(record.status)) {
    throw ValidationError("only finished experiments can be imported");
  }
  if (!record.digest || *record.digest != compute_digest(record)) {
    throw IntegrityError("experiment " + record.id + " does not match its digest");
  }
  std::unique_lock lock(mutex_);
  if (index_.contains(record.id) || fs::exists(record_path(record.id))) {
    throw ImmutableRecordError("experiment " + record.id + " already exists");
  }
  write_atomically(record_path(record.id), to_json(record).dump(2) + "\n");
  index_[record.id] = summarize(record);
  write_index_locked();
}

ExperimentRecord ExperimentStore::load(const std::string& id) const {
  std::shared_lock lock(mutex_);
  if (!index_.contains(id)) throw NotFoundError("unknown experiment '" + id + "'");
  std::ifstream in(record_path(id));
  if (!in) throw NotFoundError("experiment '" + id + "' has no record file");
  json j = json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) throw IntegrityError("record of " + id + " is not valid JSON");
  auto record = record_from_json(j);
  if (is_terminal(record.status) &&
      (!record.digest || *record.digest != compute_digest(record))) {
    throw IntegrityError("record of " + id + " does not match its digest");
  }
  return record;
}

bool ExperimentStore::contains(const std::string& id) const {
  std::shared_lock lock(mutex_);
  return index_.contains(id);
}

std::vector<ExperimentSummary> ExperimentStore::summaries() const {
  std::shared_lock lock(mutex_);
  std::vector<ExperimentSummary> out;
  for (auto it = index_.rbegin(); it != index_.rend(); ++it) out.push_back(it->second);
  return out;
}

ListPage ExperimentStore::list(const ListQuery& query) const {
  ListPage page;
  page.page = std::max<std::size_t>(1, query.page);
  page.page_size = std::max<std::size_t>(1, query.page_size);
  std::size_t skip = (page.page - 1) * page.page_size;
  for (auto& summary : summaries()) {
    if (query.status && summary.status != *query.status) continue;
    if (query.dataset_id && summary.dataset_id != *query.dataset_id) continue;
    ++page.total;
    if (skip > 0) {
      --skip;
    } else if (page.experiments.size() < page.page_size) {
      page.experiments.push_back(std::move(summary));
    }
  }
  return page;
}

// ---------------------------------------------------------------------------
// Registries and configuration.

RecommenderRegistry RecommenderRegistry::load(const fs::path& file) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(file.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ValidationError("cannot read recommender registry: " +
                          std::string(e.what()));
  }
  RecommenderRegistry registry;
  for (const auto& [id, section] : tree) {
    const auto uri = section.get_optional<std::string>("uri");
    if (!uri) throw ValidationError("recommender '" + id + "' has no uri");
    registry.add(id, *uri);
  }
  return registry;
}

void RecommenderRegistry::add(std::string id, std::string base_uri) {
  try {
    protocol::parse_uri(base_uri);
  } catch (const protocol::ProtocolError& e) {
    throw ValidationError("recommender '" + id + "': " + e.what());
  }
  uris_.insert_or_assign(std::move(id), std::move(base_uri));
}

const std::string& RecommenderRegistry::uri(const std::string& id) const {
  const auto it = uris_.find(id);
  if (it == uris_.end()) throw NotFoundError("unknown recommender '" + id + "'");
  return it->second;
}

EvaluatorConfig EvaluatorConfig::load(const fs::path& file) {
  return load(file, [](const char* name) -> std::optional<std::string> {
    const char* value = std::getenv(name);
    if (!value) return std::nullopt;
    return std::string(value);
  });
}

EvaluatorConfig EvaluatorConfig::load(const fs::path& file, const Environment& env) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(file.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ValidationError("cannot read configuration: " + std::string(e.what()));
  }

  // Environment first, then the file, then the default.
  auto setting = [&](const char* variable, const char* key,
                     std::string fallback) -> std::string {
    if (auto value = env(variable)) return *value;
    return tree.get<std::string>(key, fallback);
  };
  auto integer = [&](const char* variable, const char* key, long long fallback) {
    const auto text = setting(variable, key, std::to_string(fallback));
    try {
      std::size_t used = 0;
      const auto value = std::stoll(text, &used);
      if (used != text.size() || value < 0) throw std::invalid_argument(text);
      return value;
    } catch (const std::exception&) {
      throw ValidationError(std::string("setting ") + key + " (" + variable +
                            ") must be a non-negative integer, got '" + text + "'");
    }
  };
  const auto base = file.parent_path();
  auto path = [&](const std::string& text) -> fs::path {
    if (text.empty()) return {};
    fs::path p(text);
    return p.is_relative() ? base / p : p;
  };

  EvaluatorConfig config;
  config.host = setting("RECLAB_HOST", "server.host", config.host);
  config.port = static_cast<int>(integer("RECLAB_PORT", "server.port", config.port));
  if (config.port > 65535) throw ValidationError("server.port is out of range");
  config.public_url = setting("RECLAB_PUBLIC_URL", "server.public_url", "");
  config.data_dir = path(setting("RECLAB_DATA_DIR", "storage.data_dir", "data"));
  config.datasets_file = path(setting("RECLAB_DATASETS", "registry.datasets", ""));
  config.recommenders_file =
      path(setting("RECLAB_RECOMMENDERS", "registry.recommenders", ""));
  config.client.poll_interval = std::chrono::milliseconds(
      integer("RECLAB_POLL_INTERVAL_MS", "protocol.poll_interval_ms", 2000));
  config.client.train_timeout = std::chrono::seconds(
      integer("RECLAB_TRAIN_TIMEOUT_S", "protocol.train_timeout_s", 3600));
  config.client.recommend_timeout = std::chrono::seconds(
      integer("RECLAB_RECOMMEND_TIMEOUT_S", "protocol.recommend_timeout_s", 3600));
  config.client.retries =
      static_cast<int>(integer("RECLAB_RETRIES", "protocol.retries", 3));
  config.client.backoff = std::chrono::milliseconds(
      integer("RECLAB_BACKOFF_MS", "protocol.backoff_ms", 500));
  config.recommender_parallelism = std::max(
      1, static_cast<int>(integer("RECLAB_PARALLELISM",
                                  "protocol.recommender_parallelism", 1)));
  if (config.datasets_file.empty()) {
    throw ValidationError("registry.datasets (RECLAB_DATASETS) is required");
  }
  if (config.recommenders_file.empty()) {
    throw ValidationError("registry.recommenders (RECLAB_RECOMMENDERS) is required");
  }
  return config;
}

std::string EvaluatorConfig::effective_public_url() const {
  if (!public_url.empty()) return public_url;
  const std::string reachable = host == "0.0.0.0" ? "127.0.0.1" : host;
  return "http://" + reachable + ":" + std::to_string(port);
}

ConfigRejected::ConfigRejected(std::vector<std::string> violations)
    : ValidationError([&] {
        std::string message = "experiment configuration rejected:";
        for (const auto& violation : violations) message += " " + violation + ";";
        return message;
      }()),
      violations_(std::move(violations)) {}

// ---------------------------------------------------------------------------
// Orchestrator.

struct Orchestrator::Run {
  ExperimentRecord record;
  std::mutex record_mutex;
  std::optional<metrics::EvaluationContext> context;
  protocol::SeenIndex seen;
  protocol::RecommendRequest request;
  std::string training_set_uri;
};

Orchestrator::Orchestrator(ExperimentStore& store, datasets::DatasetRegistry datasets,
                           RecommenderRegistry recommenders,
                           OrchestratorOptions options)
    : store_(store),
      datasets_(std::move(datasets)),
      recommenders_(std::move(recommenders)),
      options_(std::move(options)) {}

Orchestrator::~Orchestrator() { stop(); }

void Orchestrator::start() {
  for (const auto& summary : store_.summaries()) {
    if (summary.status == ExperimentStatus::kSplitting ||
        summary.status == ExperimentStatus::kRunning) {
      auto record = store_.load(summary.id);
      record.status = ExperimentStatus::kFailed;
      record.detail = "interrupted by an evaluator restart";
      record.finished_at = iso8601_now();
      persist(record);
    }
  }
  std::lock_guard lock(mutex_);
  // summaries() is newest first; the queue runs oldest first.
  auto pending = store_.summaries();
  for (auto it = pending.rbegin(); it != pending.rend(); ++it) {
    if (it->status == ExperimentStatus::kQueued &&
        std::find(queue_.begin(), queue_.end(), it->id) == queue_.end()) {
      queue_.push_back(it->id);
    }
  }
  stopping_ = false;
  if (!worker_.joinable()) worker_ = std::thread([this] { worker_loop(); });
  changed_.notify_all();
}

void Orchestrator::stop() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  changed_.notify_all();
  if (worker_.joinable()) worker_.join();
}

void Orchestrator::worker_loop() {
  while (true) {
    std::string id;
    {
      std::unique_lock lock(mutex_);
      changed_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
      if (stopping_) return;
      id = queue_.front();
      queue_.pop_front();
    }
    try {
      run_experiment(id);
    } catch (const std::exception& e) {
      spdlog::error("experiment {} aborted: {}", id, e.what());
    }
  }
}

std::string Orchestrator::submit(const ExperimentConfig& config) {
  auto violations = validate_config(config);
  if (!config.dataset_id.empty() && !datasets_.contains(config.dataset_id)) {
    violations.push_back("unknown dataset '" + config.dataset_id + "'");
  }
  for (const auto& id : config.recommender_ids) {
    if (!id.empty() && !recommenders_.contains(id)) {
      violations.push_back("unknown recommender '" + id + "'");
    }
  }
  if (violations.empty() && config.split_method == SplitMethod::kTimestamp &&
      !datasets_.at(config.dataset_id).has_timestamps) {
    violations.push_back("dataset '" + config.dataset_id +
                         "' has no timestamps; use the random split");
  }
  if (!violations.empty()) throw ConfigRejected(std::move(violations));

  ExperimentRecord record;
  record.id = store_.allocate_id();
  record.config = config;
  record.status = ExperimentStatus::kQueued;
  record.created_at = iso8601_now();
  for (const auto& id : config.recommender_ids) record.per_recommender[id] = {};
  persist(record);
  {
    std::lock_guard lock(mutex_);
    queue_.push_back(record.id);
  }
  changed_.notify_all();
  return record.id;
}

void Orchestrator::persist(const ExperimentRecord& record) {
  store_.save(record);
  changed_.notify_all();
}

void Orchestrator::set_public_url(std::string url) {
  std::lock_guard lock(mutex_);
  options_.public_url = std::move(url);
}

std::shared_ptr<const RatingSet> Orchestrator::training_set(const std::string& id) const {
  std::lock_guard lock(mutex_);
  const auto it = active_splits_.find(id);
  if (it == active_splits_.end()) {
    throw NotFoundError("no materialized training set for experiment '" + id + "'");
  }
  return it->second;
}

std::optional<ExperimentRecord> Orchestrator::wait_for(
    const std::string& id, std::chrono::milliseconds timeout) const {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  while (true) {
    auto record = store_.load(id);
    if (is_terminal(record.status)) return record;
    std::unique_lock lock(mutex_);
    if (changed_.wait_until(lock, deadline) == std::cv_status::timeout) {
      lock.unlock();
      record = store_.load(id);
      if (is_terminal(record.status)) return record;
      return std::nullopt;
    }
  }
}

ExperimentRecord Orchestrator::run_experiment(const std::string& id) {
  Run run;
  run.record = store_.load(id);
  auto& record = run.record;
  if (record.status != ExperimentStatus::kQueued) {
    throw ValidationError("experiment " + id + " is not queued");
  }
  {
    std::lock_guard lock(mutex_);
    std::erase(queue_, id);
  }

  auto fail = [&](std::string detail) {
    spdlog::error("experiment {} failed: {}", id, detail);
    record.status = ExperimentStatus::kFailed;
    record.detail = std::move(detail);
    record.finished_at = iso8601_now();
    persist(record);
    std::lock_guard lock(mutex_);
    active_splits_.erase(id);
    return record;
  };

  record.status = ExperimentStatus::kSplitting;
  persist(record);

  const auto& config = record.config;
  datasets::Split split;
  try {
    const auto& descriptor = datasets_.at(config.dataset_id);
    if (config.split_method == SplitMethod::kTimestamp && !descriptor.has_timestamps) {
      return fail("dataset '" + config.dataset_id +
                  "' has no timestamps; the timestamp split is unavailable");
    }
    auto loaded = datasets::load_dataset(descriptor);
    if (loaded.malformed_lines > 0 || loaded.duplicate_ratings > 0) {
      spdlog::warn("dataset {}: {} malformed lines skipped, {} duplicate ratings "
                   "collapsed",
                   config.dataset_id, loaded.malformed_lines,
                   loaded.duplicate_ratings);
    }
    split = config.split_method == SplitMethod::kRandom
                ? datasets::split_random(loaded.ratings, config.test_fraction,
                                         config.seed)
                : datasets::split_timestamp(loaded.ratings, config.test_fraction);
  } catch (const std::exception& e) {
    return fail(e.what());
  }
  if (split.train.empty()) return fail("the split produced an empty training set");
  if (split.test.empty()) return fail("the split produced an empty test set");

  auto train = std::make_shared<const RatingSet>(std::move(split.train));
  {
    internal::Sha256 hash;
    protocol::TrainingSetStreamer streamer(train);
    while (auto chunk = streamer.next()) hash.update(*chunk);
    record.training_set_sha256 = hash.hex_digest();
  }
  run.context = metrics::build_context(*train, split.test, config.rating_threshold,
                                       config.k);
  run.seen = protocol::SeenIndex::build(*train);
  run.request.users = run.context->test_users();
  run.request.k = config.k;
  record.train_size = train->size();
  record.test_size = split.test.size();
  record.test_users = run.request.users.size();
  {
    std::lock_guard lock(mutex_);
    active_splits_[id] = train;
    run.training_set_uri = options_.public_url + "/experiments/" + id + "/training-set";
  }

  record.status = ExperimentStatus::kRunning;
  persist(record);

  const auto& ids = config.recommender_ids;
  const auto workers = std::min<std::size_t>(
      ids.size(), static_cast<std::size_t>(std::max(1, options_.recommender_parallelism)));
  if (workers <= 1) {
    for (const auto& recommender : ids) drive_recommender(run, recommender);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (auto i = next++; i < ids.size(); i = next++) drive_recommender(run, ids[i]);
      });
    }
  }

  {
    std::lock_guard lock(mutex_);
    active_splits_.erase(id);
  }
  record.status = ExperimentStatus::kDone;
  record.finished_at = iso8601_now();
  persist(record);
  spdlog::info("experiment {} done", id);
  return store_.load(id);
}

void Orchestrator::drive_recommender(Run& run, const std::string& recommender_id) {
  using Clock = std::chrono::steady_clock;
  auto update = [&](auto mutate) {
    std::lock_guard lock(run.record_mutex);
    mutate(run.record.per_recommender[recommender_id]);
    persist(run.record);
  };
  auto seconds_since = [](Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
  };
  auto fail = [&](std::string detail) {
    spdlog::warn("experiment {}: recommender {} failed: {}", run.record.id,
                 recommender_id, detail);
    update([&](RecommenderResult& result) {
      result.status = RecommenderStatus::kFailed;
      result.detail = std::move(detail);
    });
  };

  try {
    protocol::RecommenderClient client(recommenders_.uri(recommender_id),
                                       options_.client);
    update([](RecommenderResult& result) { result.status = RecommenderStatus::kTraining; });

    const auto train_start = Clock::now();
    const auto status = client.train_remote(
        {run.training_set_uri + "?recommender=" + percent_encode(recommender_id),
         run.record.config.rating_threshold});
    const double train_seconds = seconds_since(train_start);
    update([&](RecommenderResult& result) { result.train_seconds = train_seconds; });
    if (status.status != protocol::ModelState::kReady) {
      client.delete_model();
      return fail(status.detail.value_or("training failed"));
    }

    update([](RecommenderResult& result) {
      result.status = RecommenderStatus::kRecommending;
    });
    const auto recommend_start = Clock::now();
    auto outcome = client.recommend_remote(run.request, run.seen);
    const double recommend_seconds = seconds_since(recommend_start);
    const bool deleted = client.delete_model();
    if (outcome.response.status != protocol::RecommendState::kReady) {
      update([&](RecommenderResult& result) {
        result.recommend_seconds = recommend_seconds;
      });
      return fail(outcome.response.detail.value_or("recommendation failed"));
    }

    RecommendationMap lists;
    for (auto& list : outcome.response.recommendations) {
      lists.emplace(list.user, std::move(list.items));
    }
    const auto report = metrics::evaluate_all(*run.context, lists);
    update([&](RecommenderResult& result) {
      result.status = RecommenderStatus::kDone;
      result.metrics = report;
      result.violations = outcome.violations;
      result.recommend_seconds = recommend_seconds;
      if (!deleted) result.warning = "model teardown failed";
    });
  } catch (const std::exception& e) {
    fail(e.what());
  }
}

}  // namespace reclab::orchestrator
