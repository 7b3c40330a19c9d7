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
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "reclab/datasets.hpp"
#include "reclab/domain.hpp"
#include "reclab/protocol.hpp"

namespace reclab::orchestrator {

enum class ExperimentStatus { kQueued, kSplitting, kRunning, kDone, kFailed };
enum class RecommenderStatus { kPending, kTraining, kRecommending, kDone, kFailed };

std::string_view to_string(ExperimentStatus status);
std::string_view to_string(RecommenderStatus status);
ExperimentStatus parse_experiment_status(std::string_view name);

inline bool is_terminal(ExperimentStatus status) {
  return status == ExperimentStatus::kDone || status == ExperimentStatus::kFailed;
}

struct RecommenderResult {
  RecommenderStatus status = RecommenderStatus::kPending;
  std::optional<MetricsReport> metrics;
  protocol::ViolationCounts violations;
  double train_seconds = 0.0;
  double recommend_seconds = 0.0;
  std::optional<std::string> detail;   // failure reason
  std::optional<std::string> warning;  // e.g. failed model teardown

  friend bool operator==(const RecommenderResult&, const RecommenderResult&) = default;
};

struct ExperimentRecord {
  std::string id;
  ExperimentConfig config;
  ExperimentStatus status = ExperimentStatus::kQueued;
  std::optional<std::string> detail;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  std::size_t test_users = 0;
  // SHA-256 of the training set exactly as served to recommenders.
  std::optional<std::string> training_set_sha256;
  std::map<std::string, RecommenderResult> per_recommender;
  std::string created_at;
  std::optional<std::string> finished_at;
  // SHA-256 over the canonical JSON of everything else; set once terminal.
  std::optional<std::string> digest;

  friend bool operator==(const ExperimentRecord&, const ExperimentRecord&) = default;
};

nlohmann::json to_json(const ExperimentRecord& record);
// Throws ValidationError on malformed input.
ExperimentRecord record_from_json(const nlohmann::json& j);
std::string compute_digest(const ExperimentRecord& record);

struct ExperimentSummary {
  std::string id;
  std::string dataset_id;
  SplitMethod split_method = SplitMethod::kRandom;
  int k = 0;
  ExperimentStatus status = ExperimentStatus::kQueued;
  std::vector<std::string> recommender_ids;
  std::string created_at;

  friend bool operator==(const ExperimentSummary&, const ExperimentSummary&) = default;
};

nlohmann::json to_json(const ExperimentSummary& summary);
ExperimentSummary summarize(const ExperimentRecord& record);

struct ListQuery {
  std::optional<ExperimentStatus> status;
  std::optional<std::string> dataset_id;
  std::size_t page = 1;  // 1-based
  std::size_t page_size = 50;
};

struct ListPage {
  std::size_t total = 0;
  std::size_t page = 1;
  std::size_t page_size = 50;
  std::vector<ExperimentSummary> experiments;  // newest first
};

nlohmann::json to_json(const ListPage& page);

// Raised when a stored record no longer matches its digest.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

// Raised when saving over a terminal record or importing an existing id.
class ImmutableRecordError : public Error {
 public:
  using Error::Error;
};

// One JSON file per experiment under <dir>/records plus <dir>/index.json.
// Terminal records are sealed with a digest and never rewritten; reads
// re-verify the digest.
class ExperimentStore {
 public:
  // Creates the directory if needed; rebuilds the index from the record files
  // when it is missing or unreadable.
  explicit ExperimentStore(std::filesystem::path dir);

  // Time-ordered id: UTC timestamp with milliseconds plus a random suffix.
  // Strictly increasing within one store.
  std::string allocate_id();

  // Persists the record, sealing it when terminal. Throws
  // ImmutableRecordError if the stored copy is already terminal.
  void save(ExperimentRecord record);

  // Stores a terminal record produced elsewhere after checking its digest.
  void import_record(const ExperimentRecord& record);

  // Throws NotFoundError or IntegrityError.
  ExperimentRecord load(const std::string& id) const;
  bool contains(const std::string& id) const;
  ListPage list(const ListQuery& query) const;
  std::vector<ExperimentSummary> summaries() const;

  const std::filesystem::path& directory() const { return dir_; }

 private:
  std::filesystem::path record_path(const std::string& id) const;
  void write_index_locked() const;
  void rebuild_index_locked();

  std::filesystem::path dir_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, ExperimentSummary> index_;
  std::int64_t last_id_millis_ = 0;
};

// recommender_id -> base URI, read from an INI file:
//
//   [most-popular]
//   uri = http://127.0.0.1:7002
class RecommenderRegistry {
 public:
  static RecommenderRegistry load(const std::filesystem::path& file);
  void add(std::string id, std::string base_uri);
  // Throws NotFoundError.
  const std::string& uri(const std::string& id) const;
  bool contains(const std::string& id) const { return uris_.contains(id); }
  const std::map<std::string, std::string>& entries() const { return uris_; }

 private:
  std::map<std::string, std::string> uris_;
};

// Evaluator settings, read from an INI file and overridable through
// RECLAB_* environment variables (see README).
struct EvaluatorConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string public_url;  // defaults to http://host:port
  std::filesystem::path data_dir = "data";
  std::filesystem::path datasets_file;
  std::filesystem::path recommenders_file;
  protocol::ClientOptions client;
  int recommender_parallelism = 1;

  using Environment = std::function<std::optional<std::string>(const char*)>;

  // Throws ValidationError. Relative paths resolve against the file's
  // directory.
  static EvaluatorConfig load(const std::filesystem::path& file,
                              const Environment& env);
  static EvaluatorConfig load(const std::filesystem::path& file);
  std::string effective_public_url() const;
};

// Raised by submit() when a configuration is rejected.
class ConfigRejected : public ValidationError {
 public:
  explicit ConfigRejected(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

struct OrchestratorOptions {
  protocol::ClientOptions client;
  // Base URL recommenders use to reach the evaluator API.
  std::string public_url = "http://127.0.0.1:8080";
  // Recommenders driven concurrently within one experiment.
  int recommender_parallelism = 1;
};

// Runs experiments one at a time from a FIFO queue.
class Orchestrator {
 public:
  Orchestrator(ExperimentStore& store, datasets::DatasetRegistry datasets,
               RecommenderRegistry recommenders, OrchestratorOptions options);
  ~Orchestrator();
  Orchestrator(const Orchestrator&) = delete;
  Orchestrator& operator=(const Orchestrator&) = delete;

  // Requeues queued records, fails records interrupted mid-run, then starts
  // the worker thread.
  void start();
  void stop();

  // Validates, persists a queued record and enqueues it. Throws
  // ConfigRejected.
  std::string submit(const ExperimentConfig& config);

  // Executes a queued experiment on the calling thread.
  ExperimentRecord run_experiment(const std::string& id);

  ExperimentRecord get(const std::string& id) const { return store_.load(id); }
  ListPage list(const ListQuery& query) const { return store_.list(query); }
  // See ExperimentStore::import_record.
  void import_record(const ExperimentRecord& record) { store_.import_record(record); }

  // Training set of an experiment whose split is materialized. Throws
  // NotFoundError.
  std::shared_ptr<const RatingSet> training_set(const std::string& id) const;

  // Blocks until the record is terminal or the timeout expires.
  std::optional<ExperimentRecord> wait_for(const std::string& id,
                                           std::chrono::milliseconds timeout) const;

  void set_public_url(std::string url);
  const datasets::DatasetRegistry& datasets() const { return datasets_; }
  const RecommenderRegistry& recommenders() const { return recommenders_; }
  const protocol::ClientOptions& client_options() const { return options_.client; }

 private:
  struct Run;

  void worker_loop();
  void drive_recommender(Run& run, const std::string& recommender_id);
  // Saves the record and wakes waiters.
  void persist(const ExperimentRecord& record);

  ExperimentStore& store_;
  datasets::DatasetRegistry datasets_;
  RecommenderRegistry recommenders_;
  OrchestratorOptions options_;

  mutable std::mutex mutex_;
  mutable std::condition_variable changed_;
  std::deque<std::string> queue_;
  bool stopping_ = false;
  std::thread worker_;
  std::map<std::string, std::shared_ptr<const RatingSet>> active_splits_;
};

}  // namespace reclab::orchestrator
