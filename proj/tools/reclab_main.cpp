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

// reclab command-line interface.
//
// Exit codes: 0 ok, 1 runtime failure, 2 usage or configuration error,
// 3 environment error (port in use, unwritable directory).

#include <pthread.h>
#include <signal.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <httplib.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "reclab/datasets.hpp"
#include "reclab/evaluator_service.hpp"
#include "reclab/metrics.hpp"
#include "reclab/orchestrator.hpp"
#include "reclab/protocol.hpp"
#include "reclab/recommenders.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kRuntime = 1;
constexpr int kUsage = 2;
constexpr int kEnvironment = 3;

struct Exit {
  int code;
  std::string message;
};

enum class Format { kTable, kJsonLines };

// Blocks SIGINT/SIGTERM for the whole process and handles them on a
// dedicated thread. Must be constructed before any other thread starts.
class SignalWaiter {
 public:
  SignalWaiter() {
    sigemptyset(&set_);
    sigaddset(&set_, SIGINT);
    sigaddset(&set_, SIGTERM);
    sigaddset(&set_, SIGUSR1);
    pthread_sigmask(SIG_BLOCK, &set_, nullptr);
  }
  ~SignalWaiter() {
    if (!thread_.joinable()) return;
    finished_ = true;
    pthread_kill(thread_.native_handle(), SIGUSR1);
    thread_.join();
  }

  // First signal calls on_stop; a second one exits immediately.
  void start(std::function<void()> on_stop) {
    thread_ = std::thread([this, on_stop = std::move(on_stop)] {
      bool stopping = false;
      while (true) {
        int signal = 0;
        sigwait(&set_, &signal);
        if (finished_) return;
        if (signal == SIGUSR1) continue;
        if (stopping) {
          spdlog::warn("second signal, exiting without waiting");
          std::_Exit(130);
        }
        stopping = true;
        spdlog::info("shutting down (signal again to force)");
        on_stop();
      }
    });
  }

 private:
  sigset_t set_;
  std::thread thread_;
  std::atomic<bool> finished_{false};
};

std::string default_api() {
  const char* api = std::getenv("RECLAB_API");
  return api ? api : "http://127.0.0.1:8080";
}

// Thin client for the evaluator's public API.
class Api {
 public:
  explicit Api(const std::string& base) {
    try {
      uri_ = reclab::protocol::parse_uri(base);
    } catch (const reclab::protocol::ProtocolError& e) {
      throw Exit{kUsage, std::string("invalid --api: ") + e.what()};
    }
    client_ = std::make_unique<httplib::Client>(uri_.origin());
    client_->set_connection_timeout(std::chrono::seconds(10));
    client_->set_read_timeout(std::chrono::seconds(60));
  }

  httplib::Result get(const std::string& path) {
    return check(client_->Get(uri_.path + path), "GET " + path);
  }
  httplib::Result post(const std::string& path, const std::string& body) {
    return check(client_->Post(uri_.path + path, body, "application/json"), "POST " + path);
  }

 private:
  httplib::Result check(httplib::Result result, const std::string& what) {
    if (!result) {
      throw Exit{kRuntime, "evaluator at " + uri_.origin() + uri_.path + " unreachable (" +
                               what + ": " + httplib::to_string(result.error()) + ")"};
    }
    return result;
  }

  reclab::protocol::Uri uri_;
  std::unique_ptr<httplib::Client> client_;
};

std::string error_of(const httplib::Response& response) {
  const auto body = json::parse(response.body, nullptr, false);
  if (body.is_object() && body.contains("error")) return body["error"].get<std::string>();
  return "HTTP " + std::to_string(response.status);
}

std::string fixed(double value) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(6) << value;
  return out.str();
}

void print_table(std::ostream& out, const std::map<std::string, std::optional<reclab::MetricsReport>>& rows,
                 const std::map<std::string, std::string>& notes = {}) {
  std::size_t width = std::string("Recommender").size();
  for (const auto& [id, report] : rows) width = std::max(width, id.size());
  out << std::left << std::setw(static_cast<int>(width)) << "Recommender";
  for (const char* column : {"Coverage", "Precision", "Recall", "NDCG", "Novelty",
                             "Diversity", "Serendipity"}) {
    out << "  " << std::right << std::setw(11) << column;
  }
  out << "\n";
  for (const auto& [id, report] : rows) {
    out << std::left << std::setw(static_cast<int>(width)) << id;
    if (!report) {
      const auto note = notes.find(id);
      out << "  failed: " << (note == notes.end() ? "" : note->second) << "\n";
      continue;
    }
    const auto& r = *report;
    for (const std::optional<double>& v :
         {std::optional(r.coverage), std::optional(r.precision), std::optional(r.recall),
          std::optional(r.ndcg), std::optional(r.novelty), r.diversity,
          std::optional(r.serendipity)}) {
      out << "  " << std::right << std::setw(11) << (v ? fixed(*v) : "n/a");
    }
    out << "\n";
  }
}

// ---------------------------------------------------------------------------
// serve

int cmd_serve(const std::string& config_path) {
  SignalWaiter signals;
  using namespace reclab::orchestrator;
  EvaluatorConfig config;
  reclab::datasets::DatasetRegistry datasets;
  RecommenderRegistry recommenders;
  try {
    config = EvaluatorConfig::load(config_path);
    datasets = reclab::datasets::DatasetRegistry::load(config.datasets_file);
    recommenders = RecommenderRegistry::load(config.recommenders_file);
  } catch (const reclab::ValidationError& e) {
    throw Exit{kUsage, e.what()};
  }

  std::unique_ptr<ExperimentStore> store;
  try {
    store = std::make_unique<ExperimentStore>(config.data_dir);
  } catch (const std::exception& e) {
    throw Exit{kEnvironment, "cannot use data directory " + config.data_dir.string() + ": " +
                                 e.what()};
  }

  OrchestratorOptions options;
  options.client = config.client;
  options.recommender_parallelism = config.recommender_parallelism;
  Orchestrator orchestrator(*store, datasets, recommenders, options);
  EvaluatorService service(orchestrator);
  const auto port = service.bind(config.host, config.port);
  if (!port) {
    throw Exit{kEnvironment, "cannot bind " + config.host + ":" + std::to_string(config.port) +
                                 " (address in use?)"};
  }
  config.port = *port;
  orchestrator.set_public_url(config.effective_public_url());
  orchestrator.start();
  signals.start([&] { service.stop(); });
  spdlog::info("evaluator listening on {}:{} (public URL {}), {} datasets, {} recommenders",
               config.host, *port, config.effective_public_url(), datasets.entries().size(),
               recommenders.entries().size());
  service.run();
  orchestrator.stop();
  return kOk;
}

// ---------------------------------------------------------------------------
// recommender

int cmd_recommender(const std::string& kind_name, const std::string& host, int port,
                    std::uint64_t seed) {
  SignalWaiter signals;
  reclab::recommenders::ServiceOptions options;
  try {
    options.kind = reclab::recommenders::parse_kind(kind_name);
  } catch (const reclab::ValidationError& e) {
    throw Exit{kUsage, e.what()};
  }
  options.seed = seed;
  reclab::recommenders::RecommenderService service(options);
  const auto bound = service.bind(host, port);
  if (!bound) {
    throw Exit{kEnvironment, "cannot bind " + host + ":" + std::to_string(port) +
                                 " (address in use?)"};
  }
  signals.start([&] { service.stop(); });
  spdlog::info("{} recommender listening on {}:{}", reclab::recommenders::to_string(options.kind),
               host, *bound);
  // Lets scripts that asked for port 0 discover the port.
  std::cout << *bound << std::endl;
  service.run();
  return kOk;
}

// ---------------------------------------------------------------------------
// run

struct RunOptions {
  std::string api = default_api();
  std::string dataset;
  std::string split = "random";
  double test = 0.2;
  int k = 10;
  double threshold = 3;
  std::vector<std::string> recommenders;
  std::uint64_t seed = 0;
  std::string output;
  int poll_ms = 2000;
  double timeout_s = 0;  // 0 waits forever
};

int cmd_run(const RunOptions& options, Format format) {
  reclab::ExperimentConfig config;
  config.dataset_id = options.dataset;
  try {
    config.split_method = reclab::parse_split_method(options.split);
  } catch (const reclab::ValidationError& e) {
    throw Exit{kUsage, e.what()};
  }
  config.test_fraction = options.test;
  config.k = options.k;
  config.rating_threshold = options.threshold;
  config.recommender_ids = options.recommenders;
  config.seed = options.seed;
  if (const auto violations = reclab::validate_config(config); !violations.empty()) {
    std::string message = "invalid experiment:";
    for (const auto& v : violations) message += "\n  " + v;
    throw Exit{kUsage, message};
  }

  Api api(options.api);
  auto created = api.post("/experiments", json(config).dump());
  if (created->status == 400) {
    const auto body = json::parse(created->body, nullptr, false);
    std::string message = "experiment rejected:";
    if (body.is_object() && body.contains("violations")) {
      for (const auto& v : body["violations"]) message += "\n  " + v.get<std::string>();
    }
    throw Exit{kUsage, message};
  }
  if (created->status != 201) throw Exit{kRuntime, "submission failed: " + error_of(*created)};
  const auto id = json::parse(created->body).at("id").get<std::string>();
  if (format == Format::kJsonLines) {
    std::cout << json{{"event", "submitted"}, {"id", id}}.dump() << std::endl;
  } else {
    std::cerr << "experiment " << id << " submitted" << std::endl;
  }

  using namespace reclab::orchestrator;
  const auto started = std::chrono::steady_clock::now();
  std::string last_progress;
  ExperimentRecord record;
  while (true) {
    auto res = api.get("/experiments/" + id);
    if (res->status != 200) throw Exit{kRuntime, "cannot read experiment: " + error_of(*res)};
    record = record_from_json(json::parse(res->body));
    std::string progress = std::string(to_string(record.status));
    for (const auto& [rid, result] : record.per_recommender) {
      progress += " " + rid + "=" + std::string(to_string(result.status));
    }
    if (progress != last_progress) {
      last_progress = progress;
      if (format == Format::kJsonLines) {
        json states = json::object();
        for (const auto& [rid, result] : record.per_recommender) {
          states[rid] = std::string(to_string(result.status));
        }
        std::cout << json{{"event", "progress"},
                          {"id", id},
                          {"status", std::string(to_string(record.status))},
                          {"recommenders", states}}
                         .dump()
                  << std::endl;
      } else {
        std::cerr << progress << std::endl;
      }
    }
    if (is_terminal(record.status)) break;
    if (options.timeout_s > 0 &&
        std::chrono::steady_clock::now() - started >
            std::chrono::duration<double>(options.timeout_s)) {
      throw Exit{kRuntime, "gave up waiting for experiment " + id};
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(options.poll_ms));
  }

  if (!options.output.empty()) {
    std::ofstream out(options.output);
    out << to_json(record).dump(2) << "\n";
    if (!out) throw Exit{kEnvironment, "cannot write " + options.output};
  }

  if (format == Format::kJsonLines) {
    std::cout << json{{"event", "finished"}, {"record", to_json(record)}}.dump() << std::endl;
  } else {
    std::map<std::string, std::optional<reclab::MetricsReport>> rows;
    std::map<std::string, std::string> notes;
    for (const auto& [rid, result] : record.per_recommender) {
      rows[rid] = result.metrics;
      if (result.detail) notes[rid] = *result.detail;
    }
    if (record.status == ExperimentStatus::kDone) print_table(std::cout, rows, notes);
  }

  if (record.status == ExperimentStatus::kFailed) {
    throw Exit{kRuntime, "experiment " + id + " failed: " + record.detail.value_or("")};
  }
  std::string failures;
  for (const auto& [rid, result] : record.per_recommender) {
    if (result.status != RecommenderStatus::kDone) {
      failures += "\n  " + rid + ": " + result.detail.value_or("not completed");
    }
  }
  if (!failures.empty()) throw Exit{kRuntime, "some recommenders failed:" + failures};
  return kOk;
}

// ---------------------------------------------------------------------------
// eval-offline

reclab::RatingSet load_generic(const std::string& path, char delimiter) {
  if (!fs::exists(path)) throw Exit{kUsage, "no such file: " + path};
  auto descriptor = reclab::datasets::make_descriptor(
      path, reclab::datasets::DatasetFormat::kGenericCsv, path);
  descriptor.csv.delimiter = delimiter;
  try {
    auto loaded = reclab::datasets::load_dataset(descriptor);
    if (loaded.malformed_lines > 0) {
      spdlog::warn("{}: skipped {} malformed lines", path, loaded.malformed_lines);
    }
    return std::move(loaded.ratings);
  } catch (const reclab::datasets::DatasetError& e) {
    throw Exit{kUsage, e.what()};
  }
}

// `user,item,rank` lines, optional header; lists are ordered by rank.
reclab::RecommendationMap load_recommendations(const std::string& path, char delimiter) {
  std::ifstream in(path);
  if (!in) throw Exit{kUsage, "no such file: " + path};
  std::map<std::string, std::vector<std::pair<double, std::string>>> ranked;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<std::string> fields;
    std::stringstream stream(line);
    for (std::string field; std::getline(stream, field, delimiter);) fields.push_back(field);
    double rank = 0;
    try {
      if (fields.size() != 3) throw std::invalid_argument("columns");
      std::size_t used = 0;
      rank = std::stod(fields[2], &used);
      if (used != fields[2].size()) throw std::invalid_argument("rank");
    } catch (const std::exception&) {
      if (number == 1) continue;  // header
      throw Exit{kUsage, path + ":" + std::to_string(number) + ": expected user,item,rank"};
    }
    ranked[fields[0]].emplace_back(rank, fields[1]);
  }
  reclab::RecommendationMap out;
  for (auto& [user, items] : ranked) {
    std::stable_sort(items.begin(), items.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    auto& list = out[user];
    for (auto& [rank, item] : items) list.push_back(std::move(item));
  }
  return out;
}

int cmd_eval_offline(const std::string& train_path, const std::string& test_path,
                     const std::string& recs_path, int k, double threshold,
                     const std::string& delimiter_name, Format format) {
  if (k < 1) throw Exit{kUsage, "--k must be at least 1"};
  const char delimiter = delimiter_name == "tab" || delimiter_name == "\\t" ? '\t'
                                                                           : delimiter_name.at(0);
  const auto train = load_generic(train_path, delimiter);
  const auto test = load_generic(test_path, delimiter);
  auto recs = load_recommendations(recs_path, delimiter);
  if (train.empty()) throw Exit{kUsage, "the training set is empty"};

  // Same sanitation as for remote recommenders.
  reclab::protocol::RecommendRequest request;
  request.k = k;
  std::vector<reclab::RecommendationList> lists;
  for (auto& [user, items] : recs) {
    request.users.push_back(user);
    lists.push_back({user, std::move(items)});
  }
  reclab::protocol::ViolationCounts violations;
  reclab::RecommendationMap clean;
  if (!request.users.empty()) {
    auto sanitized = reclab::protocol::sanitize(
        request, lists, reclab::protocol::SeenIndex::build(train));
    clean = std::move(sanitized.lists);
    violations = sanitized.violations;
  }
  if (violations.total() > 0) {
    spdlog::warn("sanitized recommendations: dropped {} train-rated, {} duplicate and {} "
                 "overlong items",
                 violations.train_rated, violations.duplicates, violations.overlong);
  }

  const auto ctx = reclab::metrics::build_context(train, test, threshold, k);
  const auto report = reclab::metrics::evaluate_all(ctx, clean);
  if (format == Format::kJsonLines) {
    std::cout << json{{"metrics", report}, {"violations", violations}}.dump() << std::endl;
  } else {
    print_table(std::cout, {{fs::path(recs_path).filename().string(), report}});
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// export / import

int cmd_export(const std::string& api_base, const std::string& id, bool all,
               const std::string& dest) {
  if (all == !id.empty()) throw Exit{kUsage, "give exactly one of --id or --all"};
  Api api(api_base);
  std::vector<std::string> ids;
  if (all) {
    for (std::size_t page = 1;; ++page) {
      auto res = api.get("/experiments?page_size=200&page=" + std::to_string(page));
      if (res->status != 200) throw Exit{kRuntime, "listing failed: " + error_of(*res)};
      const auto body = json::parse(res->body);
      for (const auto& summary : body.at("experiments")) ids.push_back(summary.at("id"));
      if (body.at("experiments").empty() || ids.size() >= body.at("total").get<std::size_t>()) {
        break;
      }
    }
  } else {
    ids.push_back(id);
  }

  std::error_code error;
  fs::create_directories(dest, error);
  if (error) throw Exit{kEnvironment, "cannot create " + dest + ": " + error.message()};
  json index = json::array();
  for (const auto& experiment : ids) {
    auto res = api.get("/experiments/" + experiment);
    if (res->status == 404) throw Exit{kRuntime, "unknown experiment '" + experiment + "'"};
    if (res->status != 200) {
      throw Exit{kRuntime, "cannot read " + experiment + ": " + error_of(*res)};
    }
    const auto record = reclab::orchestrator::record_from_json(json::parse(res->body));
    std::ofstream out(fs::path(dest) / (experiment + ".json"));
    out << reclab::orchestrator::to_json(record).dump(2) << "\n";
    if (!out) throw Exit{kEnvironment, "cannot write into " + dest};
    index.push_back(reclab::orchestrator::to_json(reclab::orchestrator::summarize(record)));
  }
  std::ofstream(fs::path(dest) / "index.json") << index.dump(2) << "\n";
  std::cerr << "exported " << ids.size() << " experiment(s) to " << dest << std::endl;
  return kOk;
}

int cmd_import(const std::string& api_base, const std::string& src) {
  std::vector<fs::path> files;
  if (fs::is_directory(src)) {
    for (const auto& entry : fs::directory_iterator(src)) {
      if (entry.path().extension() == ".json" && entry.path().filename() != "index.json") {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
  } else if (fs::exists(src)) {
    files.push_back(src);
  } else {
    throw Exit{kUsage, "no such file or directory: " + src};
  }

  Api api(api_base);
  int failures = 0;
  for (const auto& file : files) {
    std::ifstream in(file);
    std::stringstream body;
    body << in.rdbuf();
    auto res = api.post("/experiments/import", body.str());
    if (res->status == 201) {
      std::cerr << "imported " << file.filename().string() << std::endl;
    } else {
      ++failures;
      std::cerr << "rejected " << file.filename().string() << ": " << error_of(*res) << std::endl;
    }
  }
  if (failures > 0) throw Exit{kRuntime, std::to_string(failures) + " record(s) not imported"};
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Offline evaluation of top-k recommenders"};
  app.require_subcommand(1);
  std::string format_name = "table";
  auto add_format = [&](CLI::App* command) {
    command->add_option("--format", format_name, "Output format")
        ->check(CLI::IsMember({"table", "json-lines"}));
  };
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off");

  std::string config_path;
  auto* serve = app.add_subcommand("serve", "Run the evaluator service");
  serve->add_option("--config", config_path, "INI configuration file")->required();

  std::string kind;
  std::string host = "127.0.0.1";
  int port = 0;
  std::uint64_t seed = 0;
  auto* recommender = app.add_subcommand("recommender", "Run a reference recommender service");
  recommender->add_option("--kind", kind, "random, most-popular, item-knn or user-knn")
      ->required();
  recommender->add_option("--port", port, "Port (0 picks a free one)")->required();
  recommender->add_option("--host", host, "Bind address");
  recommender->add_option("--seed", seed, "Seed of the random recommender");

  RunOptions run_options;
  std::string recs_list;
  auto* run = app.add_subcommand("run", "Submit an experiment and wait for its results");
  run->add_option("--api", run_options.api, "Evaluator base URL (default $RECLAB_API)");
  run->add_option("--dataset", run_options.dataset, "Dataset id")->required();
  run->add_option("--split", run_options.split, "random or timestamp");
  run->add_option("--test", run_options.test, "Test fraction");
  run->add_option("--k", run_options.k, "List length");
  run->add_option("--threshold", run_options.threshold, "Rating threshold");
  run->add_option("--rec", recs_list, "Comma-separated recommender ids")->required();
  run->add_option("--seed", run_options.seed, "Random split seed");
  run->add_option("--output", run_options.output, "Write the record JSON here");
  run->add_option("--poll-ms", run_options.poll_ms, "Progress poll interval");
  run->add_option("--timeout", run_options.timeout_s, "Give up after this many seconds");
  add_format(run);

  std::string train_path, test_path, recs_path, delimiter = ",";
  int k = 10;
  double threshold = 3;
  auto* offline = app.add_subcommand("eval-offline", "Score precomputed recommendation lists");
  offline->add_option("--train", train_path, "Training ratings (user,item,value[,timestamp])")
      ->required();
  offline->add_option("--test", test_path, "Test ratings")->required();
  offline->add_option("--recs", recs_path, "Recommendations (user,item,rank)")->required();
  offline->add_option("--k", k, "List length");
  offline->add_option("--threshold", threshold, "Rating threshold");
  offline->add_option("--delimiter", delimiter, "Field delimiter (default ',', or 'tab')");
  add_format(offline);

  std::string api_base = default_api();
  std::string export_id, dest;
  bool export_all = false;
  auto* exporter = app.add_subcommand("export", "Copy experiment records to a directory");
  exporter->add_option("--api", api_base, "Evaluator base URL (default $RECLAB_API)");
  exporter->add_option("--id", export_id, "Experiment id");
  exporter->add_flag("--all", export_all, "Export every experiment");
  exporter->add_option("--dest", dest, "Destination directory")->required();

  std::string src;
  auto* importer = app.add_subcommand("import", "Load exported records into an evaluator");
  importer->add_option("--api", api_base, "Evaluator base URL (default $RECLAB_API)");
  importer->add_option("--src", src, "Record file or export directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  spdlog::set_level(spdlog::level::from_str(log_level));
  spdlog::default_logger()->sinks().clear();
  spdlog::default_logger()->sinks().push_back(
      std::make_shared<spdlog::sinks::stderr_color_sink_mt>());
  const auto format = format_name == "json-lines" ? Format::kJsonLines : Format::kTable;

  try {
    if (*serve) return cmd_serve(config_path);
    if (*recommender) return cmd_recommender(kind, host, port, seed);
    if (*run) {
      std::stringstream stream(recs_list);
      for (std::string id; std::getline(stream, id, ',');) {
        if (!id.empty()) run_options.recommenders.push_back(id);
      }
      return cmd_run(run_options, format);
    }
    if (*offline) {
      return cmd_eval_offline(train_path, test_path, recs_path, k, threshold, delimiter, format);
    }
    if (*exporter) return cmd_export(api_base, export_id, export_all, dest);
    if (*importer) return cmd_import(api_base, src);
  } catch (const Exit& e) {
    std::cerr << "reclab: " << e.message << std::endl;
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "reclab: " << e.what() << std::endl;
    return kRuntime;
  }
  return kUsage;
}
