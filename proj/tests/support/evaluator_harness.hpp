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

#include <memory>
#include <string>

#include "reclab/evaluator_service.hpp"
#include "reclab/orchestrator.hpp"
#include "support/mock_recommender.hpp"
#include "support/temp_dir.hpp"

namespace reclab::testing {

// ML-100K formatted ratings: `users` users with `per_user` ratings each over a
// catalog of 3 * per_user items, increasing timestamps.
inline std::string small_movielens(int users = 12, int per_user = 8) {
  std::string text;
  int t = 1000;
  for (int u = 1; u <= users; ++u) {
    for (int n = 0; n < per_user; ++n) {
      const int item = (u * 5 + n * 3) % (3 * per_user) + 1;
      const int value = (u + item) % 5 + 1;
      text += std::to_string(u) + "\t" + std::to_string(item) + "\t" +
              std::to_string(value) + "\t" + std::to_string(t++) + "\n";
    }
  }
  return text;
}

// Store + orchestrator + HTTP API on a free port, all in one temp directory.
class EvaluatorHarness {
 public:
  EvaluatorHarness(orchestrator::RecommenderRegistry recommenders,
                   protocol::ClientOptions client = fast_client_options(),
                   std::string dataset = small_movielens(), bool start = false)
      : recommenders_(std::move(recommenders)), client_(client) {
    dir_.write("ml/u.data", dataset);
    dir_.write("lastfm/user_artists.dat", "userID\tartistID\tweight\n1\t2\t30\n2\t2\t5\n");
    datasets_.add(datasets::make_descriptor("ml", datasets::DatasetFormat::kMovieLens100K,
                                            dir_.path() / "ml/u.data"));
    datasets_.add(datasets::make_descriptor("lastfm", datasets::DatasetFormat::kHetRecLastFm,
                                            dir_.path() / "lastfm/user_artists.dat"));
    open(start);
  }
  ~EvaluatorHarness() { close(); }

  // Simulates a process restart on the same data directory.
  void restart(bool start = false) {
    close();
    open(start);
  }

  void close() {
    if (service_) service_->stop();
    if (orchestrator_) orchestrator_->stop();
    service_.reset();
    orchestrator_.reset();
    store_.reset();
  }

  orchestrator::Orchestrator& orchestrator() { return *orchestrator_; }
  orchestrator::ExperimentStore& store() { return *store_; }
  std::string api() const { return "http://127.0.0.1:" + std::to_string(port_); }
  const TempDir& dir() const { return dir_; }

  ExperimentConfig config(std::vector<std::string> recommenders) const {
    ExperimentConfig c;
    c.dataset_id = "ml";
    c.recommender_ids = std::move(recommenders);
    c.seed = 7;
    c.k = 5;
    return c;
  }

 private:
  void open(bool start) {
    store_ = std::make_unique<orchestrator::ExperimentStore>(dir_.path() / "store");
    orchestrator::OrchestratorOptions options;
    options.client = client_;
    orchestrator_ = std::make_unique<orchestrator::Orchestrator>(*store_, datasets_,
                                                                 recommenders_, options);
    service_ = std::make_unique<orchestrator::EvaluatorService>(*orchestrator_);
    port_ = *service_->bind("127.0.0.1", 0);
    orchestrator_->set_public_url(api());
    service_->start();
    if (start) orchestrator_->start();
  }

  TempDir dir_;
  datasets::DatasetRegistry datasets_;
  orchestrator::RecommenderRegistry recommenders_;
  protocol::ClientOptions client_;
  std::unique_ptr<orchestrator::ExperimentStore> store_;
  std::unique_ptr<orchestrator::Orchestrator> orchestrator_;
  std::unique_ptr<orchestrator::EvaluatorService> service_;
  int port_ = 0;
};

}  // namespace reclab::testing
