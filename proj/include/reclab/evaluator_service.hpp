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
#include <optional>
#include <string>

#include "reclab/orchestrator.hpp"

namespace reclab::orchestrator {

// Public HTTP API of the evaluator. All bodies are JSON unless noted.
//
//   POST /experiments                 ExperimentConfig -> 201 {"id"}
//                                     400 {"error", "violations": [...]}
//   GET  /experiments                 ?status=&dataset=&page=&page_size=
//                                     -> 200 {"total", "page", "page_size",
//                                             "experiments": [summary...]}
//   GET  /experiments/{id}            -> 200 record, 404, 500 on a digest
//                                     mismatch
//   GET  /experiments/{id}/training-set?recommender={rid}
//                                     -> 200 text/csv, chunked; 404 unless the
//                                     split is materialized
//   POST /experiments/import          terminal record -> 201 {"id"};
//                                     409 if the id exists, 422 on a digest
//                                     mismatch
//   GET  /recommenders                -> 200 [{"id", "uri", "reachable"}]
//   GET  /datasets                    -> 200 [{"id", "format", "has_timestamps"}]
//
// Errors carry {"error": message}.
class EvaluatorService {
 public:
  explicit EvaluatorService(Orchestrator& orchestrator);
  ~EvaluatorService();
  EvaluatorService(const EvaluatorService&) = delete;
  EvaluatorService& operator=(const EvaluatorService&) = delete;

  // Port 0 picks a free port. Returns the bound port or nullopt.
  std::optional<int> bind(const std::string& host, int port);
  void start();  // background thread
  void run();    // calling thread, until stop()
  void stop();

 private:
  struct State;
  std::unique_ptr<State> state_;
};

}  // namespace reclab::orchestrator
