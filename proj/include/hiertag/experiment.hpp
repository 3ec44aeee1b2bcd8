/* Copyright 2026 The HierTag Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef HIERTAG_EXPERIMENT_HPP_
#define HIERTAG_EXPERIMENT_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hiertag/eval.hpp"
#include "hiertag/models.hpp"

namespace hiertag {

enum class ExperimentKind { kExtension, kIntegration };

struct DatasetSpec {
  std::string name;
  std::string tagset;
  std::filesystem::path train;
  std::optional<std::filesystem::path> dev;
  std::optional<std::filesystem::path> test;
};

struct TripletSpec {
  TagId tag;
  std::string base;
  std::string extending;
};

// Name used for the fully supervised reference model in `models`.
inline constexpr std::string_view kSkylineModel = "skyline";

// Grammar (one entry per line, `#` starts a comment):
//
//   kind = extension | integration
//   hierarchy = <path>                  optional; flat tagsets otherwise
//   models = hier, indep, mtl, concat, skyline
//   seeds = 1, 2, 3
//   consolidation = random | best-score | max-marginal
//   matching = token | span
//   epochs, patience, lr, l2, batch_size, hidden_dim, window = <number>
//   train = <dataset>, ...              integration only
//   test = <dataset>, ...               integration only
//
//   [dataset]
//   name = <id>
//   tagset = <tagset name>              defaults to the dataset name
//   train = <path>
//   dev = <path>                        optional
//   test = <path>
//
//   [triplet]                           extension only
//   tag = <tag>
//   base = <dataset>
//   extending = <dataset>
//
// Relative paths resolve against `base_dir`.
struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::kExtension;
  std::optional<std::filesystem::path> hierarchy;
  std::vector<std::string> models;
  std::vector<std::uint64_t> seeds{1};
  ConsolidationMethod consolidation = ConsolidationMethod::kRandom;
  eval::Matching matching = eval::Matching::kToken;
  TrainConfig config;
  std::vector<DatasetSpec> datasets;
  std::vector<TripletSpec> triplets;
  std::vector<std::string> train;
  std::vector<std::string> test;
};

ExperimentSpec parse_experiment_spec(std::string_view text,
                                     const std::filesystem::path& base_dir);
ExperimentSpec load_experiment_spec(const std::filesystem::path& path);

// Structural checks plus existence of every referenced file. Throws
// Error(kValidation).
void validate_experiment_spec(const ExperimentSpec& spec);

struct ExperimentOptions {
  // 0 picks HIERTAG_THREADS or the hardware concurrency.
  std::size_t threads = 0;
  std::function<void(const std::string&)> log;
};

struct ExperimentResult {
  std::vector<eval::ResultRow> rows;
  std::string csv;
  std::string markdown;
  bool any_failed = false;
};

// Loads and checks all inputs before training. Failed cells are recorded
// and the remaining cells still run.
ExperimentResult run_experiment(const ExperimentSpec& spec,
                                const ExperimentOptions& options = {});

// HIERTAG_THREADS when set to a positive integer, else the hardware
// concurrency (at least 1).
std::size_t default_thread_count();

}  // namespace hiertag

#endif  // HIERTAG_EXPERIMENT_HPP_
