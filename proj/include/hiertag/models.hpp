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

#ifndef HIERTAG_MODELS_HPP_
#define HIERTAG_MODELS_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hiertag/crf.hpp"
#include "hiertag/data.hpp"
#include "hiertag/features.hpp"
#include "hiertag/hierarchy.hpp"

namespace hiertag {

enum class ModelKind : std::uint8_t {
  kHier = 1,
  kConcat = 2,
  kIndep = 3,
  kMtl = 4,
};

std::string_view to_string(ModelKind kind);
// "hier" | "concat" | "indep" | "mtl"; throws Error(kInvalidArgument).
ModelKind parse_model_kind(std::string_view name);

enum class ConsolidationMethod { kRandom, kBestSequenceScore, kMaxMarginal };

std::string_view to_string(ConsolidationMethod method);
// "random" | "best-score" | "max-marginal".
ConsolidationMethod parse_consolidation(std::string_view name);

struct TrainConfig {
  std::uint64_t seed = 1;
  std::size_t max_epochs = 200;
  // Epochs without dev-F1 improvement (or, without dev data, without a
  // relative loss decrease of `tolerance`) before stopping.
  std::size_t patience = 10;
  double learning_rate = 0.1;
  double l2 = 1e-4;
  double clip_norm = 5.0;
  std::size_t batch_size = 8;
  std::size_t hidden_dim = 32;
  int window = 2;
  double init_scale = 0.1;
  double tolerance = 1e-4;
  bool shuffle = true;
};

// A training corpus bound to its tagset (corpus.tagset_name) with optional
// development data in the same tagset.
struct TrainingDataset {
  Corpus train;
  std::optional<Corpus> dev;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;
  std::optional<double> dev_f1;
};

// One CRF tagging layer: a tag domain plus transition, start and stop
// scores stored as [transitions (Y x Y) | start (Y) | stop (Y)].
struct CrfHead {
  std::string name;
  std::vector<TagId> domain;
  std::vector<double> params;

  CrfHead() = default;
  CrfHead(std::string name, std::vector<TagId> domain);

  std::size_t size() const { return domain.size(); }
  std::size_t index_of(const TagId& tag) const;
  std::span<const double> transitions() const {
    return std::span(params).first(size() * size());
  }
  std::span<const double> start() const {
    return std::span(params).subspan(size() * size(), size());
  }
  std::span<const double> stop() const {
    return std::span(params).subspan(size() * size() + size(), size());
  }
};

// Name of the single head of a Concat model.
inline constexpr std::string_view kUnionHead = "<union>";

class TrainedModel {
 public:
  TrainedModel() = default;
  TrainedModel(const TrainedModel& other);
  TrainedModel& operator=(const TrainedModel& other);
  TrainedModel(TrainedModel&&) noexcept = default;
  TrainedModel& operator=(TrainedModel&&) noexcept = default;

  ModelKind kind = ModelKind::kHier;
  ExtendedHierarchy hierarchy;
  FeatureVocabulary vocab;
  std::unique_ptr<EmissionModel> emissions;
  std::vector<CrfHead> heads;
  TrainConfig config;
  std::size_t epochs_run = 0;
  // Mean training loss with the final parameters.
  double final_loss = 0.0;
  // Not serialized.
  std::vector<EpochRecord> log;

  FeatureSequence featurize(std::span<const std::string> tokens) const;
  crf::PotentialTable potentials(const FeatureSequence& features,
                                 std::size_t head) const;
  std::size_t head_index(const std::string& name) const;
  // The head's Other label: T-Other for per-tagset heads, "O" for Concat,
  // FG-Other for Hier.
  TagId head_other(std::size_t head) const;
  // Maps each tag of the head's domain into the target tagset.
  std::vector<TagId> head_mapping(std::size_t head,
                                  const std::string& target_tagset) const;
};

struct TrainingExample {
  FeatureSequence features;
  crf::LatticeMask mask;
  std::size_t head = 0;
  std::size_t dataset = 0;
};

struct DevSet {
  std::size_t head = 0;
  Corpus gold;
  std::vector<FeatureSequence> features;
};

// A model with initialized parameters plus everything needed to fit it.
struct TrainingSetup {
  TrainedModel model;
  std::vector<TrainingExample> examples;
  std::vector<DevSet> dev;
  std::size_t num_datasets = 1;
};

// Checks datasets against the hierarchy's tagsets.
void validate_datasets(std::span<const TrainingDataset> datasets,
                       const ExtendedHierarchy& eh);
// Flat hierarchy with one tagset per dataset, induced from its corpora.
ExtendedHierarchy flat_hierarchy(std::span<const TrainingDataset> datasets);

TrainingSetup setup_hier(std::span<const TrainingDataset> datasets,
                         const ExtendedHierarchy& eh, const TrainConfig& cfg);
TrainingSetup setup_concat(std::span<const TrainingDataset> datasets,
                           const ExtendedHierarchy& eh, const TrainConfig& cfg);
TrainingSetup setup_single(const TrainingDataset& dataset,
                           const ExtendedHierarchy& eh, const TrainConfig& cfg);
TrainingSetup setup_mtl(std::span<const TrainingDataset> datasets,
                        const ExtendedHierarchy& eh, const TrainConfig& cfg);

// Mini-batch AdaGrad on the mean constrained-marginal loss with L2 and
// global-norm clipping.
class Trainer {
 public:
  Trainer(TrainedModel& model, std::span<const TrainingExample> examples,
          const TrainConfig& cfg);

  // One update from the listed examples; returns their mean loss before the
  // update. L2 touches only parameters read by the batch's heads.
  double step(std::span<const std::size_t> batch);
  double mean_loss() const;

 private:
  struct Block {
    std::span<double> values;
    std::vector<double> grad;
    std::vector<double> accum;
  };

  TrainedModel& model_;
  std::span<const TrainingExample> examples_;
  TrainConfig cfg_;
  std::vector<Block> blocks_;  // 0: emissions, 1 + h: CRF head h
};

// Runs epochs until early stopping; fills model.log, epochs_run and
// final_loss. With dev data, restores the best-dev-F1 parameters.
TrainedModel fit(TrainingSetup setup);

TrainedModel train_hier(std::span<const TrainingDataset> datasets,
                        const ExtendedHierarchy& eh, const TrainConfig& cfg);
TrainedModel train_concat(std::span<const TrainingDataset> datasets,
                          const ExtendedHierarchy& eh, const TrainConfig& cfg);
std::vector<TrainedModel> train_indep(std::span<const TrainingDataset> datasets,
                                      const ExtendedHierarchy& eh,
                                      const TrainConfig& cfg);
TrainedModel train_mtl(std::span<const TrainingDataset> datasets,
                       const ExtendedHierarchy& eh, const TrainConfig& cfg);
// Dispatches on kind; Indep yields one model per dataset.
std::vector<TrainedModel> train_models(
    ModelKind kind, std::span<const TrainingDataset> datasets,
    const ExtendedHierarchy& eh, const TrainConfig& cfg);

struct HeadDecoding {
  std::vector<std::size_t> path;
  double log_prob = 0.0;
};

HeadDecoding decode_head(const TrainedModel& model, std::size_t head,
                         const FeatureSequence& features);

// Viterbi over the fine-grained tags mapped onto the test tagset.
std::vector<TagId> predict_hier(const TrainedModel& model,
                                std::span<const std::string> tokens,
                                const std::string& test_tagset);

// One decoding head of a non-Hier model.
struct Tagger {
  const TrainedModel* model = nullptr;
  std::size_t head = 0;
};

std::vector<Tagger> taggers_of(std::span<const TrainedModel> models);

struct CollisionRecord {
  std::size_t position = 0;
  std::vector<TagId> candidates;
  // Highest per-tagger marginal probability of each candidate.
  std::vector<double> probabilities;
};

struct Consolidated {
  // Test-tagset tags; the tagset's Other tag where nothing was predicted.
  std::vector<TagId> tags;
  std::size_t collisions = 0;
  std::vector<CollisionRecord> collision_positions;
  // Per tagger, its prediction mapped onto the test tagset.
  std::vector<std::vector<TagId>> mapped;
};

Consolidated predict_multi(std::span<const Tagger> taggers,
                           std::span<const std::string> tokens,
                           const std::string& test_tagset,
                           ConsolidationMethod method, std::uint64_t seed);

struct TaggingResult {
  // Gold column holds predictions; Other is empty.
  Corpus predictions;
  std::size_t collisions = 0;
  bool consolidated = false;
};

// A single Hier model decodes directly; anything else is consolidated.
// Per-document seeds derive from `seed`.
TaggingResult tag_corpus(std::span<const TrainedModel> models,
                         const Corpus& input, const std::string& test_tagset,
                         ConsolidationMethod method, std::uint64_t seed);

// Binary container of one or more models; see serialize.cpp for the layout.
void save_models(std::span<const TrainedModel> models,
                 const std::filesystem::path& path);
std::vector<TrainedModel> load_models(const std::filesystem::path& path);
std::string serialize_models(std::span<const TrainedModel> models);
std::vector<TrainedModel> deserialize_models(std::string_view bytes);
void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

std::string format_training_log(std::span<const TrainedModel> models);

}  // namespace hiertag

#endif  // HIERTAG_MODELS_HPP_
