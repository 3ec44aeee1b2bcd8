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

#include "hiertag/models.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <utility>

#include "hiertag/error.hpp"
#include "hiertag/eval.hpp"
#include "hiertag/random.hpp"

namespace hiertag {

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kHier:
      return "hier";
    case ModelKind::kConcat:
      return "concat";
    case ModelKind::kIndep:
      return "indep";
    case ModelKind::kMtl:
      return "mtl";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "hier") return ModelKind::kHier;
  if (name == "concat") return ModelKind::kConcat;
  if (name == "indep") return ModelKind::kIndep;
  if (name == "mtl") return ModelKind::kMtl;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown model kind '" + std::string(name) +
                  "' (expected hier, concat, indep or mtl)");
}

std::string_view to_string(ConsolidationMethod method) {
  switch (method) {
    case ConsolidationMethod::kRandom:
      return "random";
    case ConsolidationMethod::kBestSequenceScore:
      return "best-score";
    case ConsolidationMethod::kMaxMarginal:
      return "max-marginal";
  }
  return "unknown";
}

ConsolidationMethod parse_consolidation(std::string_view name) {
  if (name == "random") return ConsolidationMethod::kRandom;
  if (name == "best-score") return ConsolidationMethod::kBestSequenceScore;
  if (name == "max-marginal") return ConsolidationMethod::kMaxMarginal;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown consolidation method '" + std::string(name) +
                  "' (expected random, best-score or max-marginal)");
}

CrfHead::CrfHead(std::string name_in, std::vector<TagId> domain_in)
    : name(std::move(name_in)), domain(std::move(domain_in)) {
  params.assign(size() * size() + 2 * size(), 0.0);
}

std::size_t CrfHead::index_of(const TagId& tag) const {
  auto it = std::lower_bound(domain.begin(), domain.end(), tag);
  if (it != domain.end() && *it == tag) {
    return static_cast<std::size_t>(it - domain.begin());
  }
  // Domains are sorted on construction; fall back for hand-built heads.
  it = std::find(domain.begin(), domain.end(), tag);
  if (it == domain.end()) {
    throw Error(ErrorCode::kValidation,
                "tag '" + tag + "' is not in the domain of head '" + name + "'");
  }
  return static_cast<std::size_t>(it - domain.begin());
}

TrainedModel::TrainedModel(const TrainedModel& other)
    : kind(other.kind),
      hierarchy(other.hierarchy),
      vocab(other.vocab),
      emissions(other.emissions ? other.emissions->clone() : nullptr),
      heads(other.heads),
      config(other.config),
      epochs_run(other.epochs_run),
      final_loss(other.final_loss),
      log(other.log) {}

TrainedModel& TrainedModel::operator=(const TrainedModel& other) {
  if (this != &other) {
    TrainedModel copy(other);
    *this = std::move(copy);
  }
  return *this;
}

FeatureSequence TrainedModel::featurize(
    std::span<const std::string> tokens) const {
  const FeatureVocabulary& frozen = vocab;
  return hiertag::featurize(tokens, frozen, config.window);
}

crf::PotentialTable TrainedModel::potentials(const FeatureSequence& features,
                                             std::size_t head) const {
  if (head >= heads.size()) {
    throw Error(ErrorCode::kInvalidArgument, "head index out of range");
  }
  const CrfHead& h = heads[head];
  auto p = crf::PotentialTable::zeros(features.size(), h.size());
  const std::size_t emission_head = emissions->num_heads() == 1 ? 0 : head;
  emissions->score(features, emission_head, p.emissions);
  auto tr = h.transitions();
  auto st = h.start();
  auto sp = h.stop();
  p.transitions.assign(tr.begin(), tr.end());
  p.start.assign(st.begin(), st.end());
  p.stop.assign(sp.begin(), sp.end());
  return p;
}

std::size_t TrainedModel::head_index(const std::string& name) const {
  for (std::size_t h = 0; h < heads.size(); ++h) {
    if (heads[h].name == name) return h;
  }
  throw Error(ErrorCode::kInvalidArgument, "model has no head '" + name + "'");
}

TagId TrainedModel::head_other(std::size_t head) const {
  switch (kind) {
    case ModelKind::kHier:
      return TagId(kFineOther);
    case ModelKind::kConcat:
      return TagId(kOtherLabel);
    default:
      return other_name(heads.at(head).name);
  }
}

std::vector<TagId> TrainedModel::head_mapping(
    std::size_t head, const std::string& target_tagset) const {
  if (!hierarchy.has_tagset(target_tagset)) {
    throw Error(ErrorCode::kValidation,
                "tagset '" + target_tagset +
                    "' is not covered by the model's hierarchy");
  }
  const CrfHead& h = heads.at(head);
  const TagId own_other = head_other(head);
  const TagId target_other = hierarchy.other_tag(target_tagset);
  std::vector<TagId> out;
  out.reserve(h.size());
  for (const auto& tag : h.domain) {
    if (kind == ModelKind::kHier) {
      out.push_back(hierarchy.map_fine_to_tagset(tag, target_tagset));
    } else if (tag == own_other) {
      out.push_back(target_other);
    } else {
      out.push_back(hierarchy.map_tag(tag, target_tagset));
    }
  }
  return out;
}

namespace {

std::vector<TagId> with_other(const LabeledSequence& seq, const TagId& other) {
  std::vector<TagId> out = seq.golds();
  for (auto& t : out) {
    if (t.empty()) t = other;
  }
  return out;
}

// Original tagset members, without the synthesized Other tag.
TagSet declared_members(const ExtendedHierarchy& eh, const std::string& name) {
  const auto members = eh.tagset_members(name);
  TagSet out(members.begin(), members.end());
  out.erase(eh.other_tag(name));
  return out;
}

FeatureVocabulary build_vocabulary(std::span<const TrainingDataset> datasets,
                                   int window) {
  FeatureVocabulary vocab;
  for (const auto& ds : datasets) {
    for (const auto& seq : ds.train.sequences) {
      const auto texts = seq.texts();
      for (std::size_t i = 0; i < texts.size(); ++i) {
        for (const auto& f : feature_strings(texts, i, window)) {
          vocab.intern(f);
        }
      }
    }
  }
  vocab.freeze();
  return vocab;
}

std::vector<FeatureSequence> featurize_corpus(const TrainedModel& model,
                                              const Corpus& corpus) {
  std::vector<FeatureSequence> out;
  out.reserve(corpus.sequences.size());
  for (const auto& seq : corpus.sequences) {
    out.push_back(model.featurize(seq.texts()));
  }
  return out;
}

void add_dev(TrainingSetup& setup, const TrainingDataset& ds,
             std::size_t head) {
  if (!ds.dev) return;
  DevSet dev;
  dev.head = head;
  dev.gold = *ds.dev;
  dev.features = featurize_corpus(setup.model, dev.gold);
  setup.dev.push_back(std::move(dev));
}

void add_singleton_examples(TrainingSetup& setup, const Corpus& corpus,
                            std::size_t head, std::size_t dataset,
                            const TagId& other) {
  const CrfHead& h = setup.model.heads[head];
  for (const auto& seq : corpus.sequences) {
    const auto gold = with_other(seq, other);
    std::vector<std::size_t> path;
    path.reserve(gold.size());
    for (const auto& t : gold) path.push_back(h.index_of(t));
    TrainingExample ex;
    ex.features = setup.model.featurize(seq.texts());
    ex.mask = crf::LatticeMask::singleton(h.size(), path);
    ex.head = head;
    ex.dataset = dataset;
    setup.examples.push_back(std::move(ex));
  }
}

TrainedModel base_model(ModelKind kind, std::span<const TrainingDataset> ds,
                        const ExtendedHierarchy& eh, const TrainConfig& cfg) {
  TrainedModel m;
  m.kind = kind;
  m.hierarchy = eh;
  m.config = cfg;
  m.vocab = build_vocabulary(ds, cfg.window);
  return m;
}

void check_config(const TrainConfig& cfg) {
  if (cfg.batch_size == 0) {
    throw Error(ErrorCode::kInvalidArgument, "batch size must be positive");
  }
  if (cfg.window < 0) {
    throw Error(ErrorCode::kInvalidArgument, "window must be non-negative");
  }
  if (!(cfg.learning_rate > 0.0) || !(cfg.l2 >= 0.0) ||
      !(cfg.clip_norm > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "learning rate and clip norm must be positive, l2 "
                "non-negative");
  }
}

}  // namespace

void validate_datasets(std::span<const TrainingDataset> datasets,
                       const ExtendedHierarchy& eh) {
  if (datasets.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no training datasets");
  }
  for (const auto& ds : datasets) {
    const std::string& name = ds.train.tagset_name;
    if (ds.train.sequences.empty() || ds.train.token_count() == 0) {
      throw Error(ErrorCode::kValidation,
                  "training dataset for tagset '" + name + "' is empty");
    }
    if (!eh.has_tagset(name) || name == kFineTagset) {
      throw Error(ErrorCode::kValidation,
                  "tagset '" + name + "' is not declared in the hierarchy");
    }
    const auto members = eh.tagset_members(name);
    const TagSet allowed(members.begin(), members.end());
    check_corpus_tags(ds.train, allowed);
    if (ds.dev) {
      if (ds.dev->tagset_name != name) {
        throw Error(ErrorCode::kValidation,
                    "dev corpus tagset '" + ds.dev->tagset_name +
                        "' differs from training tagset '" + name + "'");
      }
      check_corpus_tags(*ds.dev, allowed);
    }
  }
}

ExtendedHierarchy flat_hierarchy(std::span<const TrainingDataset> datasets) {
  TagHierarchy h;
  for (const auto& ds : datasets) {
    TagSet tags = induce_tagset(ds.train);
    if (ds.dev) {
      const TagSet more = induce_tagset(*ds.dev);
      tags.insert(more.begin(), more.end());
    }
    const std::string& name = ds.train.tagset_name;
    if (!h.has_tagset(name)) h.add_tagset(name, {});
    for (const auto& t : tags) h.add_to_tagset(name, t);
  }
  return ExtendedHierarchy::extend(h);
}

TrainingSetup setup_hier(std::span<const TrainingDataset> datasets,
                         const ExtendedHierarchy& eh, const TrainConfig& cfg) {
  check_config(cfg);
  validate_datasets(datasets, eh);
  TrainingSetup s;
  s.model = base_model(ModelKind::kHier, datasets, eh, cfg);
  s.model.heads.emplace_back(std::string(kFineTagset), eh.fgts());
  const CrfHead& head = s.model.heads[0];
  s.model.emissions = std::make_unique<LinearEmissionModel>(
      s.model.vocab.size(), head.size());
  s.num_datasets = datasets.size();
  for (std::size_t d = 0; d < datasets.size(); ++d) {
    const Corpus& c = datasets[d].train;
    const TagId other = eh.other_tag(c.tagset_name);
    for (const auto& seq : c.sequences) {
      const auto sets = eh.agree_sets(with_other(seq, other), c.tagset_name);
      std::vector<std::vector<std::size_t>> allowed(sets.size());
      for (std::size_t i = 0; i < sets.size(); ++i) {
        for (const auto& f : sets[i]) allowed[i].push_back(head.index_of(f));
        std::sort(allowed[i].begin(), allowed[i].end());
      }
      TrainingExample ex;
      ex.features = s.model.featurize(seq.texts());
      ex.mask = crf::LatticeMask::from_sets(head.size(), allowed);
      ex.head = 0;
      ex.dataset = d;
      s.examples.push_back(std::move(ex));
    }
    add_dev(s, datasets[d], 0);
  }
  return s;
}

TrainingSetup setup_concat(std::span<const TrainingDataset> datasets,
                           const ExtendedHierarchy& eh,
                           const TrainConfig& cfg) {
  check_config(cfg);
  validate_datasets(datasets, eh);
  TrainingSetup s;
  s.model = base_model(ModelKind::kConcat, datasets, eh, cfg);
  TagSet domain{TagId(kOtherLabel)};
  for (const auto& ds : datasets) {
    const TagSet m = declared_members(eh, ds.train.tagset_name);
    domain.insert(m.begin(), m.end());
  }
  s.model.heads.emplace_back(std::string(kUnionHead),
                             std::vector<TagId>(domain.begin(), domain.end()));
  s.model.emissions = std::make_unique<LinearEmissionModel>(
      s.model.vocab.size(), s.model.heads[0].size());
  s.num_datasets = datasets.size();
  for (std::size_t d = 0; d < datasets.size(); ++d) {
    const Corpus& c = datasets[d].train;
    const TagId tagset_other = eh.other_tag(c.tagset_name);
    // An explicit T-Other gold label is Other as far as the union is concerned.
    Corpus relabeled = c;
    for (auto& seq : relabeled.sequences) {
      for (auto& tok : seq.tokens) {
        if (tok.gold == tagset_other) tok.gold.clear();
      }
    }
    add_singleton_examples(s, relabeled, 0, d, TagId(kOtherLabel));
    add_dev(s, datasets[d], 0);
  }
  return s;
}

TrainingSetup setup_single(const TrainingDataset& dataset,
                           const ExtendedHierarchy& eh,
                           const TrainConfig& cfg) {
  check_config(cfg);
  std::span<const TrainingDataset> one(&dataset, 1);
  validate_datasets(one, eh);
  TrainingSetup s;
  s.model = base_model(ModelKind::kIndep, one, eh, cfg);
  const std::string& name = dataset.train.tagset_name;
  s.model.heads.emplace_back(name, eh.tagset_members(name));
  s.model.emissions = std::make_unique<LinearEmissionModel>(
      s.model.vocab.size(), s.model.heads[0].size());
  add_singleton_examples(s, dataset.train, 0, 0, eh.other_tag(name));
  add_dev(s, dataset, 0);
  return s;
}

TrainingSetup setup_mtl(std::span<const TrainingDataset> datasets,
                        const ExtendedHierarchy& eh, const TrainConfig& cfg) {
  check_config(cfg);
  validate_datasets(datasets, eh);
  if (cfg.hidden_dim == 0) {
    throw Error(ErrorCode::kInvalidArgument, "hidden dimension must be positive");
  }
  TrainingSetup s;
  s.model = base_model(ModelKind::kMtl, datasets, eh, cfg);
  std::vector<std::size_t> sizes;
  for (const auto& ds : datasets) {
    const std::string& name = ds.train.tagset_name;
    s.model.heads.emplace_back(name, eh.tagset_members(name));
    sizes.push_back(s.model.heads.back().size());
  }
  auto shared = std::make_unique<SharedEmissionModel>(
      s.model.vocab.size(), cfg.hidden_dim, sizes);
  shared->initialize(cfg.seed, cfg.init_scale);
  s.model.emissions = std::move(shared);
  s.num_datasets = datasets.size();
  for (std::size_t d = 0; d < datasets.size(); ++d) {
    const Corpus& c = datasets[d].train;
    add_singleton_examples(s, c, d, d, eh.other_tag(c.tagset_name));
    add_dev(s, datasets[d], d);
  }
  return s;
}

Trainer::Trainer(TrainedModel& model, std::span<const TrainingExample> examples,
                 const TrainConfig& cfg)
    : model_(model), examples_(examples), cfg_(cfg) {
  auto add_block = [this](std::span<double> values) {
    Block b;
    b.values = values;
    b.grad.assign(values.size(), 0.0);
    b.accum.assign(values.size(), 0.0);
    blocks_.push_back(std::move(b));
  };
  add_block(model_.emissions->parameters());
  for (auto& h : model_.heads) add_block(h.params);
}

double Trainer::step(std::span<const std::size_t> batch) {
  if (batch.empty()) return 0.0;
  for (auto& b : blocks_) std::fill(b.grad.begin(), b.grad.end(), 0.0);
  const double scale = 1.0 / static_cast<double>(batch.size());
  const bool per_head_emissions = model_.emissions->num_heads() > 1;
  std::set<std::size_t> active;
  double total = 0.0;
  std::vector<double> d_em;
  for (std::size_t idx : batch) {
    const TrainingExample& ex = examples_[idx];
    active.insert(ex.head);
    const auto p = model_.potentials(ex.features, ex.head);
    auto lg = crf::loss_and_grad(p, ex.mask);
    total += lg.loss;
    d_em = std::move(lg.grad.d_emissions);
    for (auto& v : d_em) v *= scale;
    model_.emissions->backprop(ex.features, per_head_emissions ? ex.head : 0,
                               d_em, blocks_[0].grad);
    auto& hg = blocks_[1 + ex.head].grad;
    const std::size_t y = model_.heads[ex.head].size();
    for (std::size_t k = 0; k < y * y; ++k) {
      hg[k] += scale * lg.grad.d_transitions[k];
    }
    for (std::size_t k = 0; k < y; ++k) {
      hg[y * y + k] += scale * lg.grad.d_start[k];
      hg[y * y + y + k] += scale * lg.grad.d_stop[k];
    }
  }

  if (cfg_.l2 > 0.0) {
    std::vector<char> touched(blocks_[0].values.size(), 0);
    for (std::size_t h : active) {
      for (auto [lo, hi] : model_.emissions->head_parameters(
               per_head_emissions ? h : 0)) {
        std::fill(touched.begin() + static_cast<std::ptrdiff_t>(lo),
                  touched.begin() + static_cast<std::ptrdiff_t>(hi), 1);
      }
      auto& hb = blocks_[1 + h];
      for (std::size_t k = 0; k < hb.values.size(); ++k) {
        hb.grad[k] += cfg_.l2 * hb.values[k];
      }
    }
    auto& eb = blocks_[0];
    for (std::size_t k = 0; k < eb.values.size(); ++k) {
      if (touched[k]) eb.grad[k] += cfg_.l2 * eb.values[k];
    }
  }

  double norm2 = 0.0;
  for (const auto& b : blocks_) {
    for (double g : b.grad) norm2 += g * g;
  }
  const double norm = std::sqrt(norm2);
  const double clip = norm > cfg_.clip_norm ? cfg_.clip_norm / norm : 1.0;

  constexpr double kEps = 1e-10;
  for (auto& b : blocks_) {
    for (std::size_t k = 0; k < b.values.size(); ++k) {
      const double g = b.grad[k] * clip;
      if (g == 0.0) continue;
      b.accum[k] += g * g;
      b.values[k] -= cfg_.learning_rate * g / (std::sqrt(b.accum[k]) + kEps);
    }
  }
  return total * scale;
}

double Trainer::mean_loss() const {
  if (examples_.empty()) return 0.0;
  double total = 0.0;
  for (const auto& ex : examples_) {
    const auto p = model_.potentials(ex.features, ex.head);
    const double loss =
        crf::log_partition(p) - crf::constrained_log_partition(p, ex.mask);
    total += std::max(0.0, loss);
  }
  return total / static_cast<double>(examples_.size());
}

HeadDecoding decode_head(const TrainedModel& model, std::size_t head,
                         const FeatureSequence& features) {
  HeadDecoding out;
  if (features.empty()) return out;
  const auto p = model.potentials(features, head);
  auto v = crf::viterbi(p);
  out.log_prob = v.score - crf::log_partition(p);
  out.path = std::move(v.path);
  return out;
}

namespace {

std::vector<std::vector<std::size_t>> make_batches(
    std::vector<std::size_t> order, std::size_t batch_size) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < order.size(); i += batch_size) {
    const std::size_t end = std::min(order.size(), i + batch_size);
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                     order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

std::vector<std::vector<std::size_t>> epoch_schedule(
    const TrainingSetup& s, const TrainConfig& cfg, std::size_t epoch) {
  Rng rng(mix_seed(cfg.seed, epoch));
  if (s.model.kind != ModelKind::kMtl || s.num_datasets <= 1) {
    std::vector<std::size_t> order(s.examples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    if (cfg.shuffle) rng.shuffle(order);
    return make_batches(std::move(order), cfg.batch_size);
  }
  std::vector<std::vector<std::vector<std::size_t>>> per(s.num_datasets);
  std::size_t rounds = 0;
  for (std::size_t d = 0; d < s.num_datasets; ++d) {
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < s.examples.size(); ++i) {
      if (s.examples[i].dataset == d) order.push_back(i);
    }
    if (cfg.shuffle) rng.shuffle(order);
    per[d] = make_batches(std::move(order), cfg.batch_size);
    rounds = std::max(rounds, per[d].size());
  }
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t r = 0; r < rounds; ++r) {
    for (std::size_t d = 0; d < s.num_datasets; ++d) {
      if (per[d].empty()) continue;
      out.push_back(per[d][r % per[d].size()]);
    }
  }
  return out;
}

eval::TagCounts dev_counts(const TrainedModel& model,
                           std::span<const DevSet> dev) {
  eval::TagCounts total;
  for (const auto& d : dev) {
    const std::string& target = d.gold.tagset_name;
    const auto mapping = model.head_mapping(d.head, target);
    const TagId other = model.hierarchy.other_tag(target);
    std::vector<std::vector<TagId>> pred;
    std::vector<std::vector<TagId>> gold;
    for (std::size_t s = 0; s < d.features.size(); ++s) {
      const auto dec = decode_head(model, d.head, d.features[s]);
      std::vector<TagId> tags;
      for (std::size_t y : dec.path) {
        tags.push_back(mapping[y] == other ? TagId() : mapping[y]);
      }
      pred.push_back(std::move(tags));
      auto g = d.gold.sequences[s].golds();
      for (auto& t : g) {
        if (t == other) t.clear();
      }
      gold.push_back(std::move(g));
    }
    total += eval::score(pred, gold).micro;
  }
  return total;
}

struct Snapshot {
  std::vector<double> emissions;
  std::vector<std::vector<double>> heads;
};

Snapshot take_snapshot(const TrainedModel& m) {
  Snapshot s;
  auto p = m.emissions->parameters();
  s.emissions.assign(p.begin(), p.end());
  for (const auto& h : m.heads) s.heads.push_back(h.params);
  return s;
}

void restore_snapshot(TrainedModel& m, const Snapshot& s) {
  auto p = m.emissions->parameters();
  std::copy(s.emissions.begin(), s.emissions.end(), p.begin());
  for (std::size_t h = 0; h < m.heads.size(); ++h) m.heads[h].params = s.heads[h];
}

}  // namespace

TrainedModel fit(TrainingSetup setup) {
  TrainedModel& model = setup.model;
  const TrainConfig cfg = model.config;
  Trainer trainer(model, setup.examples, cfg);
  const bool has_dev = !setup.dev.empty();
  double best_f1 = -1.0;
  double prev_loss = std::numeric_limits<double>::infinity();
  std::size_t stale = 0;
  Snapshot best;
  std::size_t epoch = 0;
  while (epoch < cfg.max_epochs) {
    ++epoch;
    for (const auto& batch : epoch_schedule(setup, cfg, epoch)) {
      trainer.step(batch);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = trainer.mean_loss();
    if (has_dev) {
      const double f1 = dev_counts(model, setup.dev).f1();
      rec.dev_f1 = f1;
      if (f1 > best_f1) {
        best_f1 = f1;
        best = take_snapshot(model);
        stale = 0;
      } else {
        ++stale;
      }
    } else {
      const double gain = (prev_loss - rec.loss) /
                          std::max(std::abs(prev_loss), 1e-12);
      if (std::isfinite(prev_loss) && gain < cfg.tolerance) {
        ++stale;
      } else {
        stale = 0;
      }
      prev_loss = rec.loss;
    }
    model.log.push_back(rec);
    if (cfg.patience > 0 && stale >= cfg.patience) break;
  }
  if (has_dev && !best.heads.empty()) restore_snapshot(model, best);
  model.epochs_run = epoch;
  model.final_loss = trainer.mean_loss();
  return std::move(model);
}

TrainedModel train_hier(std::span<const TrainingDataset> datasets,
                        const ExtendedHierarchy& eh, const TrainConfig& cfg) {
  return fit(setup_hier(datasets, eh, cfg));
}

TrainedModel train_concat(std::span<const TrainingDataset> datasets,
                          const ExtendedHierarchy& eh, const TrainConfig& cfg) {
  return fit(setup_concat(datasets, eh, cfg));
}

std::vector<TrainedModel> train_indep(std::span<const TrainingDataset> datasets,
                                      const ExtendedHierarchy& eh,
                                      const TrainConfig& cfg) {
  validate_datasets(datasets, eh);
  std::vector<TrainedModel> out;
  for (const auto& ds : datasets) out.push_back(fit(setup_single(ds, eh, cfg)));
  return out;
}

TrainedModel train_mtl(std::span<const TrainingDataset> datasets,
                       const ExtendedHierarchy& eh, const TrainConfig& cfg) {
  return fit(setup_mtl(datasets, eh, cfg));
}

std::vector<TrainedModel> train_models(
    ModelKind kind, std::span<const TrainingDataset> datasets,
    const ExtendedHierarchy& eh, const TrainConfig& cfg) {
  std::vector<TrainedModel> out;
  switch (kind) {
    case ModelKind::kHier:
      out.push_back(train_hier(datasets, eh, cfg));
      break;
    case ModelKind::kConcat:
      out.push_back(train_concat(datasets, eh, cfg));
      break;
    case ModelKind::kIndep:
      out = train_indep(datasets, eh, cfg);
      break;
    case ModelKind::kMtl:
      out.push_back(train_mtl(datasets, eh, cfg));
      break;
  }
  return out;
}

std::vector<TagId> predict_hier(const TrainedModel& model,
                                std::span<const std::string> tokens,
                                const std::string& test_tagset) {
  if (model.kind != ModelKind::kHier) {
    throw Error(ErrorCode::kInvalidArgument,
                "predict_hier needs a hier model");
  }
  const auto mapping = model.head_mapping(0, test_tagset);
  const auto dec = decode_head(model, 0, model.featurize(tokens));
  std::vector<TagId> out;
  out.reserve(dec.path.size());
  for (std::size_t y : dec.path) out.push_back(mapping[y]);
  return out;
}

std::vector<Tagger> taggers_of(std::span<const TrainedModel> models) {
  std::vector<Tagger> out;
  for (const auto& m : models) {
    for (std::size_t h = 0; h < m.heads.size(); ++h) out.push_back({&m, h});
  }
  return out;
}

Consolidated predict_multi(std::span<const Tagger> taggers,
                           std::span<const std::string> tokens,
                           const std::string& test_tagset,
                           ConsolidationMethod method, std::uint64_t seed) {
  if (taggers.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no taggers to consolidate");
  }
  const std::size_t n = tokens.size();
  const std::size_t k = taggers.size();
  std::vector<std::vector<TagId>> mappings(k);
  std::vector<double> log_probs(k);
  std::vector<crf::Marginals> marg(k);
  std::map<const TrainedModel*, FeatureSequence> features;
  Consolidated out;
  out.mapped.resize(k);
  TagId other;
  for (std::size_t t = 0; t < k; ++t) {
    const TrainedModel* m = taggers[t].model;
    if (m == nullptr || m->kind == ModelKind::kHier) {
      throw Error(ErrorCode::kInvalidArgument,
                  "consolidation applies to concat, indep and mtl models only");
    }
    other = m->hierarchy.other_tag(test_tagset);
    mappings[t] = m->head_mapping(taggers[t].head, test_tagset);
    auto it = features.find(m);
    if (it == features.end()) {
      it = features.emplace(m, m->featurize(tokens)).first;
    }
    if (n == 0) continue;
    const auto p = m->potentials(it->second, taggers[t].head);
    const auto v = crf::viterbi(p);
    marg[t] = crf::marginals(p);
    log_probs[t] = v.score - marg[t].log_z;
    for (std::size_t y : v.path) out.mapped[t].push_back(mappings[t][y]);
  }

  Rng rng(seed);
  out.tags.assign(n, other);
  for (std::size_t i = 0; i < n; ++i) {
    std::set<TagId> cand_set;
    for (std::size_t t = 0; t < k; ++t) {
      if (out.mapped[t][i] != other) cand_set.insert(out.mapped[t][i]);
    }
    if (cand_set.empty()) continue;
    const std::vector<TagId> cands(cand_set.begin(), cand_set.end());
    if (cands.size() == 1) {
      out.tags[i] = cands[0];
      continue;
    }
    CollisionRecord rec;
    rec.position = i;
    rec.candidates = cands;
    // Per candidate: best tagger-level probability and the tagger holding it.
    std::vector<std::size_t> holder(cands.size(), k);
    rec.probabilities.assign(cands.size(), -1.0);
    for (std::size_t c = 0; c < cands.size(); ++c) {
      for (std::size_t t = 0; t < k; ++t) {
        double prob = 0.0;
        for (std::size_t y = 0; y < mappings[t].size(); ++y) {
          if (mappings[t][y] == cands[c]) prob += marg[t].at(i, y);
        }
        if (prob > rec.probabilities[c]) {
          rec.probabilities[c] = prob;
          holder[c] = t;
        }
      }
    }
    switch (method) {
      case ConsolidationMethod::kRandom:
        out.tags[i] = cands[rng.below(cands.size())];
        break;
      case ConsolidationMethod::kBestSequenceScore: {
        std::size_t best = k;
        for (std::size_t t = 0; t < k; ++t) {
          if (out.mapped[t][i] == other) continue;
          if (best == k || log_probs[t] > log_probs[best]) best = t;
        }
        out.tags[i] = out.mapped[best][i];
        break;
      }
      case ConsolidationMethod::kMaxMarginal: {
        std::size_t best = 0;
        for (std::size_t c = 1; c < cands.size(); ++c) {
          const double pc = rec.probabilities[c];
          const double pb = rec.probabilities[best];
          if (pc > pb || (pc == pb && holder[c] < holder[best])) best = c;
        }
        out.tags[i] = cands[best];
        break;
      }
    }
    out.collision_positions.push_back(std::move(rec));
  }
  out.collisions = out.collision_positions.size();
  return out;
}

TaggingResult tag_corpus(std::span<const TrainedModel> models,
                         const Corpus& input, const std::string& test_tagset,
                         ConsolidationMethod method, std::uint64_t seed) {
  if (models.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no models given");
  }
  const bool hier = models[0].kind == ModelKind::kHier;
  for (const auto& m : models) {
    if ((m.kind == ModelKind::kHier) != hier || (hier && models.size() > 1)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "a hier model must be used on its own");
    }
  }
  TaggingResult out;
  out.predictions.tagset_name = test_tagset;
  out.predictions.split = Split::kTest;
  const TagId other = models[0].hierarchy.other_tag(test_tagset);
  const auto taggers = hier ? std::vector<Tagger>{} : taggers_of(models);
  out.consolidated = taggers.size() > 1;
  for (std::size_t d = 0; d < input.sequences.size(); ++d) {
    const auto& seq = input.sequences[d];
    const auto texts = seq.texts();
    std::vector<TagId> tags;
    if (hier) {
      tags = predict_hier(models[0], texts, test_tagset);
    } else {
      auto c = predict_multi(taggers, texts, test_tagset, method,
                             mix_seed(seed, d));
      out.collisions += c.collisions;
      tags = std::move(c.tags);
    }
    LabeledSequence pred;
    pred.doc_id = seq.doc_id;
    for (std::size_t i = 0; i < texts.size(); ++i) {
      pred.tokens.push_back({texts[i], tags[i] == other ? TagId() : tags[i]});
    }
    out.predictions.sequences.push_back(std::move(pred));
  }
  return out;
}

std::string format_training_log(std::span<const TrainedModel> models) {
  std::string out = "member\thead\tepoch\tloss\tdev_f1\n";
  char buf[64];
  for (std::size_t m = 0; m < models.size(); ++m) {
    const auto& model = models[m];
    const std::string heads = model.heads.size() == 1
                                  ? model.heads[0].name
                                  : std::string("*");
    for (const auto& rec : model.log) {
      out += std::to_string(m) + "\t" + heads + "\t" +
             std::to_string(rec.epoch) + "\t";
      std::snprintf(buf, sizeof buf, "%.9g", rec.loss);
      out += buf;
      out += "\t";
      if (rec.dev_f1) {
        std::snprintf(buf, sizeof buf, "%.6f", *rec.dev_f1);
        out += buf;
      } else {
        out += "-";
      }
      out += "\n";
    }
  }
  return out;
}

}  // namespace hiertag
