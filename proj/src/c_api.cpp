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

#include "hiertag/hiertag.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "hiertag/data.hpp"
#include "hiertag/error.hpp"
#include "hiertag/eval.hpp"
#include "hiertag/experiment.hpp"
#include "hiertag/hierarchy.hpp"
#include "hiertag/models.hpp"
#include "text_util.hpp"

struct ht_hierarchy {
  hiertag::TagHierarchy graph;
};

struct ht_corpus {
  hiertag::Corpus corpus;
};

struct ht_models {
  std::vector<hiertag::TrainedModel> models;
};

namespace {

thread_local std::string g_last_error;

ht_status to_status(hiertag::ErrorCode code) {
  using hiertag::ErrorCode;
  switch (code) {
    case ErrorCode::kInvalidArgument:
      return HT_ERR_INVALID_ARGUMENT;
    case ErrorCode::kParse:
      return HT_ERR_PARSE;
    case ErrorCode::kValidation:
      return HT_ERR_VALIDATION;
    case ErrorCode::kIo:
      return HT_ERR_IO;
    case ErrorCode::kCorrupt:
      return HT_ERR_CORRUPT;
    case ErrorCode::kVersion:
      return HT_ERR_VERSION;
    case ErrorCode::kRuntime:
      return HT_ERR_RUNTIME;
  }
  return HT_ERR_RUNTIME;
}

template <typename F>
ht_status guard(F&& f) {
  g_last_error.clear();
  try {
    f();
    return HT_OK;
  } catch (const hiertag::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return HT_ERR_RUNTIME;
  } catch (...) {
    g_last_error = "unknown error";
    return HT_ERR_RUNTIME;
  }
}

void require(bool ok, const char* what) {
  if (!ok) {
    throw hiertag::Error(hiertag::ErrorCode::kInvalidArgument,
                         std::string(what) + " must not be NULL");
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

hiertag::ExtendedHierarchy as_extended(const hiertag::TagHierarchy& g) {
  return g.extended() ? hiertag::ExtendedHierarchy::from_extended(g)
                      : hiertag::ExtendedHierarchy::extend(g);
}

}  // namespace

extern "C" {

const char* ht_version(void) { return "1.0.0"; }

const char* ht_status_string(ht_status status) {
  switch (status) {
    case HT_OK:
      return "ok";
    case HT_ERR_INVALID_ARGUMENT:
      return "invalid argument";
    case HT_ERR_PARSE:
      return "parse error";
    case HT_ERR_VALIDATION:
      return "validation error";
    case HT_ERR_IO:
      return "i/o error";
    case HT_ERR_CORRUPT:
      return "corrupt file";
    case HT_ERR_VERSION:
      return "version mismatch";
    case HT_ERR_RUNTIME:
      return "runtime error";
  }
  return "unknown status";
}

const char* ht_last_error(void) { return g_last_error.c_str(); }

void ht_string_free(char* s) { std::free(s); }

ht_status ht_hierarchy_load(const char* path, ht_hierarchy** out) {
  return guard([&] {
    require(path && out, "path and out");
    auto h = std::make_unique<ht_hierarchy>();
    h->graph = hiertag::TagHierarchy::load(path);
    *out = h.release();
  });
}

ht_status ht_hierarchy_parse(const char* text, ht_hierarchy** out) {
  return guard([&] {
    require(text && out, "text and out");
    auto h = std::make_unique<ht_hierarchy>();
    h->graph = hiertag::TagHierarchy::parse(text);
    *out = h.release();
  });
}

void ht_hierarchy_free(ht_hierarchy* h) { delete h; }

int ht_hierarchy_is_extended(const ht_hierarchy* h) {
  return h && h->graph.extended() ? 1 : 0;
}

ht_status ht_hierarchy_extend(const ht_hierarchy* h, ht_hierarchy** out,
                              size_t* added_nodes, size_t* added_edges) {
  return guard([&] {
    require(h && out, "hierarchy and out");
    const auto eh = hiertag::ExtendedHierarchy::extend(h->graph);
    auto r = std::make_unique<ht_hierarchy>();
    r->graph = eh.graph();
    if (added_nodes) *added_nodes = eh.stats().added_nodes;
    if (added_edges) *added_edges = eh.stats().added_edges;
    *out = r.release();
  });
}

ht_status ht_hierarchy_serialize(const ht_hierarchy* h, char** out) {
  return guard([&] {
    require(h && out, "hierarchy and out");
    *out = dup_string(h->graph.serialize());
  });
}

ht_status ht_hierarchy_save(const ht_hierarchy* h, const char* path) {
  return guard([&] {
    require(h && path, "hierarchy and path");
    h->graph.save(path);
  });
}

ht_status ht_corpus_load(const char* path, const char* tagset,
                         ht_corpus** out) {
  return guard([&] {
    require(path && tagset && out, "path, tagset and out");
    auto c = std::make_unique<ht_corpus>();
    c->corpus = hiertag::read_column_file(path, tagset);
    *out = c.release();
  });
}

ht_status ht_corpus_save(const ht_corpus* c, const char* path) {
  return guard([&] {
    require(c && path, "corpus and path");
    hiertag::write_column_file(c->corpus, path);
  });
}

void ht_corpus_free(ht_corpus* c) { delete c; }

size_t ht_corpus_token_count(const ht_corpus* c) {
  return c ? c->corpus.token_count() : 0;
}

size_t ht_corpus_sequence_count(const ht_corpus* c) {
  return c ? c->corpus.sequences.size() : 0;
}

const char* ht_corpus_tagset(const ht_corpus* c) {
  return c ? c->corpus.tagset_name.c_str() : "";
}

void ht_train_config_default(ht_train_config* cfg) {
  if (!cfg) return;
  const hiertag::TrainConfig d;
  cfg->seed = d.seed;
  cfg->max_epochs = d.max_epochs;
  cfg->patience = d.patience;
  cfg->learning_rate = d.learning_rate;
  cfg->l2 = d.l2;
  cfg->clip_norm = d.clip_norm;
  cfg->batch_size = d.batch_size;
  cfg->hidden_dim = d.hidden_dim;
  cfg->window = d.window;
  cfg->tolerance = d.tolerance;
}

ht_status ht_train(ht_model_kind kind, const ht_dataset* datasets,
                   size_t count, const ht_hierarchy* hierarchy,
                   const ht_train_config* cfg, ht_models** out) {
  return guard([&] {
    require(datasets && out, "datasets and out");
    if (count == 0) {
      throw hiertag::Error(hiertag::ErrorCode::kInvalidArgument,
                           "no training datasets");
    }
    if (kind < HT_MODEL_HIER || kind > HT_MODEL_MTL) {
      throw hiertag::Error(hiertag::ErrorCode::kInvalidArgument,
                           "unknown model kind");
    }
    const auto k = static_cast<hiertag::ModelKind>(kind);
    if (k == hiertag::ModelKind::kHier && !hierarchy) {
      throw hiertag::Error(hiertag::ErrorCode::kInvalidArgument,
                           "hier models need a hierarchy");
    }
    hiertag::TrainConfig c;
    if (cfg) {
      c.seed = cfg->seed;
      c.max_epochs = cfg->max_epochs;
      c.patience = cfg->patience;
      c.learning_rate = cfg->learning_rate;
      c.l2 = cfg->l2;
      c.clip_norm = cfg->clip_norm;
      c.batch_size = cfg->batch_size;
      c.hidden_dim = cfg->hidden_dim;
      c.window = cfg->window;
      c.tolerance = cfg->tolerance;
    }
    std::vector<hiertag::TrainingDataset> ds;
    for (size_t i = 0; i < count; ++i) {
      require(datasets[i].train, "dataset train corpus");
      hiertag::TrainingDataset d;
      d.train = datasets[i].train->corpus;
      if (datasets[i].dev) {
        d.dev = datasets[i].dev->corpus;
        d.dev->tagset_name = d.train.tagset_name;
      }
      ds.push_back(std::move(d));
    }
    const auto eh = hierarchy ? as_extended(hierarchy->graph)
                              : hiertag::flat_hierarchy(ds);
    auto m = std::make_unique<ht_models>();
    m->models = hiertag::train_models(k, ds, eh, c);
    *out = m.release();
  });
}

ht_status ht_models_load(const char* path, ht_models** out) {
  return guard([&] {
    require(path && out, "path and out");
    auto m = std::make_unique<ht_models>();
    m->models = hiertag::load_models(path);
    *out = m.release();
  });
}

ht_status ht_models_save(const ht_models* m, const char* path) {
  return guard([&] {
    require(m && path, "models and path");
    hiertag::save_models(m->models, path);
  });
}

ht_status ht_models_append(ht_models* dst, const ht_models* src) {
  return guard([&] {
    require(dst && src, "dst and src");
    const auto copy = src->models;
    for (const auto& model : copy) dst->models.push_back(model);
  });
}

void ht_models_free(ht_models* m) { delete m; }

size_t ht_models_count(const ht_models* m) {
  return m ? m->models.size() : 0;
}

ht_model_kind ht_models_kind(const ht_models* m, size_t index) {
  if (!m || index >= m->models.size()) return static_cast<ht_model_kind>(0);
  return static_cast<ht_model_kind>(m->models[index].kind);
}

ht_status ht_models_training_log(const ht_models* m, char** out) {
  return guard([&] {
    require(m && out, "models and out");
    *out = dup_string(hiertag::format_training_log(m->models));
  });
}

ht_status ht_tag(const ht_models* m, const ht_corpus* input,
                 const char* tagset, ht_consolidation method, uint64_t seed,
                 ht_corpus** out, size_t* collisions, int* consolidated) {
  return guard([&] {
    require(m && input && tagset && out, "models, input, tagset and out");
    hiertag::ConsolidationMethod cm;
    switch (method) {
      case HT_CONSOLIDATE_RANDOM:
        cm = hiertag::ConsolidationMethod::kRandom;
        break;
      case HT_CONSOLIDATE_BEST_SCORE:
        cm = hiertag::ConsolidationMethod::kBestSequenceScore;
        break;
      case HT_CONSOLIDATE_MAX_MARGINAL:
        cm = hiertag::ConsolidationMethod::kMaxMarginal;
        break;
      default:
        throw hiertag::Error(hiertag::ErrorCode::kInvalidArgument,
                             "unknown consolidation method");
    }
    auto r = hiertag::tag_corpus(m->models, input->corpus, tagset, cm, seed);
    auto c = std::make_unique<ht_corpus>();
    c->corpus = std::move(r.predictions);
    if (collisions) *collisions = r.collisions;
    if (consolidated) *consolidated = r.consolidated ? 1 : 0;
    *out = c.release();
  });
}

ht_status ht_eval(const ht_corpus* predicted, const ht_corpus* gold,
                  int span_matching, ht_prf* micro, char** table) {
  return guard([&] {
    require(predicted && gold, "predicted and gold");
    const auto report = hiertag::eval::score_corpora(
        predicted->corpus, gold->corpus,
        span_matching ? hiertag::eval::Matching::kSpan
                      : hiertag::eval::Matching::kToken);
    if (micro) {
      micro->tp = report.micro.tp;
      micro->fp = report.micro.fp;
      micro->fn = report.micro.fn;
      micro->precision = report.micro.precision();
      micro->recall = report.micro.recall();
      micro->f1 = report.micro.f1();
      micro->token_count = report.token_count;
    }
    if (table) *table = dup_string(hiertag::eval::format_prf(report));
  });
}

ht_status ht_experiment_run(const char* spec_path, const char* out_dir,
                            size_t threads, ht_log_fn log, void* user,
                            int* any_failed) {
  return guard([&] {
    require(spec_path && out_dir, "spec_path and out_dir");
    const auto spec = hiertag::load_experiment_spec(spec_path);
    hiertag::ExperimentOptions opts;
    opts.threads = threads;
    if (log) {
      opts.log = [log, user](const std::string& msg) { log(msg.c_str(), user); };
    }
    const auto result = hiertag::run_experiment(spec, opts);
    const std::filesystem::path dir(out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
      throw hiertag::Error(hiertag::ErrorCode::kIo,
                           "cannot create '" + dir.string() + "': " +
                               ec.message());
    }
    hiertag::internal::write_file(dir / "report.csv", result.csv);
    hiertag::internal::write_file(dir / "report.md", result.markdown);
    if (any_failed) *any_failed = result.any_failed ? 1 : 0;
  });
}

ht_status ht_synth(const char* config_path, const char* out_path,
                   size_t* tokens) {
  return guard([&] {
    require(config_path && out_path, "config_path and out_path");
    const auto cfg = hiertag::parse_synth_config(
        hiertag::internal::read_file(config_path));
    const auto corpus = hiertag::synth_corpus(cfg);
    hiertag::write_column_file(corpus, out_path);
    if (tokens) *tokens = corpus.token_count();
  });
}

ht_status ht_selective(const ht_corpus* base, const ht_corpus* extending,
                       const char* tag, const ht_hierarchy* hierarchy,
                       ht_corpus** base_out, ht_corpus** extending_out) {
  return guard([&] {
    require(base && extending && tag && base_out && extending_out,
            "corpora, tag and outputs");
    auto tagset_of = [&](const hiertag::Corpus& c) {
      if (hierarchy && hierarchy->graph.has_tagset(c.tagset_name)) {
        return hierarchy->graph.tagset(c.tagset_name);
      }
      return hiertag::induce_tagset(c);
    };
    auto split = hiertag::make_selective(
        base->corpus, tagset_of(base->corpus), extending->corpus,
        tagset_of(extending->corpus), tag,
        hierarchy ? &hierarchy->graph : nullptr);
    auto b = std::make_unique<ht_corpus>();
    auto e = std::make_unique<ht_corpus>();
    b->corpus = std::move(split.base);
    e->corpus = std::move(split.extending);
    *base_out = b.release();
    *extending_out = e.release();
  });
}

}  // extern "C"
