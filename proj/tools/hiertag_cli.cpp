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

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hiertag/hiertag.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct UsageError {
  std::string message;
};

struct Failure {
  ht_status status;
  std::string context;
};

int exit_code(ht_status status) {
  switch (status) {
    case HT_OK:
      return kExitOk;
    case HT_ERR_INVALID_ARGUMENT:
    case HT_ERR_PARSE:
    case HT_ERR_VALIDATION:
      return kExitUsage;
    default:
      return kExitRuntime;
  }
}

void check(ht_status status, const std::string& context) {
  if (status != HT_OK) throw Failure{status, context};
}

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using HierarchyPtr =
    std::unique_ptr<ht_hierarchy, Deleter<ht_hierarchy, ht_hierarchy_free>>;
using CorpusPtr = std::unique_ptr<ht_corpus, Deleter<ht_corpus, ht_corpus_free>>;
using ModelsPtr = std::unique_ptr<ht_models, Deleter<ht_models, ht_models_free>>;

struct OwnedString {
  char* p = nullptr;
  ~OwnedString() { ht_string_free(p); }
};

// `path:tagset`, split at the last colon.
std::pair<std::string, std::string> split_binding(const std::string& arg,
                                                  const std::string& flag) {
  const auto colon = arg.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == arg.size()) {
    throw UsageError{flag + " expects path:tagset, got '" + arg + "'"};
  }
  return {arg.substr(0, colon), arg.substr(colon + 1)};
}

HierarchyPtr load_hierarchy(const std::string& path) {
  ht_hierarchy* h = nullptr;
  check(ht_hierarchy_load(path.c_str(), &h), "reading hierarchy " + path);
  return HierarchyPtr(h);
}

CorpusPtr load_corpus(const std::string& path, const std::string& tagset) {
  ht_corpus* c = nullptr;
  check(ht_corpus_load(path.c_str(), tagset.c_str(), &c),
        "reading corpus " + path);
  return CorpusPtr(c);
}

void write_text(const std::string& path, const std::string& text) {
  FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw Failure{HT_ERR_IO, "cannot open " + path + " for writing"};
  const bool ok = std::fwrite(text.data(), 1, text.size(), f) == text.size();
  if (std::fclose(f) != 0 || !ok) {
    throw Failure{HT_ERR_IO, "cannot write " + path};
  }
}

struct ExtendArgs {
  std::string in;
  std::string out;
};

int run_extend(const ExtendArgs& a) {
  auto base = load_hierarchy(a.in);
  if (ht_hierarchy_is_extended(base.get())) {
    throw UsageError{a.in + " is already extended"};
  }
  ht_hierarchy* ext = nullptr;
  std::size_t nodes = 0;
  std::size_t edges = 0;
  check(ht_hierarchy_extend(base.get(), &ext, &nodes, &edges), "extending");
  HierarchyPtr owned(ext);
  check(ht_hierarchy_save(ext, a.out.c_str()), "writing " + a.out);
  std::cout << "added nodes: " << nodes << "\nadded edges: " << edges << "\n";
  return kExitOk;
}

struct TrainArgs {
  std::string kind;
  std::vector<std::string> data;
  std::vector<std::string> dev;
  std::string hierarchy;
  std::string out;
  std::string log;
  ht_train_config cfg{};
};

int run_train(TrainArgs& a) {
  ht_model_kind kind;
  if (a.kind == "hier") {
    kind = HT_MODEL_HIER;
  } else if (a.kind == "concat") {
    kind = HT_MODEL_CONCAT;
  } else if (a.kind == "indep") {
    kind = HT_MODEL_INDEP;
  } else if (a.kind == "mtl") {
    kind = HT_MODEL_MTL;
  } else {
    throw UsageError{"--kind must be hier, concat, indep or mtl"};
  }
  if (kind == HT_MODEL_HIER && a.hierarchy.empty()) {
    throw UsageError{"--hierarchy is required for --kind hier"};
  }
  HierarchyPtr hierarchy;
  if (!a.hierarchy.empty()) hierarchy = load_hierarchy(a.hierarchy);

  std::vector<CorpusPtr> owned;
  std::vector<ht_dataset> datasets;
  std::vector<std::string> tagsets;
  for (const auto& arg : a.data) {
    auto [path, tagset] = split_binding(arg, "--data");
    owned.push_back(load_corpus(path, tagset));
    datasets.push_back({owned.back().get(), nullptr});
    tagsets.push_back(tagset);
  }
  for (const auto& arg : a.dev) {
    auto [path, tagset] = split_binding(arg, "--dev");
    std::size_t match = datasets.size();
    for (std::size_t i = 0; i < tagsets.size(); ++i) {
      if (tagsets[i] == tagset && !datasets[i].dev) {
        match = i;
        break;
      }
    }
    if (match == datasets.size()) {
      throw UsageError{"--dev " + arg + " matches no --data tagset"};
    }
    owned.push_back(load_corpus(path, tagset));
    datasets[match].dev = owned.back().get();
  }

  ht_models* models = nullptr;
  check(ht_train(kind, datasets.data(), datasets.size(), hierarchy.get(),
                 &a.cfg, &models),
        "training");
  ModelsPtr m(models);
  check(ht_models_save(models, a.out.c_str()), "writing " + a.out);
  if (!a.log.empty()) {
    OwnedString log;
    check(ht_models_training_log(models, &log.p), "formatting training log");
    write_text(a.log, log.p);
  }
  return kExitOk;
}

struct TagArgs {
  std::vector<std::string> models;
  std::string input;
  std::string tagset;
  std::string out;
  std::string consolidation = "random";
  std::uint64_t seed = 1;
};

int run_tag(const TagArgs& a) {
  ht_consolidation method;
  if (a.consolidation == "random") {
    method = HT_CONSOLIDATE_RANDOM;
  } else if (a.consolidation == "best-score") {
    method = HT_CONSOLIDATE_BEST_SCORE;
  } else if (a.consolidation == "max-marginal") {
    method = HT_CONSOLIDATE_MAX_MARGINAL;
  } else {
    throw UsageError{
        "--consolidation must be random, best-score or max-marginal"};
  }
  ModelsPtr all;
  for (const auto& path : a.models) {
    ht_models* m = nullptr;
    check(ht_models_load(path.c_str(), &m), "reading model " + path);
    ModelsPtr loaded(m);
    if (!all) {
      all = std::move(loaded);
    } else {
      check(ht_models_append(all.get(), loaded.get()), "combining models");
    }
  }
  auto input = load_corpus(a.input, a.tagset);
  ht_corpus* out = nullptr;
  std::size_t collisions = 0;
  int consolidated = 0;
  check(ht_tag(all.get(), input.get(), a.tagset.c_str(), method, a.seed, &out,
               &collisions, &consolidated),
        "tagging");
  CorpusPtr predictions(out);
  check(ht_corpus_save(out, a.out.c_str()), "writing " + a.out);
  if (consolidated) std::cout << "collisions: " << collisions << "\n";
  return kExitOk;
}

struct EvalArgs {
  std::string pred;
  std::string gold;
  bool span = false;
};

int run_eval(const EvalArgs& a) {
  auto gold = load_corpus(a.gold, "eval");
  auto pred = load_corpus(a.pred, "eval");
  ht_prf micro{};
  OwnedString table;
  check(ht_eval(pred.get(), gold.get(), a.span ? 1 : 0, &micro, &table.p),
        "scoring");
  std::cout << table.p;
  return kExitOk;
}

struct ExperimentArgs {
  std::string spec;
  std::string out;
  std::size_t threads = 0;
};

int run_experiment(const ExperimentArgs& a) {
  int failed = 0;
  auto log = [](const char* msg, void*) { std::cerr << msg << std::endl; };
  check(ht_experiment_run(a.spec.c_str(), a.out.c_str(), a.threads, log,
                          nullptr, &failed),
        "running experiment " + a.spec);
  if (failed) {
    std::cerr << "hiertag: some experiment cells failed; see the reports\n";
    return kExitRuntime;
  }
  return kExitOk;
}

struct SynthArgs {
  std::string config;
  std::string out;
};

int run_synth(const SynthArgs& a) {
  std::size_t tokens = 0;
  check(ht_synth(a.config.c_str(), a.out.c_str(), &tokens),
        "generating " + a.out);
  std::cout << "tokens: " << tokens << "\n";
  return kExitOk;
}

struct SelectiveArgs {
  std::string base;
  std::string extending;
  std::string tag;
  std::string hierarchy;
  std::string base_out;
  std::string extending_out;
};

int run_selective(const SelectiveArgs& a) {
  auto [bpath, btag] = split_binding(a.base, "--base");
  auto [epath, etag] = split_binding(a.extending, "--extending");
  HierarchyPtr hierarchy;
  if (!a.hierarchy.empty()) hierarchy = load_hierarchy(a.hierarchy);
  auto base = load_corpus(bpath, btag);
  auto ext = load_corpus(epath, etag);
  ht_corpus* bo = nullptr;
  ht_corpus* eo = nullptr;
  check(ht_selective(base.get(), ext.get(), a.tag.c_str(), hierarchy.get(),
                     &bo, &eo),
        "building the selective split");
  CorpusPtr b(bo);
  CorpusPtr e(eo);
  check(ht_corpus_save(bo, a.base_out.c_str()), "writing " + a.base_out);
  check(ht_corpus_save(eo, a.extending_out.c_str()),
        "writing " + a.extending_out);
  std::cout << "base tagset: " << ht_corpus_tagset(bo)
            << "\nextending tagset: " << ht_corpus_tagset(eo) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tagging with heterogeneous tagsets through a tag hierarchy"};
  app.require_subcommand(1);
  app.set_version_flag("--version", ht_version());

  ExtendArgs ext;
  auto* ext_cmd = app.add_subcommand(
      "extend-hierarchy", "Add the Other tags and check tagset partitions");
  ext_cmd->add_option("input", ext.in, "Hierarchy file")->required();
  ext_cmd->add_option("output", ext.out, "Extended hierarchy file")->required();

  TrainArgs tr;
  ht_train_config_default(&tr.cfg);
  auto* tr_cmd = app.add_subcommand("train", "Train a model");
  tr_cmd->add_option("--kind", tr.kind, "hier, concat, indep or mtl")
      ->required();
  tr_cmd->add_option("--data", tr.data, "Training corpus as path:tagset")
      ->required();
  tr_cmd->add_option("--dev", tr.dev, "Development corpus as path:tagset");
  tr_cmd->add_option("--hierarchy", tr.hierarchy, "Tag hierarchy file");
  tr_cmd->add_option("--out", tr.out, "Model file")->required();
  tr_cmd->add_option("--log", tr.log, "Training log (TSV)");
  tr_cmd->add_option("--seed", tr.cfg.seed, "Random seed")->capture_default_str();
  tr_cmd->add_option("--epochs", tr.cfg.max_epochs, "Maximum epochs")
      ->capture_default_str();
  tr_cmd->add_option("--patience", tr.cfg.patience,
                     "Epochs without improvement before stopping")
      ->capture_default_str();
  tr_cmd->add_option("--lr", tr.cfg.learning_rate, "Learning rate")
      ->capture_default_str();
  tr_cmd->add_option("--l2", tr.cfg.l2, "L2 penalty")->capture_default_str();
  tr_cmd->add_option("--clip", tr.cfg.clip_norm, "Gradient norm clip")
      ->capture_default_str();
  tr_cmd->add_option("--batch-size", tr.cfg.batch_size, "Sequences per batch")
      ->capture_default_str();
  tr_cmd->add_option("--hidden-dim", tr.cfg.hidden_dim, "MTL hidden units")
      ->capture_default_str();
  tr_cmd->add_option("--window", tr.cfg.window, "Feature window radius")
      ->capture_default_str();

  TagArgs tg;
  auto* tg_cmd = app.add_subcommand("tag", "Tag a corpus");
  tg_cmd->add_option("--model", tg.models, "Model file (repeatable)")
      ->required();
  tg_cmd->add_option("--input", tg.input, "Column corpus to tag")->required();
  tg_cmd->add_option("--tagset", tg.tagset, "Test tagset")->required();
  tg_cmd->add_option("--out", tg.out, "Prediction file")->required();
  tg_cmd->add_option("--consolidation", tg.consolidation,
                     "random, best-score or max-marginal")
      ->capture_default_str();
  tg_cmd->add_option("--seed", tg.seed, "Consolidation seed")
      ->capture_default_str();

  EvalArgs ev;
  auto* ev_cmd = app.add_subcommand("eval", "Score predictions");
  ev_cmd->add_option("--pred", ev.pred, "Prediction file")->required();
  ev_cmd->add_option("--gold", ev.gold, "Gold file")->required();
  ev_cmd->add_flag("--span", ev.span, "Score exact-match spans");

  ExperimentArgs ex;
  auto* ex_cmd = app.add_subcommand("experiment", "Run an experiment spec");
  ex_cmd->add_option("spec", ex.spec, "Experiment spec file")->required();
  ex_cmd->add_option("--out", ex.out, "Report directory")->required();
  ex_cmd->add_option("--threads", ex.threads,
                     "Parallel cells (default HIERTAG_THREADS or all cores)");

  SynthArgs sy;
  auto* sy_cmd = app.add_subcommand("synth", "Generate a synthetic corpus");
  sy_cmd->add_option("--config", sy.config, "Generator config")->required();
  sy_cmd->add_option("--out", sy.out, "Column corpus")->required();

  SelectiveArgs se;
  auto* se_cmd =
      app.add_subcommand("selective", "Build a selective-annotation pair");
  se_cmd->add_option("--base", se.base, "Base corpus as path:tagset")
      ->required();
  se_cmd->add_option("--extending", se.extending,
                     "Extending corpus as path:tagset")
      ->required();
  se_cmd->add_option("--tag", se.tag, "Tag to move")->required();
  se_cmd->add_option("--hierarchy", se.hierarchy, "Tag hierarchy file");
  se_cmd->add_option("--base-out", se.base_out, "Reduced base corpus")
      ->required();
  se_cmd->add_option("--extending-out", se.extending_out,
                     "Reduced extending corpus")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*ext_cmd) return run_extend(ext);
    if (*tr_cmd) return run_train(tr);
    if (*tg_cmd) return run_tag(tg);
    if (*ev_cmd) return run_eval(ev);
    if (*ex_cmd) return run_experiment(ex);
    if (*sy_cmd) return run_synth(sy);
    if (*se_cmd) return run_selective(se);
  } catch (const UsageError& e) {
    std::cerr << "hiertag: " << e.message << "\n";
    return kExitUsage;
  } catch (const Failure& f) {
    const char* detail = ht_last_error();
    std::cerr << "hiertag: " << f.context << ": "
              << (detail && *detail ? detail : ht_status_string(f.status))
              << "\n";
    return exit_code(f.status);
  }
  return kExitUsage;
}
