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

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "hiertag/data.hpp"
#include "hiertag/error.hpp"
#include "hiertag/experiment.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using hiertag::ExperimentKind;

namespace {

std::string synth_config(std::uint64_t seed, const std::string& tagset,
                         const std::string& types) {
  return "seed = " + std::to_string(seed) +
         "\nlexicon_seed = 5\ndocs = 12\ndoc_length = 60\n"
         "entity_rate = 0.1\nbackground_size = 300\ntagset = " +
         tagset +
         "\npool first size=40 style=capital\n"
         "pool place size=40 style=capital\n"
         "pool date size=40 style=date\n" +
         types;
}

const char* const kTypesA =
    "type Name pools=first triggers=Dr trigger_prob=0.8\n"
    "type Date pools=date\n"
    "type Location pools=place triggers=in trigger_prob=0.8\n";
const char* const kTypesB =
    "type Name pools=first triggers=Dr trigger_prob=0.8\n"
    "type Date pools=date\n";

// Writes train/dev/test corpora for datasets A and B under a fresh directory.
struct Workspace {
  fs::path dir;

  Workspace() {
    dir = fs::temp_directory_path() / "hiertag_experiment_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::uint64_t seed = 100;
    for (const auto& [name, types] :
         {std::pair<std::string, const char*>{"A", kTypesA}, {"B", kTypesB}}) {
      for (const auto* split : {"train", "dev", "test"}) {
        auto cfg = hiertag::parse_synth_config(synth_config(++seed, name, types));
        hiertag::write_column_file(hiertag::synth_corpus(cfg),
                                   dir / (name + "." + split));
      }
    }
  }
  ~Workspace() { fs::remove_all(dir); }

  std::string datasets() const {
    return "[dataset]\nname = A\ntrain = A.train\ndev = A.dev\ntest = A.test\n"
           "[dataset]\nname = B\ntrain = B.train\ndev = B.dev\n"
           "test = B.test\n";
  }
};

hiertag::ExperimentResult run(const Workspace& ws, const std::string& text,
                              std::size_t threads = 1) {
  const auto spec = hiertag::parse_experiment_spec(text, ws.dir);
  hiertag::ExperimentOptions opts;
  opts.threads = threads;
  return hiertag::run_experiment(spec, opts);
}

hiertag::ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const hiertag::Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return hiertag::ErrorCode::kRuntime;
}

}  // namespace

TEST_CASE("spec parsing") {
  const auto spec = hiertag::parse_experiment_spec(
      "# comment\nkind = integration\nmodels = hier, mtl\nseeds = 3, 4\n"
      "consolidation = max-marginal\nmatching = span\nepochs = 7\n"
      "patience = 2\nlr = 0.05\nl2 = 0\nbatch_size = 4\nhidden_dim = 9\n"
      "window = 1\nhierarchy = h.hier\ntrain = x, y\ntest = y\n"
      "[dataset]\nname = x\ntagset = TX\ntrain = x.conll  # inline\n"
      "[dataset]\nname = y\ntrain = /abs/y.conll\ntest = y.test\n",
      "/base");
  CHECK(spec.kind == ExperimentKind::kIntegration);
  CHECK(spec.models == std::vector<std::string>{"hier", "mtl"});
  CHECK(spec.seeds == std::vector<std::uint64_t>{3, 4});
  CHECK(spec.consolidation == hiertag::ConsolidationMethod::kMaxMarginal);
  CHECK(spec.matching == hiertag::eval::Matching::kSpan);
  CHECK(spec.config.max_epochs == 7);
  CHECK(spec.config.patience == 2);
  CHECK(spec.config.learning_rate == 0.05);
  CHECK(spec.config.l2 == 0.0);
  CHECK(spec.config.batch_size == 4);
  CHECK(spec.config.hidden_dim == 9);
  CHECK(spec.config.window == 1);
  CHECK(*spec.hierarchy == fs::path("/base/h.hier"));
  REQUIRE(spec.datasets.size() == 2);
  CHECK(spec.datasets[0].tagset == "TX");
  CHECK(spec.datasets[0].train == fs::path("/base/x.conll"));
  CHECK(spec.datasets[1].tagset == "y");
  CHECK(spec.datasets[1].train == fs::path("/abs/y.conll"));
  CHECK(spec.train == std::vector<std::string>{"x", "y"});
}

TEST_CASE("spec syntax errors name the line") {
  const std::vector<std::pair<std::string, int>> cases{
      {"kind = extension\nbogus = 1\n", 2},
      {"kind = extension\nmodels\n", 2},
      {"kind = extension\n[section]\n", 2},
      {"kind = sideways\n", 1},
      {"kind = extension\nseeds = 1, x\n", 2},
      {"kind = extension\nepochs = \n", 2},
      {"kind = extension\n[triplet]\ncolour = red\n", 3}};
  for (const auto& [text, line] : cases) {
    CAPTURE(text);
    try {
      hiertag::parse_experiment_spec(text, ".");
      FAIL("expected a parse error");
    } catch (const hiertag::Error& e) {
      CHECK(e.code() == hiertag::ErrorCode::kParse);
      CHECK(std::string(e.what()).find("line " + std::to_string(line) + ":") !=
            std::string::npos);
    }
  }
}

TEST_CASE("spec validation") {
  Workspace ws;
  const std::string triplet =
      "[triplet]\ntag = Date\nbase = A\nextending = B\n";
  auto validate = [&](const std::string& text) {
    return code_of([&] {
      hiertag::validate_experiment_spec(
          hiertag::parse_experiment_spec(text, ws.dir));
    });
  };
  CHECK_NOTHROW(hiertag::validate_experiment_spec(hiertag::parse_experiment_spec(
      "models = hier\n" + ws.datasets() + triplet, ws.dir)));
  const auto v = hiertag::ErrorCode::kValidation;
  CHECK(validate("models = hier, crf\n" + ws.datasets() + triplet) == v);
  CHECK(validate("models = hier, hier\n" + ws.datasets() + triplet) == v);
  CHECK(validate(ws.datasets() + triplet) == v);
  CHECK(validate("models = hier\n" + ws.datasets()) == v);
  CHECK(validate("models = hier\nhierarchy = nope.hier\n" + ws.datasets() +
                 triplet) == v);
  CHECK(validate("models = hier\n[dataset]\nname = A\ntrain = missing\n" +
                 triplet) == v);
  CHECK(validate("models = hier\n" + ws.datasets() +
                 "[triplet]\ntag = Date\nbase = A\nextending = C\n") == v);
  CHECK(validate("models = hier\n" + ws.datasets() +
                 "[triplet]\ntag = Date\nbase = A\nextending = A\n") == v);
  CHECK(validate("kind = integration\nmodels = skyline\ntrain = A\ntest = A\n" +
                 ws.datasets()) == v);
  CHECK(validate("kind = integration\nmodels = hier\ntrain = A\n" +
                 ws.datasets()) == v);

  // Unknown model kinds fail before any cell is trained.
  std::size_t logged = 0;
  hiertag::ExperimentOptions opts;
  opts.log = [&](const std::string&) { ++logged; };
  const auto bad = hiertag::parse_experiment_spec(
      "models = hier, transformer\n" + ws.datasets() + triplet, ws.dir);
  CHECK_THROWS_AS(hiertag::run_experiment(bad, opts), hiertag::Error);
  CHECK(logged == 0);

  // A triplet tag missing from one tagset is caught when inputs load.
  const auto absent = hiertag::parse_experiment_spec(
      "models = hier\n" + ws.datasets() +
          "[triplet]\ntag = Location\nbase = A\nextending = B\n",
      ws.dir);
  CHECK(code_of([&] { hiertag::run_experiment(absent, opts); }) == v);
  CHECK(logged == 0);
}

TEST_CASE("extension experiment") {
  Workspace ws;
  const std::string text =
      "kind = extension\nmodels = hier, indep, concat\nseeds = 1, 2, 3\n"
      "epochs = 4\npatience = 2\n" +
      ws.datasets() + "[triplet]\ntag = Date\nbase = A\nextending = B\n";
  const auto r1 = run(ws, text, 1);
  CHECK_FALSE(r1.any_failed);
  REQUIRE(r1.rows.size() == 9);
  for (const auto& row : r1.rows) {
    CHECK(row.tag == "Date");
    CHECK(row.base == "A");
    CHECK(row.extending == "B");
    CHECK(row.test == "A");
    CHECK(row.collisions.has_value() == (row.model == "indep"));
    CHECK(row.counts.tp + row.counts.fn > 0);
  }
  CHECK(r1.markdown.find("## Wilcoxon") != std::string::npos);
  CHECK(r1.markdown.find("## Collisions") != std::string::npos);
  CHECK(r1.csv.rfind("tag,base,extending,test,model,seed,status,", 0) == 0);

  // Identical bytes on a rerun and under a different thread count.
  const auto r2 = run(ws, text, 3);
  CHECK(r2.csv == r1.csv);
  CHECK(r2.markdown == r1.markdown);
}

TEST_CASE("extension with a hierarchy and a skyline") {
  Workspace ws;
  {
    std::ofstream h(ws.dir / "h.hier");
    h << "edge Date Temporal\ntagset A Name Date Location\n"
         "tagset B Name Temporal\n";
  }
  // B labels dates with the coarser Temporal tag.
  auto b = hiertag::read_column_file(ws.dir / "B.train", "B");
  for (auto& s : b.sequences) {
    for (auto& t : s.tokens) {
      if (t.gold == "Date") t.gold = "Temporal";
    }
  }
  hiertag::write_column_file(b, ws.dir / "B.train");
  fs::remove(ws.dir / "B.dev");
  const std::string text =
      "hierarchy = h.hier\nmodels = hier, mtl, skyline\nepochs = 3\n"
      "patience = 0\nhidden_dim = 8\n"
      "[dataset]\nname = A\ntrain = A.train\ndev = A.dev\ntest = A.test\n"
      "[dataset]\nname = B\ntrain = B.train\n"
      "[triplet]\ntag = Name\nbase = A\nextending = B\n";
  const auto r = run(ws, text, 2);
  CHECK_FALSE(r.any_failed);
  REQUIRE(r.rows.size() == 3);
  for (const auto& row : r.rows) {
    CHECK(row.collisions.has_value() == (row.model == "mtl"));
    CHECK(row.counts.f1() > 0.0);
  }
}

TEST_CASE("failed cells are recorded and the run continues") {
  Workspace ws;
  const std::string text =
      "models = indep, mtl\nepochs = 2\nhidden_dim = 0\n" + ws.datasets() +
      "[triplet]\ntag = Date\nbase = A\nextending = B\n";
  std::vector<std::string> messages;
  hiertag::ExperimentOptions opts;
  opts.threads = 1;
  opts.log = [&](const std::string& m) { messages.push_back(m); };
  const auto r = hiertag::run_experiment(
      hiertag::parse_experiment_spec(text, ws.dir), opts);
  CHECK(r.any_failed);
  REQUIRE(r.rows.size() == 2);
  CHECK(messages.size() == 2);
  for (const auto& row : r.rows) {
    CHECK(row.failed == (row.model == "mtl"));
    if (row.failed) CHECK(row.error.find("hidden") != std::string::npos);
  }
  CHECK(r.markdown.find("FAILED") != std::string::npos);
  CHECK(r.csv.find(",failed,") != std::string::npos);
}

TEST_CASE("integration experiment") {
  Workspace ws;
  const std::string text =
      "kind = integration\nmodels = hier, mtl\nepochs = 3\npatience = 0\n"
      "hidden_dim = 8\ntrain = A, B\ntest = A, B\n" +
      ws.datasets();
  const auto r = run(ws, text, 2);
  CHECK_FALSE(r.any_failed);
  REQUIRE(r.rows.size() == 4);
  std::set<std::string> tests;
  for (const auto& row : r.rows) {
    CHECK(row.base == "A+B");
    CHECK(row.tag.empty());
    tests.insert(row.test);
  }
  CHECK(tests == std::set<std::string>{"A", "B"});
}

TEST_CASE("thread count from the environment") {
  ::setenv("HIERTAG_THREADS", "3", 1);
  CHECK(hiertag::default_thread_count() == 3);
  ::setenv("HIERTAG_THREADS", "zero", 1);
  CHECK(hiertag::default_thread_count() >= 1);
  ::unsetenv("HIERTAG_THREADS");
  CHECK(hiertag::default_thread_count() >= 1);
}
