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

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "hiertag/hiertag.h"

namespace fs = std::filesystem;

namespace {

fs::path data_dir() {
  if (const char* d = std::getenv("HIERTAG_TEST_DATA")) return d;
  return fs::path(__FILE__).parent_path() / "data";
}

std::string take(char* s) {
  std::string out = s == nullptr ? "" : s;
  ht_string_free(s);
  return out;
}

std::string path_of(const fs::path& p) { return p.string(); }

struct TempDir {
  fs::path dir;
  TempDir() {
    dir = fs::temp_directory_path() / "hiertag_c_api_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~TempDir() { fs::remove_all(dir); }
};

}  // namespace

TEST_CASE("library metadata") {
  CHECK(std::strlen(ht_version()) > 0);
  CHECK(std::string(ht_status_string(HT_OK)) == "ok");
  CHECK(std::string(ht_status_string(HT_ERR_CORRUPT)) != "ok");
  CHECK(ht_status_string(static_cast<ht_status>(99)) != nullptr);
  ht_string_free(nullptr);
}

TEST_CASE("null arguments are rejected") {
  ht_hierarchy* h = nullptr;
  CHECK(ht_hierarchy_load(nullptr, &h) == HT_ERR_INVALID_ARGUMENT);
  CHECK(std::strlen(ht_last_error()) > 0);
  CHECK(ht_hierarchy_parse("tagset T A\n", nullptr) == HT_ERR_INVALID_ARGUMENT);
  CHECK(ht_corpus_load("x", "T", nullptr) == HT_ERR_INVALID_ARGUMENT);
  CHECK(ht_train(HT_MODEL_HIER, nullptr, 0, nullptr, nullptr, nullptr) ==
        HT_ERR_INVALID_ARGUMENT);
  CHECK(ht_tag(nullptr, nullptr, "T", HT_CONSOLIDATE_RANDOM, 0, nullptr,
               nullptr, nullptr) == HT_ERR_INVALID_ARGUMENT);
  ht_hierarchy_free(nullptr);
  ht_corpus_free(nullptr);
  ht_models_free(nullptr);
}

TEST_CASE("hierarchy handles") {
  const auto fixture = path_of(data_dir() / "clinic.hier");
  ht_hierarchy* h = nullptr;
  REQUIRE(ht_hierarchy_load(fixture.c_str(), &h) == HT_OK);
  CHECK_FALSE(ht_hierarchy_is_extended(h));
  ht_hierarchy* eh = nullptr;
  size_t nodes = 0, edges = 0;
  REQUIRE(ht_hierarchy_extend(h, &eh, &nodes, &edges) == HT_OK);
  CHECK(ht_hierarchy_is_extended(eh));
  CHECK(nodes > 0);
  CHECK(edges > 0);
  char* text = nullptr;
  REQUIRE(ht_hierarchy_serialize(eh, &text) == HT_OK);
  const std::string s = take(text);
  CHECK(s.find("Age-Other") != std::string::npos);
  CHECK(s.find("T1-Other") != std::string::npos);
  ht_hierarchy* again = nullptr;
  CHECK(ht_hierarchy_extend(eh, &again, nullptr, nullptr) ==
        HT_ERR_VALIDATION);
  CHECK(again == nullptr);
  ht_hierarchy_free(eh);
  ht_hierarchy_free(h);

  ht_hierarchy* bad = nullptr;
  CHECK(ht_hierarchy_parse("edge A B\nedge B A\n", &bad) != HT_OK);
  CHECK(bad == nullptr);
  CHECK(std::string(ht_last_error()).size() > 0);
  CHECK(ht_hierarchy_parse("frobnicate\n", &bad) == HT_ERR_PARSE);
  CHECK(ht_hierarchy_load("/no/such/file", &bad) == HT_ERR_IO);
}

TEST_CASE("train, save, load, tag and evaluate") {
  TempDir tmp;
  const auto data = data_dir();
  ht_hierarchy* h = nullptr;
  REQUIRE(ht_hierarchy_load(path_of(data / "clinic.hier").c_str(), &h) ==
          HT_OK);
  ht_corpus* fine = nullptr;
  ht_corpus* coarse = nullptr;
  REQUIRE(ht_corpus_load(path_of(data / "notes.conll").c_str(), "T2", &fine) ==
          HT_OK);
  REQUIRE(ht_corpus_load(path_of(data / "notes_coarse.conll").c_str(), "T1",
                         &coarse) == HT_OK);
  CHECK(ht_corpus_sequence_count(fine) == 2);
  CHECK(ht_corpus_token_count(fine) == 19);
  CHECK(std::string(ht_corpus_tagset(fine)) == "T2");

  ht_train_config cfg;
  ht_train_config_default(&cfg);
  CHECK(cfg.max_epochs == 200);
  CHECK(cfg.patience == 10);
  cfg.max_epochs = 10;
  cfg.patience = 0;
  cfg.hidden_dim = 4;
  const ht_dataset ds[2] = {{fine, nullptr}, {coarse, nullptr}};

  ht_models* hier = nullptr;
  REQUIRE(ht_train(HT_MODEL_HIER, ds, 2, h, &cfg, &hier) == HT_OK);
  CHECK(ht_models_count(hier) == 1);
  CHECK(ht_models_kind(hier, 0) == HT_MODEL_HIER);
  ht_models* none = nullptr;
  CHECK(ht_train(HT_MODEL_HIER, ds, 2, nullptr, &cfg, &none) ==
        HT_ERR_INVALID_ARGUMENT);

  char* log = nullptr;
  REQUIRE(ht_models_training_log(hier, &log) == HT_OK);
  const std::string log_text = take(log);
  CHECK(std::count(log_text.begin(), log_text.end(), '\n') == 11);

  ht_corpus* pred = nullptr;
  size_t collisions = 7;
  int consolidated = 1;
  REQUIRE(ht_tag(hier, fine, "T3", HT_CONSOLIDATE_RANDOM, 1, &pred,
                 &collisions, &consolidated) == HT_OK);
  CHECK(collisions == 0);
  CHECK(consolidated == 0);
  CHECK(ht_corpus_token_count(pred) == ht_corpus_token_count(fine));
  ht_corpus* unknown = nullptr;
  CHECK(ht_tag(hier, fine, "T9", HT_CONSOLIDATE_RANDOM, 1, &unknown, nullptr,
               nullptr) != HT_OK);

  // Indep without a hierarchy uses flat tagsets; both heads append into one.
  ht_models* a = nullptr;
  ht_models* b = nullptr;
  REQUIRE(ht_train(HT_MODEL_INDEP, ds, 1, h, &cfg, &a) == HT_OK);
  REQUIRE(ht_train(HT_MODEL_INDEP, ds + 1, 1, h, &cfg, &b) == HT_OK);
  REQUIRE(ht_models_append(a, b) == HT_OK);
  CHECK(ht_models_count(a) == 2);
  ht_corpus* multi = nullptr;
  REQUIRE(ht_tag(a, fine, "T3", HT_CONSOLIDATE_MAX_MARGINAL, 1, &multi,
                 &collisions, &consolidated) == HT_OK);
  CHECK(consolidated == 1);
  ht_corpus_free(multi);

  const auto model_path = path_of(tmp.dir / "hier.model");
  REQUIRE(ht_models_save(hier, model_path.c_str()) == HT_OK);
  ht_models* loaded = nullptr;
  REQUIRE(ht_models_load(model_path.c_str(), &loaded) == HT_OK);
  ht_corpus* pred2 = nullptr;
  REQUIRE(ht_tag(loaded, fine, "T3", HT_CONSOLIDATE_RANDOM, 1, &pred2, nullptr,
                 nullptr) == HT_OK);
  const auto p1 = path_of(tmp.dir / "p1.conll");
  const auto p2 = path_of(tmp.dir / "p2.conll");
  REQUIRE(ht_corpus_save(pred, p1.c_str()) == HT_OK);
  REQUIRE(ht_corpus_save(pred2, p2.c_str()) == HT_OK);
  std::ifstream f1(p1), f2(p2);
  CHECK(std::string(std::istreambuf_iterator<char>(f1), {}) ==
        std::string(std::istreambuf_iterator<char>(f2), {}));

  {
    std::ofstream junk(tmp.dir / "junk.model", std::ios::binary);
    junk << "HTMODEL";
  }
  ht_models* corrupt = nullptr;
  CHECK(ht_models_load(path_of(tmp.dir / "junk.model").c_str(), &corrupt) ==
        HT_ERR_CORRUPT);
  CHECK(corrupt == nullptr);

  ht_prf prf{};
  char* table = nullptr;
  REQUIRE(ht_eval(fine, fine, 0, &prf, &table) == HT_OK);
  CHECK(prf.f1 == 1.0);
  CHECK(prf.token_count == 19);
  CHECK(take(table).find("micro") != std::string::npos);
  CHECK(ht_eval(fine, coarse, 1, &prf, nullptr) == HT_OK);
  CHECK(prf.f1 < 1.0);

  ht_corpus_free(pred);
  ht_corpus_free(pred2);
  ht_models_free(loaded);
  ht_models_free(a);
  ht_models_free(b);
  ht_models_free(hier);
  ht_corpus_free(fine);
  ht_corpus_free(coarse);
  ht_hierarchy_free(h);
}

TEST_CASE("synthesis and selective splits") {
  TempDir tmp;
  {
    std::ofstream cfg(tmp.dir / "s.cfg");
    cfg << "seed = 2\ndocs = 3\ndoc_length = 50\nentity_rate = 0.2\n"
           "background_size = 200\ntagset = S\n"
           "pool p size=30 style=capital\npool d size=30 style=date\n"
           "type Name pools=p\ntype Date pools=d\n";
  }
  size_t tokens = 0;
  const auto out = path_of(tmp.dir / "s.conll");
  REQUIRE(ht_synth(path_of(tmp.dir / "s.cfg").c_str(), out.c_str(), &tokens) ==
          HT_OK);
  CHECK(tokens == 150);
  CHECK(ht_synth(path_of(tmp.dir / "none.cfg").c_str(), out.c_str(),
                 &tokens) == HT_ERR_IO);

  ht_corpus* base = nullptr;
  ht_corpus* ext = nullptr;
  REQUIRE(ht_corpus_load(out.c_str(), "S", &base) == HT_OK);
  REQUIRE(ht_corpus_load(out.c_str(), "S", &ext) == HT_OK);
  ht_corpus* b2 = nullptr;
  ht_corpus* e2 = nullptr;
  REQUIRE(ht_selective(base, ext, "Date", nullptr, &b2, &e2) == HT_OK);
  CHECK(std::string(ht_corpus_tagset(b2)) == "S-minus-Date");
  CHECK(std::string(ht_corpus_tagset(e2)) == "S-only-Date");
  CHECK(ht_corpus_token_count(b2) == 150);
  ht_corpus* b3 = nullptr;
  ht_corpus* e3 = nullptr;
  CHECK(ht_selective(base, ext, "Age", nullptr, &b3, &e3) ==
        HT_ERR_VALIDATION);
  ht_corpus_free(b2);
  ht_corpus_free(e2);
  ht_corpus_free(base);
  ht_corpus_free(ext);
}

TEST_CASE("experiments write both reports") {
  TempDir tmp;
  fs::copy_file(data_dir() / "notes.conll", tmp.dir / "a.conll");
  fs::copy_file(data_dir() / "notes_coarse.conll",
                tmp.dir / "b.conll");
  {
    std::ofstream spec(tmp.dir / "exp.spec");
    spec << "kind = integration\nmodels = concat\nepochs = 2\n"
            "hierarchy = " << path_of(fs::absolute(data_dir() / "clinic.hier"))
         << "\ntrain = a, b\ntest = b\n"
            "[dataset]\nname = a\ntagset = T2\ntrain = a.conll\n"
            "[dataset]\nname = b\ntagset = T1\ntrain = b.conll\n"
            "test = b.conll\n";
  }
  int failed = -1;
  std::size_t messages = 0;
  const auto out_dir = path_of(tmp.dir / "out");
  INFO(ht_last_error());
  REQUIRE(ht_experiment_run(
              path_of(tmp.dir / "exp.spec").c_str(), out_dir.c_str(), 1,
              [](const char*, void* user) { ++*static_cast<std::size_t*>(user); },
              &messages, &failed) == HT_OK);
  CHECK(failed == 0);
  CHECK(messages == 1);
  CHECK(fs::exists(tmp.dir / "out" / "report.csv"));
  CHECK(fs::exists(tmp.dir / "out" / "report.md"));

  {
    std::ofstream spec(tmp.dir / "bad.spec");
    spec << "models = nonsense\n";
  }
  CHECK(ht_experiment_run(path_of(tmp.dir / "bad.spec").c_str(),
                          out_dir.c_str(), 1, nullptr, nullptr,
                          &failed) == HT_ERR_VALIDATION);
}
