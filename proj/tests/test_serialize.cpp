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

#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>

#include "hiertag/data.hpp"
#include "hiertag/error.hpp"
#include "hiertag/models.hpp"
#include "oracles.hpp"

using hiertag::ConsolidationMethod;
using hiertag::ModelKind;
using hiertag::TrainedModel;
using hiertag::TrainingDataset;

namespace {

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Replaces the trailing checksum so that only the edited field is wrong.
std::string reseal(std::string bytes) {
  const std::size_t body = bytes.size() - 8;
  std::uint64_t h = fnv1a(std::string_view(bytes).substr(0, body));
  for (int k = 0; k < 8; ++k) {
    bytes[body + k] = static_cast<char>((h >> (8 * k)) & 0xff);
  }
  return bytes;
}

std::optional<hiertag::ErrorCode> code_of(const std::string& bytes) {
  try {
    hiertag::deserialize_models(bytes);
  } catch (const hiertag::Error& e) {
    return e.code();
  }
  return std::nullopt;
}

struct Fixture {
  hiertag::ExtendedHierarchy eh;
  std::vector<TrainingDataset> datasets;
  hiertag::Corpus test;
  hiertag::TrainConfig cfg;

  Fixture() {
    eh = hiertag::ExtendedHierarchy::extend(
        hiertag::TagHierarchy::load(oracle::data_dir() / "clinic.hier"));
    datasets.push_back(
        {hiertag::read_column_file(oracle::data_dir() / "notes.conll", "T2"),
         std::nullopt});
    datasets.push_back(
        {hiertag::read_column_file(oracle::data_dir() / "notes_coarse.conll",
                                   "T1"),
         std::nullopt});
    cfg.max_epochs = 5;
    cfg.patience = 0;
    cfg.hidden_dim = 6;
    const std::vector<std::string> words{
        "John", "Adams", "Mercy", "Boston", "Elm", "93", "12/05", "was",
        "admitted", "to", "on", "aged", "Zyx", ".", "in"};
    hiertag::Rng rng(77);
    for (int d = 0; d < 20; ++d) {
      hiertag::LabeledSequence seq;
      seq.doc_id = "t" + std::to_string(d);
      const std::size_t n = 1 + rng.below(12);
      for (std::size_t i = 0; i < n; ++i) {
        seq.tokens.push_back({words[rng.below(words.size())], ""});
      }
      test.sequences.push_back(std::move(seq));
    }
    test.tagset_name = "T3";
  }
};

}  // namespace

TEST_CASE("round trip preserves predictions") {
  Fixture f;
  for (auto kind : {ModelKind::kHier, ModelKind::kConcat, ModelKind::kIndep,
                    ModelKind::kMtl}) {
    CAPTURE(hiertag::to_string(kind));
    const auto models = hiertag::train_models(kind, f.datasets, f.eh, f.cfg);
    const auto bytes = hiertag::serialize_models(models);
    const auto loaded = hiertag::deserialize_models(bytes);
    REQUIRE(loaded.size() == models.size());
    CHECK(hiertag::serialize_models(loaded) == bytes);
    for (std::size_t k = 0; k < models.size(); ++k) {
      CHECK(loaded[k].kind == kind);
      CHECK(loaded[k].heads.size() == models[k].heads.size());
      CHECK(loaded[k].config.seed == f.cfg.seed);
      CHECK(loaded[k].config.max_epochs == f.cfg.max_epochs);
      CHECK(loaded[k].config.learning_rate == f.cfg.learning_rate);
      CHECK(loaded[k].config.l2 == f.cfg.l2);
      CHECK(loaded[k].epochs_run == models[k].epochs_run);
      CHECK(loaded[k].final_loss == models[k].final_loss);
      CHECK(loaded[k].vocab.strings() == models[k].vocab.strings());
      CHECK(loaded[k].hierarchy.serialize() == models[k].hierarchy.serialize());
    }
    for (auto method : {ConsolidationMethod::kRandom,
                        ConsolidationMethod::kMaxMarginal}) {
      const auto a = hiertag::tag_corpus(models, f.test, "T3", method, 9);
      const auto b = hiertag::tag_corpus(loaded, f.test, "T3", method, 9);
      CHECK(a.predictions == b.predictions);
      CHECK(a.collisions == b.collisions);
    }
  }
}

TEST_CASE("files round trip") {
  Fixture f;
  const auto dir = std::filesystem::temp_directory_path() / "hiertag_ser_test";
  std::filesystem::create_directories(dir);
  const auto models =
      hiertag::train_models(ModelKind::kIndep, f.datasets, f.eh, f.cfg);
  hiertag::save_models(models, dir / "indep.model");
  CHECK(hiertag::load_models(dir / "indep.model").size() == 2);
  CHECK_THROWS_AS(hiertag::load_model(dir / "indep.model"), hiertag::Error);
  hiertag::save_model(models[0], dir / "one.model");
  const auto one = hiertag::load_model(dir / "one.model");
  CHECK(one.heads[0].name == "T2");
  CHECK_THROWS_AS(hiertag::load_models(dir / "absent.model"), hiertag::Error);
  CHECK_THROWS_AS(hiertag::save_model(one, dir / "no" / "such" / "x.model"),
                  hiertag::Error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("corrupt files are rejected") {
  Fixture f;
  const auto models =
      hiertag::train_models(ModelKind::kMtl, f.datasets, f.eh, f.cfg);
  const auto bytes = hiertag::serialize_models(models);
  REQUIRE(bytes.substr(0, 8) == std::string("HTMODEL\0", 8));

  // Every proper prefix fails cleanly.
  for (std::size_t len = 0; len < bytes.size();
       len += (len < 64 ? 1 : 97)) {
    CHECK(code_of(bytes.substr(0, len)) == hiertag::ErrorCode::kCorrupt);
  }
  CHECK(code_of(bytes.substr(0, bytes.size() - 1)) ==
        hiertag::ErrorCode::kCorrupt);

  auto flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x40;
  CHECK(code_of(flipped) == hiertag::ErrorCode::kCorrupt);

  auto magic = bytes;
  magic[0] = 'X';
  CHECK(code_of(reseal(magic)) == hiertag::ErrorCode::kCorrupt);

  auto version = bytes;
  version[8] = 2;
  CHECK(code_of(reseal(version)) == hiertag::ErrorCode::kVersion);

  // A huge member count with a valid checksum must not allocate wildly.
  auto count = bytes;
  count[12] = count[13] = count[14] = count[15] = '\xff';
  CHECK(code_of(reseal(count)) == hiertag::ErrorCode::kCorrupt);

  CHECK(code_of(bytes + "x") == hiertag::ErrorCode::kCorrupt);
  CHECK_FALSE(code_of(bytes).has_value());
}

TEST_CASE("identical runs write identical files") {
  Fixture f;
  for (auto kind : {ModelKind::kHier, ModelKind::kConcat, ModelKind::kIndep,
                    ModelKind::kMtl}) {
    const auto a = hiertag::serialize_models(
        hiertag::train_models(kind, f.datasets, f.eh, f.cfg));
    const auto b = hiertag::serialize_models(
        hiertag::train_models(kind, f.datasets, f.eh, f.cfg));
    CHECK(a == b);
  }
}
