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

#ifndef HIERTAG_DATA_HPP_
#define HIERTAG_DATA_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hiertag/hierarchy.hpp"

namespace hiertag {

// Tag column value for unannotated tokens.
inline constexpr std::string_view kOtherLabel = "O";

struct Token {
  std::string text;
  // Empty for Other.
  TagId gold;

  bool is_other() const { return gold.empty(); }
  bool operator==(const Token&) const = default;
};

struct LabeledSequence {
  std::vector<Token> tokens;
  std::string doc_id;

  std::vector<std::string> texts() const;
  std::vector<TagId> golds() const;
  bool operator==(const LabeledSequence&) const = default;
};

enum class Split { kTrain, kDev, kTest };

struct Corpus {
  std::vector<LabeledSequence> sequences;
  std::string tagset_name;
  Split split = Split::kTrain;

  std::size_t token_count() const;
  bool operator==(const Corpus&) const = default;
};

// Two tab-separated columns (token, tag), "O" for Other, blank lines between
// documents. Throws Error(kParse) on malformed lines and on empty corpora.
Corpus parse_column_text(std::string_view text, const std::string& tagset_name,
                         Split split = Split::kTrain,
                         const std::string& doc_prefix = "doc");
Corpus read_column_file(const std::filesystem::path& path,
                        const std::string& tagset_name,
                        Split split = Split::kTrain);
std::string format_column_text(const Corpus& corpus);
void write_column_file(const Corpus& corpus, const std::filesystem::path& path);

// Distinct non-Other gold tags.
TagSet induce_tagset(const Corpus& corpus);
// Throws Error(kValidation) naming the first gold tag outside the tagset.
void check_corpus_tags(const Corpus& corpus, const TagSet& tagset);

struct SelectiveSplit {
  Corpus base;
  Corpus extending;
  TagSet base_tagset;
  TagSet extending_tagset;
};

// base' drops every tag in the removal set, extending' keeps only it. The
// removal set is Sem(tag) when a hierarchy is given and {tag} otherwise. Both
// corpora are renamed to "<base>-minus-<tag>" and "<ext>-only-<tag>".
SelectiveSplit make_selective(const Corpus& base, const TagSet& base_tagset,
                              const Corpus& extending,
                              const TagSet& extending_tagset, const TagId& tag,
                              const TagHierarchy* hierarchy);
// Copy of the hierarchy with the two reduced tagsets declared.
TagHierarchy with_selective_tagsets(const TagHierarchy& hierarchy,
                                    const SelectiveSplit& split);

// Splits raw text on whitespace; punctuation characters become tokens.
std::vector<std::string> tokenize(std::string_view text);

// Synthetic corpus generator.
struct SynthPool {
  std::string name;
  std::size_t size = 100;
  // capital | lower | date | number
  std::string style = "capital";
};

struct SynthType {
  TagId tag;
  std::vector<std::pair<std::string, double>> pools;
  std::vector<std::string> triggers;
  double trigger_prob = 0.0;
  double weight = 1.0;
};

struct SynthConfig {
  std::uint64_t seed = 1;
  // Pools drawn with the same lexicon seed hold the same words, so corpora
  // generated from different seeds share vocabulary.
  std::uint64_t lexicon_seed = 1;
  // Seeds the background vocabulary; 0 reuses lexicon_seed.
  std::uint64_t background_seed = 0;
  std::size_t docs = 10;
  std::size_t doc_length = 100;
  double entity_rate = 0.05;
  std::size_t background_size = 1000;
  std::string tagset_name = "synthetic";
  std::string doc_prefix = "synth";
  std::vector<SynthPool> pools;
  std::vector<SynthType> types;
};

// `key = value` lines plus
//   pool <name> size=<n> style=<capital|lower|date|number>
//   type <Tag> pools=<pool>[:<weight>],... [triggers=a,b] [trigger_prob=p]
//        [weight=w]
SynthConfig parse_synth_config(std::string_view text);
std::vector<std::string> synth_pool_words(std::uint64_t lexicon_seed,
                                          const SynthPool& pool);
Corpus synth_corpus(const SynthConfig& config);

}  // namespace hiertag

#endif  // HIERTAG_DATA_HPP_
