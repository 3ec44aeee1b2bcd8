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

#include "hiertag/data.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "hiertag/error.hpp"
#include "hiertag/random.hpp"
#include "text_util.hpp"

namespace hiertag {

namespace {

[[noreturn]] void parse_error(std::size_t line_no, const std::string& msg) {
  throw Error(ErrorCode::kParse,
              "line " + std::to_string(line_no) + ": " + msg);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

bool is_punct(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u < 0x80 && std::ispunct(u);
}

double parse_double(const std::string& s, const std::string& key) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kParse, "invalid number for '" + key + "': " + s);
  }
}

std::uint64_t parse_uint(const std::string& s, const std::string& key) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(s, &used);
    if (used != s.size() || s.front() == '-') throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kParse, "invalid integer for '" + key + "': " + s);
  }
}

std::vector<std::string> split_on(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t end = s.find(sep, start);
    out.emplace_back(s.substr(start, end - start));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return out;
}

}  // namespace

std::vector<std::string> LabeledSequence::texts() const {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.text);
  return out;
}

std::vector<TagId> LabeledSequence::golds() const {
  std::vector<TagId> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.gold);
  return out;
}

std::size_t Corpus::token_count() const {
  std::size_t n = 0;
  for (const auto& s : sequences) n += s.tokens.size();
  return n;
}

Corpus parse_column_text(std::string_view text, const std::string& tagset_name,
                         Split split, const std::string& doc_prefix) {
  Corpus corpus;
  corpus.tagset_name = tagset_name;
  corpus.split = split;
  LabeledSequence current;
  auto flush = [&] {
    if (current.tokens.empty()) return;
    current.doc_id = doc_prefix + std::to_string(corpus.sequences.size());
    corpus.sequences.push_back(std::move(current));
    current = LabeledSequence{};
  };

  const auto lines = internal::split_lines(text);
  for (std::size_t idx = 0; idx < lines.size(); ++idx) {
    const std::string_view line = lines[idx];
    if (internal::trim(line).empty()) {
      flush();
      continue;
    }
    const auto cols = split_on(line, '\t');
    if (cols.size() != 2) {
      parse_error(idx + 1, "expected 2 tab-separated columns, found " +
                               std::to_string(cols.size()));
    }
    if (cols[0].empty()) parse_error(idx + 1, "empty token");
    if (cols[1].empty()) parse_error(idx + 1, "empty tag");
    if (cols[1].find(' ') != std::string::npos) {
      parse_error(idx + 1, "tag contains whitespace");
    }
    Token tok;
    tok.text = cols[0];
    if (cols[1] != kOtherLabel) tok.gold = cols[1];
    current.tokens.push_back(std::move(tok));
  }
  flush();
  if (corpus.sequences.empty()) {
    throw Error(ErrorCode::kParse, "empty corpus");
  }
  return corpus;
}

Corpus read_column_file(const std::filesystem::path& path,
                        const std::string& tagset_name, Split split) {
  const std::string text = internal::read_file(path);
  try {
    return parse_column_text(text, tagset_name, split,
                             path.stem().string() + ":");
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

std::string format_column_text(const Corpus& corpus) {
  std::string out;
  for (std::size_t d = 0; d < corpus.sequences.size(); ++d) {
    if (d > 0) out += '\n';
    for (const auto& tok : corpus.sequences[d].tokens) {
      out += tok.text;
      out += '\t';
      out += tok.is_other() ? std::string(kOtherLabel) : tok.gold;
      out += '\n';
    }
  }
  return out;
}

void write_column_file(const Corpus& corpus, const std::filesystem::path& path) {
  internal::write_file(path, format_column_text(corpus));
}

TagSet induce_tagset(const Corpus& corpus) {
  TagSet out;
  for (const auto& seq : corpus.sequences) {
    for (const auto& tok : seq.tokens) {
      if (!tok.is_other()) out.insert(tok.gold);
    }
  }
  return out;
}

void check_corpus_tags(const Corpus& corpus, const TagSet& tagset) {
  for (const auto& seq : corpus.sequences) {
    for (const auto& tok : seq.tokens) {
      if (!tok.is_other() && !tagset.count(tok.gold)) {
        throw Error(ErrorCode::kValidation,
                    "tag '" + tok.gold + "' in " + seq.doc_id +
                        " is not in tagset '" + corpus.tagset_name + "'");
      }
    }
  }
}

SelectiveSplit make_selective(const Corpus& base, const TagSet& base_tagset,
                              const Corpus& extending,
                              const TagSet& extending_tagset, const TagId& tag,
                              const TagHierarchy* hierarchy) {
  if (!base_tagset.count(tag)) {
    throw Error(ErrorCode::kValidation, "tag '" + tag +
                                            "' is not in base tagset '" +
                                            base.tagset_name + "'");
  }
  if (!extending_tagset.count(tag)) {
    throw Error(ErrorCode::kValidation, "tag '" + tag +
                                            "' is not in extending tagset '" +
                                            extending.tagset_name + "'");
  }
  const TagSet removal = hierarchy ? hierarchy->sem(tag) : TagSet{tag};

  SelectiveSplit out;
  out.base = base;
  out.base.tagset_name = base.tagset_name + "-minus-" + tag;
  for (auto& seq : out.base.sequences) {
    for (auto& tok : seq.tokens) {
      if (removal.count(tok.gold)) tok.gold.clear();
    }
  }
  out.extending = extending;
  out.extending.tagset_name = extending.tagset_name + "-only-" + tag;
  for (auto& seq : out.extending.sequences) {
    for (auto& tok : seq.tokens) {
      if (!removal.count(tok.gold)) tok.gold.clear();
    }
  }
  for (const auto& t : base_tagset) {
    if (!removal.count(t)) out.base_tagset.insert(t);
  }
  for (const auto& t : extending_tagset) {
    if (removal.count(t)) out.extending_tagset.insert(t);
  }
  if (out.base_tagset.empty()) {
    throw Error(ErrorCode::kValidation,
                "removing '" + tag + "' leaves tagset '" + base.tagset_name +
                    "' empty");
  }
  return out;
}

TagHierarchy with_selective_tagsets(const TagHierarchy& hierarchy,
                                    const SelectiveSplit& split) {
  TagHierarchy h = hierarchy;
  h.add_tagset(split.base.tagset_name, split.base_tagset);
  h.add_tagset(split.extending.tagset_name, split.extending_tagset);
  h.validate();
  return h;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (char c : text) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
        c == '\v') {
      flush();
    } else if (is_punct(c)) {
      flush();
      out.emplace_back(1, c);
    } else {
      cur += c;
    }
  }
  flush();
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic corpora

SynthConfig parse_synth_config(std::string_view text) {
  SynthConfig cfg;
  const auto lines = internal::split_lines(text);
  for (std::size_t idx = 0; idx < lines.size(); ++idx) {
    std::string_view line = lines[idx];
    if (auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = internal::trim(line);
    if (line.empty()) continue;
    const auto fields = internal::split_whitespace(line);

    if (fields[0] == "pool" || fields[0] == "type") {
      if (fields.size() < 2) parse_error(idx + 1, "missing name");
      std::vector<std::pair<std::string, std::string>> attrs;
      for (std::size_t k = 2; k < fields.size(); ++k) {
        const auto eq = fields[k].find('=');
        if (eq == std::string::npos) {
          parse_error(idx + 1, "expected key=value, got '" + fields[k] + "'");
        }
        attrs.emplace_back(fields[k].substr(0, eq), fields[k].substr(eq + 1));
      }
      if (fields[0] == "pool") {
        SynthPool pool;
        pool.name = fields[1];
        for (const auto& [k, v] : attrs) {
          if (k == "size") {
            pool.size = parse_uint(v, k);
          } else if (k == "style") {
            if (v != "capital" && v != "lower" && v != "date" && v != "number") {
              parse_error(idx + 1, "unknown pool style '" + v + "'");
            }
            pool.style = v;
          } else {
            parse_error(idx + 1, "unknown pool attribute '" + k + "'");
          }
        }
        cfg.pools.push_back(pool);
      } else {
        SynthType type;
        type.tag = fields[1];
        for (const auto& [k, v] : attrs) {
          if (k == "pools") {
            for (const auto& item : split_on(v, ',')) {
              const auto colon = item.find(':');
              if (colon == std::string::npos) {
                type.pools.emplace_back(item, 1.0);
              } else {
                type.pools.emplace_back(
                    item.substr(0, colon),
                    parse_double(item.substr(colon + 1), "pools"));
              }
            }
          } else if (k == "triggers") {
            type.triggers = split_on(v, ',');
          } else if (k == "trigger_prob") {
            type.trigger_prob = parse_double(v, k);
          } else if (k == "weight") {
            type.weight = parse_double(v, k);
          } else {
            parse_error(idx + 1, "unknown type attribute '" + k + "'");
          }
        }
        cfg.types.push_back(type);
      }
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      parse_error(idx + 1, "expected 'key = value'");
    }
    const std::string key(internal::trim(line.substr(0, eq)));
    const std::string value(internal::trim(line.substr(eq + 1)));
    if (key == "seed") {
      cfg.seed = parse_uint(value, key);
    } else if (key == "lexicon_seed") {
      cfg.lexicon_seed = parse_uint(value, key);
    } else if (key == "background_seed") {
      cfg.background_seed = parse_uint(value, key);
    } else if (key == "docs") {
      cfg.docs = parse_uint(value, key);
    } else if (key == "doc_length") {
      cfg.doc_length = parse_uint(value, key);
    } else if (key == "entity_rate") {
      cfg.entity_rate = parse_double(value, key);
    } else if (key == "background_size") {
      cfg.background_size = parse_uint(value, key);
    } else if (key == "tagset") {
      cfg.tagset_name = value;
    } else if (key == "doc_prefix") {
      cfg.doc_prefix = value;
    } else {
      parse_error(idx + 1, "unknown key '" + key + "'");
    }
  }
  return cfg;
}

std::vector<std::string> synth_pool_words(std::uint64_t lexicon_seed,
                                          const SynthPool& pool) {
  static const char* kSyllables[] = {"ba", "ke", "li", "mo", "ra", "su", "ton",
                                     "vel", "dor", "an", "mi", "ne", "ro", "sa",
                                     "ta", "lu", "ve", "ri", "go", "fa", "zen",
                                     "pol", "qui", "har"};
  constexpr std::size_t kNumSyllables = sizeof(kSyllables) / sizeof(*kSyllables);
  Rng rng(mix_seed(lexicon_seed, fnv1a(pool.name)));
  std::set<std::string> seen;
  std::vector<std::string> words;
  std::size_t attempts = 0;
  while (words.size() < pool.size) {
    if (++attempts > pool.size * 100 + 1000) {
      throw Error(ErrorCode::kValidation,
                  "pool '" + pool.name + "' is too large for its style");
    }
    std::string w;
    if (pool.style == "date") {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%02zu/%02zu/%04zu", rng.below(12) + 1,
                    rng.below(28) + 1, 1950 + rng.below(80));
      w = buf;
    } else if (pool.style == "number") {
      const std::size_t digits = 3 + rng.below(4);
      for (std::size_t k = 0; k < digits; ++k) {
        w += static_cast<char>('0' + rng.below(10));
      }
    } else {
      const std::size_t n = (pool.style == "lower" ? 1 + rng.below(3) : 2 + rng.below(2));
      for (std::size_t k = 0; k < n; ++k) {
        w += kSyllables[rng.below(kNumSyllables)];
      }
      if (pool.style == "capital") w[0] = static_cast<char>(w[0] - 'a' + 'A');
    }
    if (seen.insert(w).second) words.push_back(w);
  }
  return words;
}

Corpus synth_corpus(const SynthConfig& config) {
  auto check_rate = [](double r, const std::string& what) {
    if (!(r >= 0.0 && r <= 1.0)) {
      throw Error(ErrorCode::kValidation,
                  what + " must lie in [0, 1], got " + std::to_string(r));
    }
  };
  check_rate(config.entity_rate, "entity_rate");
  if (config.doc_length == 0 || config.docs == 0) {
    throw Error(ErrorCode::kValidation, "docs and doc_length must be >= 1");
  }

  std::map<std::string, std::vector<std::string>> pools;
  for (const auto& p : config.pools) {
    pools[p.name] = synth_pool_words(config.lexicon_seed, p);
  }
  const auto background = synth_pool_words(
      config.background_seed != 0 ? config.background_seed : config.lexicon_seed,
      SynthPool{"<background>", config.background_size,
                                     "lower"});

  double total_weight = 0.0, trigger_mass = 0.0;
  for (const auto& t : config.types) {
    check_rate(t.trigger_prob, "trigger_prob of " + t.tag);
    if (!(t.weight > 0.0)) {
      throw Error(ErrorCode::kValidation, "type weight must be positive");
    }
    if (t.pools.empty()) {
      throw Error(ErrorCode::kValidation, "type '" + t.tag + "' has no pools");
    }
    for (const auto& [name, w] : t.pools) {
      if (!pools.count(name)) {
        throw Error(ErrorCode::kValidation, "unknown pool '" + name + "'");
      }
      if (!(w > 0.0)) {
        throw Error(ErrorCode::kValidation, "pool weight must be positive");
      }
    }
    total_weight += t.weight;
    trigger_mass += t.weight * (t.triggers.empty() ? 0.0 : t.trigger_prob);
  }
  if (config.entity_rate > 0.0 && config.types.empty()) {
    throw Error(ErrorCode::kValidation, "entity_rate > 0 needs entity types");
  }
  // A trigger adds an untagged token in front of its entity; inflate the
  // per-slot entity probability so the tagged-token fraction matches.
  const double mean_trigger = total_weight > 0 ? trigger_mass / total_weight : 0;
  const double slot_rate =
      config.entity_rate / (1.0 - config.entity_rate * mean_trigger);
  check_rate(slot_rate, "effective entity rate");

  Rng rng(config.seed);
  auto pick_weighted = [&rng](const auto& items, auto weight_of) {
    double total = 0.0;
    for (const auto& it : items) total += weight_of(it);
    double x = rng.uniform() * total;
    for (const auto& it : items) {
      x -= weight_of(it);
      if (x < 0.0) return &it;
    }
    return &items.back();
  };

  Corpus corpus;
  corpus.tagset_name = config.tagset_name;
  for (std::size_t d = 0; d < config.docs; ++d) {
    LabeledSequence seq;
    seq.doc_id = config.doc_prefix + std::to_string(d);
    while (seq.tokens.size() < config.doc_length) {
      if (!config.types.empty() && rng.uniform() < slot_rate) {
        const SynthType& type = *pick_weighted(
            config.types, [](const SynthType& t) { return t.weight; });
        if (!type.triggers.empty() && rng.bernoulli(type.trigger_prob) &&
            seq.tokens.size() + 2 <= config.doc_length) {
          seq.tokens.push_back(
              {type.triggers[rng.below(type.triggers.size())], ""});
        }
        const auto& pool_name =
            pick_weighted(type.pools, [](const auto& p) { return p.second; })
                ->first;
        const auto& words = pools.at(pool_name);
        seq.tokens.push_back({words[rng.below(words.size())], type.tag});
      } else {
        seq.tokens.push_back({background[rng.below(background.size())], ""});
      }
    }
    corpus.sequences.push_back(std::move(seq));
  }
  return corpus;
}

}  // namespace hiertag
