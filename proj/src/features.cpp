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

#include "hiertag/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hiertag/error.hpp"
#include "hiertag/random.hpp"

namespace hiertag {

namespace {

// Splits UTF-8 text into code point byte strings. Invalid lead bytes are
// treated as single-byte characters.
std::vector<std::string_view> code_points(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = 1;
    if (c >= 0xF0) {
      len = 4;
    } else if (c >= 0xE0) {
      len = 3;
    } else if (c >= 0xC0) {
      len = 2;
    }
    len = std::min(len, s.size() - i);
    out.push_back(s.substr(i, len));
    i += len;
  }
  return out;
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::string offset_label(int offset) {
  if (offset == 0) return "0";
  return (offset > 0 ? "+" : "") + std::to_string(offset);
}

}  // namespace

std::string word_shape(std::string_view token) {
  std::string out;
  for (auto cp : code_points(token)) {
    if (cp.size() > 1) {
      out += 'u';
      continue;
    }
    const char c = cp[0];
    if (c >= 'A' && c <= 'Z') {
      out += 'X';
    } else if (c >= 'a' && c <= 'z') {
      out += 'x';
    } else if (c >= '0' && c <= '9') {
      out += 'd';
    } else {
      out += c;
    }
  }
  return out;
}

std::vector<std::string> feature_strings(std::span<const std::string> tokens,
                                         std::size_t i, int radius) {
  if (i >= tokens.size()) {
    throw Error(ErrorCode::kInvalidArgument, "feature position out of range");
  }
  std::vector<std::string> out;
  for (int offset = -radius; offset <= radius; ++offset) {
    const std::string label = offset_label(offset);
    const auto pos = static_cast<std::ptrdiff_t>(i) + offset;
    if (pos < 0) {
      out.push_back("w" + label + "=<BOS>");
      continue;
    }
    if (pos >= static_cast<std::ptrdiff_t>(tokens.size())) {
      out.push_back("w" + label + "=<EOS>");
      continue;
    }
    const std::string& tok = tokens[static_cast<std::size_t>(pos)];
    const std::string lower = lowercase(tok);
    out.push_back("w" + label + "=" + lower);
    out.push_back("shape" + label + "=" + word_shape(tok));

    const auto cps = code_points(lower);
    const std::string affix_suffix = offset == 0 ? "" : "@" + label;
    for (std::size_t k = 1; k <= 3 && k <= cps.size(); ++k) {
      std::string prefix, suffix;
      for (std::size_t j = 0; j < k; ++j) {
        prefix += cps[j];
        suffix += cps[cps.size() - k + j];
      }
      out.push_back("pre" + std::to_string(k) + affix_suffix + "=" + prefix);
      out.push_back("suf" + std::to_string(k) + affix_suffix + "=" + suffix);
    }
    if (std::any_of(tok.begin(), tok.end(),
                    [](char c) { return c >= '0' && c <= '9'; })) {
      out.push_back("digit" + label);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// FeatureVocabulary

FeatureVocabulary::FeatureVocabulary() {
  strings_.push_back("<UNK>");
  ids_.emplace("<UNK>", kUnk);
}

FeatureVocabulary FeatureVocabulary::from_strings(
    std::vector<std::string> strings) {
  if (strings.empty() || strings[0] != "<UNK>") {
    throw Error(ErrorCode::kCorrupt, "vocabulary must start with <UNK>");
  }
  FeatureVocabulary v;
  v.strings_ = std::move(strings);
  v.ids_.clear();
  for (std::size_t i = 0; i < v.strings_.size(); ++i) {
    if (!v.ids_.emplace(v.strings_[i], static_cast<std::uint32_t>(i)).second) {
      throw Error(ErrorCode::kCorrupt,
                  "duplicate vocabulary entry '" + v.strings_[i] + "'");
    }
  }
  v.frozen_ = true;
  return v;
}

std::uint32_t FeatureVocabulary::intern(std::string_view feature) {
  if (frozen_) return lookup(feature);
  auto [it, inserted] = ids_.emplace(
      std::string(feature), static_cast<std::uint32_t>(strings_.size()));
  if (inserted) strings_.emplace_back(feature);
  return it->second;
}

std::uint32_t FeatureVocabulary::lookup(std::string_view feature) const {
  auto it = ids_.find(std::string(feature));
  return it == ids_.end() ? kUnk : it->second;
}

namespace {

FeatureVector to_vector(std::vector<std::uint32_t> ids) {
  std::sort(ids.begin(), ids.end());
  FeatureVector fv;
  for (std::uint32_t id : ids) {
    if (!fv.indices.empty() && fv.indices.back() == id) {
      fv.values.back() += 1.0;
    } else {
      fv.indices.push_back(id);
      fv.values.push_back(1.0);
    }
  }
  return fv;
}

}  // namespace

FeatureVector extract_features(std::span<const std::string> tokens,
                               std::size_t i, FeatureVocabulary& vocab,
                               int radius) {
  std::vector<std::uint32_t> ids;
  for (const auto& s : feature_strings(tokens, i, radius)) {
    ids.push_back(vocab.intern(s));
  }
  return to_vector(std::move(ids));
}

FeatureSequence featurize(std::span<const std::string> tokens,
                          FeatureVocabulary& vocab, int radius) {
  FeatureSequence seq;
  seq.reserve(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    seq.push_back(extract_features(tokens, i, vocab, radius));
  }
  return seq;
}


FeatureVector extract_features(std::span<const std::string> tokens,
                               std::size_t i, const FeatureVocabulary& vocab,
                               int radius) {
  std::vector<std::uint32_t> ids;
  for (const auto& s : feature_strings(tokens, i, radius)) {
    ids.push_back(vocab.lookup(s));
  }
  return to_vector(std::move(ids));
}

FeatureSequence featurize(std::span<const std::string> tokens,
                          const FeatureVocabulary& vocab, int radius) {
  FeatureSequence seq;
  seq.reserve(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    seq.push_back(extract_features(tokens, i, vocab, radius));
  }
  return seq;
}

// ---------------------------------------------------------------------------
// LinearEmissionModel

LinearEmissionModel::LinearEmissionModel(std::size_t num_features,
                                         std::size_t num_tags)
    : num_features_(num_features),
      num_tags_(num_tags),
      params_(num_features * num_tags + num_tags, 0.0) {
  if (num_tags == 0) {
    throw Error(ErrorCode::kInvalidArgument, "emission model needs tags");
  }
}

std::vector<std::pair<std::size_t, std::size_t>>
LinearEmissionModel::head_parameters(std::size_t head) const {
  num_tags(head);
  return {{0, params_.size()}};
}

std::size_t LinearEmissionModel::num_tags(std::size_t head) const {
  if (head != 0) throw Error(ErrorCode::kInvalidArgument, "unknown head");
  return num_tags_;
}

std::vector<double> LinearEmissionModel::score_linear(
    const FeatureVector& f) const {
  std::vector<double> row(params_.end() - static_cast<std::ptrdiff_t>(num_tags_),
                          params_.end());
  for (std::size_t k = 0; k < f.indices.size(); ++k) {
    const std::size_t id = f.indices[k];
    if (id >= num_features_) {
      throw Error(ErrorCode::kInvalidArgument, "feature id out of bounds");
    }
    const double v = f.values[k];
    const double* w = &params_[id * num_tags_];
    for (std::size_t y = 0; y < num_tags_; ++y) row[y] += v * w[y];
  }
  return row;
}

void LinearEmissionModel::score(std::span<const FeatureVector> seq,
                                std::size_t head, std::span<double> out) const {
  if (out.size() != seq.size() * num_tags(head)) {
    throw Error(ErrorCode::kInvalidArgument, "emission buffer shape mismatch");
  }
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const auto row = score_linear(seq[i]);
    std::copy(row.begin(), row.end(), out.begin() + i * num_tags_);
  }
}

void LinearEmissionModel::backprop(std::span<const FeatureVector> seq,
                                   std::size_t head,
                                   std::span<const double> d_emissions,
                                   std::span<double> grad) const {
  if (d_emissions.size() != seq.size() * num_tags(head) ||
      grad.size() != params_.size()) {
    throw Error(ErrorCode::kInvalidArgument, "gradient shape mismatch");
  }
  double* d_bias = &grad[num_features_ * num_tags_];
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const double* d = &d_emissions[i * num_tags_];
    for (std::size_t y = 0; y < num_tags_; ++y) d_bias[y] += d[y];
    const auto& f = seq[i];
    for (std::size_t k = 0; k < f.indices.size(); ++k) {
      const std::size_t id = f.indices[k];
      if (id >= num_features_) {
        throw Error(ErrorCode::kInvalidArgument, "feature id out of bounds");
      }
      double* g = &grad[id * num_tags_];
      const double v = f.values[k];
      for (std::size_t y = 0; y < num_tags_; ++y) g[y] += v * d[y];
    }
  }
}

// ---------------------------------------------------------------------------
// SharedEmissionModel

SharedEmissionModel::SharedEmissionModel(std::size_t num_features,
                                         std::size_t hidden_dim,
                                         std::vector<std::size_t> head_sizes)
    : num_features_(num_features),
      hidden_(hidden_dim),
      head_sizes_(std::move(head_sizes)) {
  if (hidden_ == 0) {
    throw Error(ErrorCode::kInvalidArgument, "hidden_dim must be >= 1");
  }
  if (head_sizes_.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "shared model needs a head");
  }
  std::size_t offset = num_features_ * hidden_ + hidden_;
  for (std::size_t y : head_sizes_) {
    if (y == 0) throw Error(ErrorCode::kInvalidArgument, "empty head");
    head_offsets_.push_back(offset);
    offset += y * hidden_ + y;
  }
  params_.assign(offset, 0.0);
}

void SharedEmissionModel::initialize(std::uint64_t seed, double scale) {
  Rng rng(seed);
  const std::size_t shared_end = num_features_ * hidden_;
  for (std::size_t k = 0; k < shared_end; ++k) {
    params_[k] = rng.uniform(-scale, scale);
  }
  for (std::size_t h = 0; h < head_sizes_.size(); ++h) {
    for (std::size_t k = 0; k < head_sizes_[h] * hidden_; ++k) {
      params_[head_offsets_[h] + k] = rng.uniform(-scale, scale);
    }
  }
}

void SharedEmissionModel::check_head(std::size_t head) const {
  if (head >= head_sizes_.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "unknown head " + std::to_string(head));
  }
}

std::size_t SharedEmissionModel::num_tags(std::size_t head) const {
  check_head(head);
  return head_sizes_[head];
}

std::size_t SharedEmissionModel::head_offset(std::size_t head) const {
  check_head(head);
  return head_offsets_[head];
}

std::pair<std::size_t, std::size_t> SharedEmissionModel::head_range(
    std::size_t head) const {
  const std::size_t begin = head_offset(head);
  return {begin, begin + head_sizes_[head] * (hidden_ + 1)};
}

std::vector<std::pair<std::size_t, std::size_t>>
SharedEmissionModel::head_parameters(std::size_t head) const {
  return {{0, num_features_ * hidden_ + hidden_}, head_range(head)};
}

std::vector<double> SharedEmissionModel::hidden(const FeatureVector& f) const {
  std::vector<double> h(params_.begin() +
                            static_cast<std::ptrdiff_t>(num_features_ * hidden_),
                        params_.begin() + static_cast<std::ptrdiff_t>(
                                              num_features_ * hidden_ + hidden_));
  for (std::size_t k = 0; k < f.indices.size(); ++k) {
    const std::size_t id = f.indices[k];
    if (id >= num_features_) {
      throw Error(ErrorCode::kInvalidArgument, "feature id out of bounds");
    }
    const double v = f.values[k];
    const double* w = &params_[id * hidden_];
    for (std::size_t u = 0; u < hidden_; ++u) h[u] += v * w[u];
  }
  for (auto& x : h) x = std::tanh(x);
  return h;
}

std::vector<double> SharedEmissionModel::score_shared(const FeatureVector& f,
                                                      std::size_t head) const {
  const std::size_t offset = head_offset(head);
  const std::size_t Y = head_sizes_[head];
  const auto h = hidden(f);
  std::vector<double> row(Y);
  const double* bias = &params_[offset + Y * hidden_];
  for (std::size_t y = 0; y < Y; ++y) {
    const double* w = &params_[offset + y * hidden_];
    row[y] = bias[y] + std::inner_product(h.begin(), h.end(), w, 0.0);
  }
  return row;
}

void SharedEmissionModel::score(std::span<const FeatureVector> seq,
                                std::size_t head, std::span<double> out) const {
  const std::size_t Y = num_tags(head);
  if (out.size() != seq.size() * Y) {
    throw Error(ErrorCode::kInvalidArgument, "emission buffer shape mismatch");
  }
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const auto row = score_shared(seq[i], head);
    std::copy(row.begin(), row.end(), out.begin() + i * Y);
  }
}

void SharedEmissionModel::backprop(std::span<const FeatureVector> seq,
                                   std::size_t head,
                                   std::span<const double> d_emissions,
                                   std::span<double> grad) const {
  const std::size_t Y = num_tags(head);
  if (d_emissions.size() != seq.size() * Y || grad.size() != params_.size()) {
    throw Error(ErrorCode::kInvalidArgument, "gradient shape mismatch");
  }
  const std::size_t offset = head_offsets_[head];
  const std::size_t H = hidden_;
  double* d_shared_bias = &grad[num_features_ * H];
  std::vector<double> d_hidden(H);
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const auto h = hidden(seq[i]);
    const double* d = &d_emissions[i * Y];
    std::fill(d_hidden.begin(), d_hidden.end(), 0.0);
    for (std::size_t y = 0; y < Y; ++y) {
      if (d[y] == 0.0) continue;
      const double* w = &params_[offset + y * H];
      double* gw = &grad[offset + y * H];
      for (std::size_t u = 0; u < H; ++u) {
        gw[u] += d[y] * h[u];
        d_hidden[u] += d[y] * w[u];
      }
      grad[offset + Y * H + y] += d[y];
    }
    for (std::size_t u = 0; u < H; ++u) {
      d_hidden[u] *= 1.0 - h[u] * h[u];
      d_shared_bias[u] += d_hidden[u];
    }
    const auto& f = seq[i];
    for (std::size_t k = 0; k < f.indices.size(); ++k) {
      double* g = &grad[f.indices[k] * H];
      const double v = f.values[k];
      for (std::size_t u = 0; u < H; ++u) g[u] += v * d_hidden[u];
    }
  }
}

}  // namespace hiertag
