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

#ifndef HIERTAG_FEATURES_HPP_
#define HIERTAG_FEATURES_HPP_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace hiertag {

// Sparse feature activations of one token: strictly increasing ids with
// parallel values.
struct FeatureVector {
  std::vector<std::uint32_t> indices;
  std::vector<double> values;

  bool operator==(const FeatureVector&) const = default;
};

using FeatureSequence = std::vector<FeatureVector>;

// Word shape: upper -> X, lower -> x, digit -> d, other characters kept.
std::string word_shape(std::string_view token);

// Feature strings for position i: token identity, shape, prefixes and
// suffixes of length 1-3 and a digit flag for every offset in
// [-radius, radius]. Offsets beyond the sequence yield `w-1=<BOS>` style
// boundary features only.
std::vector<std::string> feature_strings(std::span<const std::string> tokens,
                                         std::size_t i, int radius = 2);

class FeatureVocabulary {
 public:
  static constexpr std::uint32_t kUnk = 0;

  FeatureVocabulary();
  static FeatureVocabulary from_strings(std::vector<std::string> strings);

  // Adds the feature while unfrozen; afterwards behaves like lookup().
  std::uint32_t intern(std::string_view feature);
  std::uint32_t lookup(std::string_view feature) const;
  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }
  std::size_t size() const { return strings_.size(); }
  const std::vector<std::string>& strings() const { return strings_; }

 private:
  std::vector<std::string> strings_;
  std::unordered_map<std::string, std::uint32_t> ids_;
  bool frozen_ = false;
};

FeatureVector extract_features(std::span<const std::string> tokens,
                               std::size_t i, FeatureVocabulary& vocab,
                               int radius = 2);
FeatureSequence featurize(std::span<const std::string> tokens,
                          FeatureVocabulary& vocab, int radius = 2);
// Frozen lookups: unseen features map to FeatureVocabulary::kUnk.
FeatureVector extract_features(std::span<const std::string> tokens,
                               std::size_t i, const FeatureVocabulary& vocab,
                               int radius = 2);
FeatureSequence featurize(std::span<const std::string> tokens,
                          const FeatureVocabulary& vocab, int radius = 2);

enum class EmissionKind : std::uint8_t { kLinear = 1, kShared = 2 };

// Maps a feature sequence to an emission score matrix for one output head.
// Parameters live in one flat vector so optimizers and serializers can treat
// every implementation alike.
class EmissionModel {
 public:
  virtual ~EmissionModel() = default;

  virtual EmissionKind kind() const = 0;
  virtual std::size_t num_features() const = 0;
  virtual std::size_t num_heads() const = 0;
  virtual std::size_t num_tags(std::size_t head) const = 0;

  // out is seq.size() x num_tags(head), row-major.
  virtual void score(std::span<const FeatureVector> seq, std::size_t head,
                     std::span<double> out) const = 0;
  // Adds d loss / d parameters into grad given d loss / d emissions.
  virtual void backprop(std::span<const FeatureVector> seq, std::size_t head,
                        std::span<const double> d_emissions,
                        std::span<double> grad) const = 0;

  virtual std::span<double> parameters() = 0;
  virtual std::span<const double> parameters() const = 0;
  // [begin, end) ranges of parameters() that the head reads.
  virtual std::vector<std::pair<std::size_t, std::size_t>> head_parameters(
      std::size_t head) const = 0;
  virtual std::unique_ptr<EmissionModel> clone() const = 0;
};

// scores = weights . f + bias. Weights are stored feature-major:
// weight(tag, id) = parameters()[id * num_tags + tag], then the bias.
class LinearEmissionModel final : public EmissionModel {
 public:
  LinearEmissionModel(std::size_t num_features, std::size_t num_tags);

  EmissionKind kind() const override { return EmissionKind::kLinear; }
  std::size_t num_features() const override { return num_features_; }
  std::size_t num_heads() const override { return 1; }
  std::size_t num_tags(std::size_t head) const override;

  std::vector<double> score_linear(const FeatureVector& f) const;
  double& weight(std::size_t tag, std::size_t feature) {
    return params_[feature * num_tags_ + tag];
  }
  double& bias(std::size_t tag) {
    return params_[num_features_ * num_tags_ + tag];
  }

  void score(std::span<const FeatureVector> seq, std::size_t head,
             std::span<double> out) const override;
  void backprop(std::span<const FeatureVector> seq, std::size_t head,
                std::span<const double> d_emissions,
                std::span<double> grad) const override;

  std::span<double> parameters() override { return params_; }
  std::span<const double> parameters() const override { return params_; }
  std::vector<std::pair<std::size_t, std::size_t>> head_parameters(
      std::size_t head) const override;
  std::unique_ptr<EmissionModel> clone() const override {
    return std::make_unique<LinearEmissionModel>(*this);
  }

 private:
  std::size_t num_features_;
  std::size_t num_tags_;
  std::vector<double> params_;
};

// scores = head_weights . tanh(shared_weights . f + shared_bias) + head_bias.
// Layout: shared weights (feature-major, num_features x hidden), shared bias,
// then per head its weights (tag-major, tags x hidden) and bias.
class SharedEmissionModel final : public EmissionModel {
 public:
  SharedEmissionModel(std::size_t num_features, std::size_t hidden_dim,
                      std::vector<std::size_t> head_sizes);

  // Uniform(-scale, scale) weights from a seeded generator, zero biases.
  void initialize(std::uint64_t seed, double scale);

  EmissionKind kind() const override { return EmissionKind::kShared; }
  std::size_t num_features() const override { return num_features_; }
  std::size_t num_heads() const override { return head_sizes_.size(); }
  std::size_t num_tags(std::size_t head) const override;
  std::size_t hidden_dim() const { return hidden_; }
  const std::vector<std::size_t>& head_sizes() const { return head_sizes_; }

  std::vector<double> hidden(const FeatureVector& f) const;
  std::vector<double> score_shared(const FeatureVector& f,
                                   std::size_t head) const;

  double& shared_weight(std::size_t unit, std::size_t feature) {
    return params_[feature * hidden_ + unit];
  }
  double& shared_bias(std::size_t unit) {
    return params_[num_features_ * hidden_ + unit];
  }
  double& head_weight(std::size_t head, std::size_t tag, std::size_t unit) {
    return params_[head_offset(head) + tag * hidden_ + unit];
  }
  double& head_bias(std::size_t head, std::size_t tag) {
    return params_[head_offset(head) + head_sizes_[head] * hidden_ + tag];
  }
  // [begin, end) of one head's block inside parameters().
  std::pair<std::size_t, std::size_t> head_range(std::size_t head) const;

  void score(std::span<const FeatureVector> seq, std::size_t head,
             std::span<double> out) const override;
  void backprop(std::span<const FeatureVector> seq, std::size_t head,
                std::span<const double> d_emissions,
                std::span<double> grad) const override;

  std::span<double> parameters() override { return params_; }
  std::span<const double> parameters() const override { return params_; }
  std::vector<std::pair<std::size_t, std::size_t>> head_parameters(
      std::size_t head) const override;
  std::unique_ptr<EmissionModel> clone() const override {
    return std::make_unique<SharedEmissionModel>(*this);
  }

 private:
  std::size_t head_offset(std::size_t head) const;
  void check_head(std::size_t head) const;

  std::size_t num_features_;
  std::size_t hidden_;
  std::vector<std::size_t> head_sizes_;
  std::vector<std::size_t> head_offsets_;
  std::vector<double> params_;
};

}  // namespace hiertag

#endif  // HIERTAG_FEATURES_HPP_
