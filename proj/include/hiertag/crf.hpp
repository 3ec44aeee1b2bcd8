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

#ifndef HIERTAG_CRF_HPP_
#define HIERTAG_CRF_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace hiertag::crf {

// Log-potentials of one linear-chain lattice. Row-major storage:
// emission(i, y) = emissions[i * num_tags + y] and
// transition(from, to) = transitions[from * num_tags + to].
struct PotentialTable {
  std::size_t length = 0;
  std::size_t num_tags = 0;
  std::vector<double> emissions;
  std::vector<double> transitions;
  std::vector<double> start;
  std::vector<double> stop;

  static PotentialTable zeros(std::size_t length, std::size_t num_tags);

  double& emission(std::size_t i, std::size_t y) {
    return emissions[i * num_tags + y];
  }
  double emission(std::size_t i, std::size_t y) const {
    return emissions[i * num_tags + y];
  }
  double& transition(std::size_t from, std::size_t to) {
    return transitions[from * num_tags + to];
  }
  double transition(std::size_t from, std::size_t to) const {
    return transitions[from * num_tags + to];
  }

  // Throws Error(kInvalidArgument) on shape mismatch or non-finite scores.
  void validate() const;
};

// Allowed tags per position.
class LatticeMask {
 public:
  LatticeMask() = default;
  static LatticeMask full(std::size_t length, std::size_t num_tags);
  // Every set must be non-empty with indices below num_tags.
  static LatticeMask from_sets(
      std::size_t num_tags,
      const std::vector<std::vector<std::size_t>>& allowed);
  static LatticeMask singleton(std::size_t num_tags,
                               std::span<const std::size_t> path);

  std::size_t length() const { return length_; }
  std::size_t num_tags() const { return num_tags_; }
  bool allowed(std::size_t i, std::size_t y) const {
    return bits_[i * num_tags_ + y] != 0;
  }
  void validate_for(const PotentialTable& p) const;

 private:
  std::size_t length_ = 0;
  std::size_t num_tags_ = 0;
  std::vector<std::uint8_t> bits_;
};

// Same shapes as PotentialTable.
struct LatticeGradients {
  std::vector<double> d_emissions;
  std::vector<double> d_transitions;
  std::vector<double> d_start;
  std::vector<double> d_stop;
};

struct Marginals {
  std::size_t length = 0;
  std::size_t num_tags = 0;
  double log_z = 0.0;
  // unary[i * num_tags + y] = P(y_i = y).
  std::vector<double> unary;
  // pairwise[(i * num_tags + a) * num_tags + b] = P(y_i = a, y_{i+1} = b),
  // for i < length - 1.
  std::vector<double> pairwise;

  double at(std::size_t i, std::size_t y) const {
    return unary[i * num_tags + y];
  }
};

struct LossAndGrad {
  double loss = 0.0;
  LatticeGradients grad;
};

struct ViterbiResult {
  std::vector<std::size_t> path;
  double score = 0.0;
};

double path_score(const PotentialTable& p, std::span<const std::size_t> path);

// log Z by the forward recursion.
double log_partition(const PotentialTable& p);
// log Z by the backward recursion; agrees with log_partition.
double log_partition_backward(const PotentialTable& p,
                              const LatticeMask* mask = nullptr);
// log of the summed scores of paths that stay inside the mask.
double constrained_log_partition(const PotentialTable& p,
                                 const LatticeMask& mask);

Marginals marginals(const PotentialTable& p, const LatticeMask* mask = nullptr);

// loss = log Z - log Z_mask; gradients w.r.t. every potential equal the
// unconstrained minus the constrained expected indicator counts.
LossAndGrad loss_and_grad(const PotentialTable& p, const LatticeMask& mask);

// Ties resolve to the lower tag index.
ViterbiResult viterbi(const PotentialTable& p);

// score(path) - log Z.
double sequence_log_prob(const PotentialTable& p,
                         std::span<const std::size_t> path);

}  // namespace hiertag::crf

#endif  // HIERTAG_CRF_HPP_
