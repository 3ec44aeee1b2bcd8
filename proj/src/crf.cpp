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

#include "hiertag/crf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "hiertag/error.hpp"

namespace hiertag::crf {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(std::span<const double> xs) {
  double m = kNegInf;
  for (double x : xs) m = std::max(m, x);
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

bool is_allowed(const LatticeMask* mask, std::size_t i, std::size_t y) {
  return mask == nullptr || mask->allowed(i, y);
}

// alpha[i * Y + y]: log-sum of prefix paths ending in y at position i.
double forward(const PotentialTable& p, const LatticeMask* mask,
               std::vector<double>& alpha) {
  const std::size_t n = p.length, Y = p.num_tags;
  alpha.assign(n * Y, kNegInf);
  for (std::size_t y = 0; y < Y; ++y) {
    if (is_allowed(mask, 0, y)) alpha[y] = p.start[y] + p.emission(0, y);
  }
  std::vector<double> terms(Y);
  for (std::size_t i = 1; i < n; ++i) {
    const double* prev = &alpha[(i - 1) * Y];
    for (std::size_t y = 0; y < Y; ++y) {
      if (!is_allowed(mask, i, y)) continue;
      for (std::size_t from = 0; from < Y; ++from) {
        terms[from] = prev[from] + p.transition(from, y);
      }
      alpha[i * Y + y] = log_sum_exp(terms) + p.emission(i, y);
    }
  }
  for (std::size_t y = 0; y < Y; ++y) {
    terms[y] = alpha[(n - 1) * Y + y] + p.stop[y];
  }
  return log_sum_exp(terms);
}

// beta[i * Y + y]: log-sum of suffix paths after position i given y_i = y.
double backward(const PotentialTable& p, const LatticeMask* mask,
                std::vector<double>& beta) {
  const std::size_t n = p.length, Y = p.num_tags;
  beta.assign(n * Y, kNegInf);
  for (std::size_t y = 0; y < Y; ++y) {
    if (is_allowed(mask, n - 1, y)) beta[(n - 1) * Y + y] = p.stop[y];
  }
  std::vector<double> terms(Y);
  for (std::size_t i = n - 1; i-- > 0;) {
    const double* next = &beta[(i + 1) * Y];
    for (std::size_t y = 0; y < Y; ++y) {
      if (!is_allowed(mask, i, y)) continue;
      for (std::size_t to = 0; to < Y; ++to) {
        terms[to] = p.transition(y, to) + p.emission(i + 1, to) + next[to];
      }
      beta[i * Y + y] = log_sum_exp(terms);
    }
  }
  for (std::size_t y = 0; y < Y; ++y) {
    terms[y] = p.start[y] + p.emission(0, y) + beta[y];
  }
  return log_sum_exp(terms);
}

double safe_exp(double x) { return x == kNegInf ? 0.0 : std::exp(x); }

}  // namespace

PotentialTable PotentialTable::zeros(std::size_t length, std::size_t num_tags) {
  PotentialTable p;
  p.length = length;
  p.num_tags = num_tags;
  p.emissions.assign(length * num_tags, 0.0);
  p.transitions.assign(num_tags * num_tags, 0.0);
  p.start.assign(num_tags, 0.0);
  p.stop.assign(num_tags, 0.0);
  return p;
}

void PotentialTable::validate() const {
  if (length == 0 || num_tags == 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "potential table needs length >= 1 and num_tags >= 1");
  }
  if (emissions.size() != length * num_tags ||
      transitions.size() != num_tags * num_tags || start.size() != num_tags ||
      stop.size() != num_tags) {
    throw Error(ErrorCode::kInvalidArgument, "potential table shape mismatch");
  }
  auto finite = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(),
                       [](double x) { return std::isfinite(x); });
  };
  if (!finite(emissions) || !finite(transitions) || !finite(start) ||
      !finite(stop)) {
    throw Error(ErrorCode::kInvalidArgument, "non-finite potential");
  }
}

LatticeMask LatticeMask::full(std::size_t length, std::size_t num_tags) {
  LatticeMask m;
  m.length_ = length;
  m.num_tags_ = num_tags;
  m.bits_.assign(length * num_tags, 1);
  return m;
}

LatticeMask LatticeMask::from_sets(
    std::size_t num_tags,
    const std::vector<std::vector<std::size_t>>& allowed) {
  LatticeMask m;
  m.length_ = allowed.size();
  m.num_tags_ = num_tags;
  m.bits_.assign(m.length_ * num_tags, 0);
  for (std::size_t i = 0; i < allowed.size(); ++i) {
    if (allowed[i].empty()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "empty allowed set at position " + std::to_string(i));
    }
    for (std::size_t y : allowed[i]) {
      if (y >= num_tags) {
        throw Error(ErrorCode::kInvalidArgument, "mask tag index out of range");
      }
      m.bits_[i * num_tags + y] = 1;
    }
  }
  return m;
}

LatticeMask LatticeMask::singleton(std::size_t num_tags,
                                   std::span<const std::size_t> path) {
  std::vector<std::vector<std::size_t>> sets;
  sets.reserve(path.size());
  for (std::size_t y : path) sets.push_back({y});
  return from_sets(num_tags, sets);
}

void LatticeMask::validate_for(const PotentialTable& p) const {
  if (length_ != p.length || num_tags_ != p.num_tags) {
    throw Error(ErrorCode::kInvalidArgument,
                "mask shape does not match the potential table");
  }
}

double path_score(const PotentialTable& p, std::span<const std::size_t> path) {
  if (path.size() != p.length) {
    throw Error(ErrorCode::kInvalidArgument, "path length mismatch");
  }
  for (std::size_t y : path) {
    if (y >= p.num_tags) {
      throw Error(ErrorCode::kInvalidArgument, "path tag index out of range");
    }
  }
  double s = p.start[path[0]] + p.stop[path[p.length - 1]];
  for (std::size_t i = 0; i < p.length; ++i) {
    s += p.emission(i, path[i]);
    if (i > 0) s += p.transition(path[i - 1], path[i]);
  }
  return s;
}

double log_partition(const PotentialTable& p) {
  p.validate();
  std::vector<double> alpha;
  return forward(p, nullptr, alpha);
}

double log_partition_backward(const PotentialTable& p, const LatticeMask* mask) {
  p.validate();
  if (mask) mask->validate_for(p);
  std::vector<double> beta;
  return backward(p, mask, beta);
}

double constrained_log_partition(const PotentialTable& p,
                                 const LatticeMask& mask) {
  p.validate();
  mask.validate_for(p);
  std::vector<double> alpha;
  return forward(p, &mask, alpha);
}

Marginals marginals(const PotentialTable& p, const LatticeMask* mask) {
  p.validate();
  if (mask) mask->validate_for(p);
  const std::size_t n = p.length, Y = p.num_tags;
  std::vector<double> alpha, beta;
  Marginals m;
  m.length = n;
  m.num_tags = Y;
  m.log_z = forward(p, mask, alpha);
  backward(p, mask, beta);

  m.unary.assign(n * Y, 0.0);
  for (std::size_t k = 0; k < n * Y; ++k) {
    m.unary[k] = safe_exp(alpha[k] + beta[k] - m.log_z);
  }
  m.pairwise.assign(n > 1 ? (n - 1) * Y * Y : 0, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    for (std::size_t a = 0; a < Y; ++a) {
      const double left = alpha[i * Y + a];
      if (left == kNegInf) continue;
      for (std::size_t b = 0; b < Y; ++b) {
        const double right = beta[(i + 1) * Y + b];
        if (right == kNegInf) continue;
        m.pairwise[(i * Y + a) * Y + b] = std::exp(
            left + p.transition(a, b) + p.emission(i + 1, b) + right - m.log_z);
      }
    }
  }
  return m;
}

LossAndGrad loss_and_grad(const PotentialTable& p, const LatticeMask& mask) {
  mask.validate_for(p);
  const Marginals full = marginals(p, nullptr);
  const Marginals constrained = marginals(p, &mask);
  const std::size_t n = p.length, Y = p.num_tags;

  LossAndGrad out;
  // Z_y <= Z analytically; clamp rounding noise so the loss stays >= 0.
  out.loss = std::max(0.0, full.log_z - constrained.log_z);
  auto& g = out.grad;
  g.d_emissions.resize(n * Y);
  for (std::size_t k = 0; k < n * Y; ++k) {
    g.d_emissions[k] = full.unary[k] - constrained.unary[k];
  }
  g.d_transitions.assign(Y * Y, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    for (std::size_t ab = 0; ab < Y * Y; ++ab) {
      g.d_transitions[ab] +=
          full.pairwise[i * Y * Y + ab] - constrained.pairwise[i * Y * Y + ab];
    }
  }
  g.d_start.resize(Y);
  g.d_stop.resize(Y);
  for (std::size_t y = 0; y < Y; ++y) {
    g.d_start[y] = full.at(0, y) - constrained.at(0, y);
    g.d_stop[y] = full.at(n - 1, y) - constrained.at(n - 1, y);
  }
  return out;
}

ViterbiResult viterbi(const PotentialTable& p) {
  p.validate();
  const std::size_t n = p.length, Y = p.num_tags;
  std::vector<double> delta(n * Y);
  std::vector<std::size_t> back(n * Y, 0);
  for (std::size_t y = 0; y < Y; ++y) delta[y] = p.start[y] + p.emission(0, y);
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t y = 0; y < Y; ++y) {
      std::size_t best = 0;
      double best_score = delta[(i - 1) * Y] + p.transition(0, y);
      for (std::size_t from = 1; from < Y; ++from) {
        const double s = delta[(i - 1) * Y + from] + p.transition(from, y);
        if (s > best_score) {
          best_score = s;
          best = from;
        }
      }
      delta[i * Y + y] = best_score + p.emission(i, y);
      back[i * Y + y] = best;
    }
  }
  ViterbiResult r;
  r.path.assign(n, 0);
  std::size_t last = 0;
  double best_score = delta[(n - 1) * Y] + p.stop[0];
  for (std::size_t y = 1; y < Y; ++y) {
    const double s = delta[(n - 1) * Y + y] + p.stop[y];
    if (s > best_score) {
      best_score = s;
      last = y;
    }
  }
  r.score = best_score;
  r.path[n - 1] = last;
  for (std::size_t i = n - 1; i > 0; --i) {
    r.path[i - 1] = back[i * Y + r.path[i]];
  }
  return r;
}

double sequence_log_prob(const PotentialTable& p,
                         std::span<const std::size_t> path) {
  const double s = path_score(p, path);
  return s - log_partition(p);
}

}  // namespace hiertag::crf
