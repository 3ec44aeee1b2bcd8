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

// Brute-force reference computations shared by the test binaries. Nothing
// here calls into the library's algorithms; the oracles only read inputs.

#ifndef HIERTAG_TESTS_ORACLES_HPP_
#define HIERTAG_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "hiertag/crf.hpp"
#include "hiertag/hierarchy.hpp"
#include "hiertag/random.hpp"

namespace oracle {

inline std::filesystem::path data_dir() {
  if (const char* d = std::getenv("HIERTAG_TEST_DATA")) return d;
  return std::filesystem::path(__FILE__).parent_path() / "data";
}

inline hiertag::crf::PotentialTable random_table(hiertag::Rng& rng,
                                                 std::size_t n, std::size_t y,
                                                 double lo = -2.0,
                                                 double hi = 2.0) {
  auto p = hiertag::crf::PotentialTable::zeros(n, y);
  for (auto& v : p.emissions) v = rng.uniform(lo, hi);
  for (auto& v : p.transitions) v = rng.uniform(lo, hi);
  for (auto& v : p.start) v = rng.uniform(lo, hi);
  for (auto& v : p.stop) v = rng.uniform(lo, hi);
  return p;
}

// Random non-empty allowed sets.
inline std::vector<std::vector<std::size_t>> random_allowed(hiertag::Rng& rng,
                                                            std::size_t n,
                                                            std::size_t y) {
  std::vector<std::vector<std::size_t>> out(n);
  for (auto& s : out) {
    for (std::size_t t = 0; t < y; ++t) {
      if (rng.bernoulli(0.5)) s.push_back(t);
    }
    if (s.empty()) s.push_back(rng.below(y));
  }
  return out;
}

// Visits every tag sequence of length n over y tags, optionally restricted.
inline void for_each_path(
    std::size_t n, std::size_t y,
    const std::vector<std::vector<std::size_t>>* allowed,
    const std::function<void(const std::vector<std::size_t>&)>& visit) {
  std::vector<std::size_t> path(n, 0);
  while (true) {
    bool ok = true;
    if (allowed) {
      for (std::size_t i = 0; i < n && ok; ++i) {
        const auto& a = (*allowed)[i];
        ok = std::find(a.begin(), a.end(), path[i]) != a.end();
      }
    }
    if (ok) visit(path);
    std::size_t i = 0;
    while (i < n && ++path[i] == y) path[i++] = 0;
    if (i == n) return;
  }
}

inline double score(const hiertag::crf::PotentialTable& p,
                    const std::vector<std::size_t>& path) {
  double s = p.start[path[0]] + p.stop[path.back()];
  for (std::size_t i = 0; i < path.size(); ++i) {
    s += p.emissions[i * p.num_tags + path[i]];
    if (i + 1 < path.size()) {
      s += p.transitions[path[i] * p.num_tags + path[i + 1]];
    }
  }
  return s;
}

// log-sum-exp over the enumerated path scores.
inline double log_z(const hiertag::crf::PotentialTable& p,
                    const std::vector<std::vector<std::size_t>>* allowed =
                        nullptr) {
  std::vector<double> scores;
  for_each_path(p.length, p.num_tags, allowed,
                [&](const auto& path) { scores.push_back(score(p, path)); });
  const double m = *std::max_element(scores.begin(), scores.end());
  double sum = 0.0;
  for (double s : scores) sum += std::exp(s - m);
  return m + std::log(sum);
}

inline std::vector<double> unary_marginals(
    const hiertag::crf::PotentialTable& p,
    const std::vector<std::vector<std::size_t>>* allowed = nullptr) {
  const double z = log_z(p, allowed);
  std::vector<double> out(p.length * p.num_tags, 0.0);
  for_each_path(p.length, p.num_tags, allowed, [&](const auto& path) {
    const double w = std::exp(score(p, path) - z);
    for (std::size_t i = 0; i < path.size(); ++i) {
      out[i * p.num_tags + path[i]] += w;
    }
  });
  return out;
}

struct Argmax {
  std::vector<std::size_t> path;
  double best = -std::numeric_limits<double>::infinity();
  double runner_up = -std::numeric_limits<double>::infinity();
};

inline Argmax argmax(const hiertag::crf::PotentialTable& p) {
  Argmax a;
  for_each_path(p.length, p.num_tags, nullptr, [&](const auto& path) {
    const double s = score(p, path);
    if (s > a.best) {
      a.runner_up = a.best;
      a.best = s;
      a.path = path;
    } else if (s > a.runner_up) {
      a.runner_up = s;
    }
  });
  return a;
}

// Central difference of f around x[k].
template <typename F>
double central_difference(std::vector<double>& x, std::size_t k, double h,
                          F&& f) {
  const double saved = x[k];
  x[k] = saved + h;
  const double up = f();
  x[k] = saved - h;
  const double down = f();
  x[k] = saved;
  return (up - down) / (2.0 * h);
}

inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

// Ancestors-or-self by enumerating every upward path with explicit recursion.
inline void collect_paths_up(const hiertag::TagHierarchy& h,
                             const hiertag::TagId& tag, std::size_t depth,
                             std::map<hiertag::TagId, std::size_t>& best) {
  auto it = best.find(tag);
  if (it != best.end() && it->second <= depth) return;
  best[tag] = depth;
  for (const auto& p : h.parents(tag)) collect_paths_up(h, p, depth + 1, best);
}

// Reachability by repeated edge relaxation over the full edge list.
inline std::set<hiertag::TagId> descendants_or_self(
    const hiertag::TagHierarchy& h, const hiertag::TagId& tag) {
  std::set<hiertag::TagId> out{tag};
  const auto edges = h.edges();
  bool grew = true;
  while (grew) {
    grew = false;
    for (const auto& [child, parent] : edges) {
      if (out.count(parent) && out.insert(child).second) grew = true;
    }
  }
  return out;
}

// Shallowest tagset member reachable by following out-edges, ties broken
// lexicographically; the Other tag if none is reachable.
inline hiertag::TagId traverse_to_tagset(const hiertag::TagHierarchy& h,
                                         const hiertag::TagId& tag,
                                         const std::set<hiertag::TagId>& members,
                                         const hiertag::TagId& other) {
  std::map<hiertag::TagId, std::size_t> depth;
  collect_paths_up(h, tag, 0, depth);
  hiertag::TagId best;
  std::size_t best_depth = std::numeric_limits<std::size_t>::max();
  for (const auto& [t, d] : depth) {
    if (!members.count(t)) continue;
    if (d < best_depth || (d == best_depth && t < best)) {
      best = t;
      best_depth = d;
    }
  }
  return best.empty() ? other : best;
}

struct SignedRank {
  double w_plus = 0.0;
  double w_minus = 0.0;
  double p_value = 1.0;
};

// Signed-rank statistics with average ranks by pairwise counting, and the
// exact two-sided p-value from visiting all 2^n sign patterns.
inline SignedRank signed_rank_enumeration(const std::vector<double>& a,
                                          const std::vector<double>& b) {
  std::vector<double> d;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) d.push_back(a[i] - b[i]);
  }
  SignedRank out;
  const std::size_t n = d.size();
  if (n == 0) return out;
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t less = 0, equal = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (std::abs(d[j]) < std::abs(d[i])) ++less;
      if (std::abs(d[j]) == std::abs(d[i])) ++equal;
    }
    rank[i] = static_cast<double>(less) + (static_cast<double>(equal) + 1) / 2;
    (d[i] > 0 ? out.w_plus : out.w_minus) += rank[i];
  }
  const double stat = std::min(out.w_plus, out.w_minus);
  std::size_t extreme = 0;
  const std::size_t patterns = std::size_t{1} << n;
  for (std::size_t mask = 0; mask < patterns; ++mask) {
    double plus = 0.0, minus = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      ((mask >> i) & 1 ? plus : minus) += rank[i];
    }
    if (std::min(plus, minus) <= stat + 1e-9) ++extreme;
  }
  out.p_value = static_cast<double>(extreme) / static_cast<double>(patterns);
  return out;
}

}  // namespace oracle

#endif  // HIERTAG_TESTS_ORACLES_HPP_
