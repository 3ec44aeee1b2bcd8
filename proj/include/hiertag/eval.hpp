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

#ifndef HIERTAG_EVAL_HPP_
#define HIERTAG_EVAL_HPP_

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hiertag/data.hpp"
#include "hiertag/hierarchy.hpp"

namespace hiertag::eval {

struct TagCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  // 0/0 is taken as 0 for all three.
  double precision() const;
  double recall() const;
  double f1() const;

  TagCounts& operator+=(const TagCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  bool operator==(const TagCounts&) const = default;
};

struct PRFReport {
  std::map<TagId, TagCounts> per_tag;
  TagCounts micro;
  std::size_t token_count = 0;
};

// kToken counts every token; kSpan treats maximal runs of one tag as spans
// that must match exactly.
enum class Matching { kToken, kSpan };

// Tag sequences use the empty string for Other. Throws Error(kInvalidArgument)
// when the sequences are not aligned.
PRFReport score(std::span<const std::vector<TagId>> predicted,
                std::span<const std::vector<TagId>> gold,
                Matching matching = Matching::kToken);
// Also checks that token texts agree.
PRFReport score_corpora(const Corpus& predicted, const Corpus& gold,
                        Matching matching = Matching::kToken);

std::string format_prf(const PRFReport& report);
std::string format_prf_csv(const PRFReport& report);

struct WilcoxonResult {
  std::size_t n_nonzero = 0;
  double w_plus = 0.0;
  double w_minus = 0.0;
  // min(w_plus, w_minus)
  double statistic = 0.0;
  double p_value = 1.0;
  bool exact = true;
  bool significant_at_0_01 = false;
};

enum class WilcoxonMethod { kAuto, kExact, kNormal };

// Two-sided signed-rank test on paired samples. Zero differences are dropped,
// tied magnitudes get average ranks. kAuto is exact up to 25 non-zero pairs.
WilcoxonResult wilcoxon(std::span<const double> a, std::span<const double> b,
                        WilcoxonMethod method = WilcoxonMethod::kAuto);

// One cell of an experiment: one model kind, one seed, one configuration.
struct ResultRow {
  std::string tag;
  std::string base;
  std::string extending;
  std::string test;
  std::string model;
  std::uint64_t seed = 0;
  TagCounts counts;
  std::optional<std::size_t> collisions;
  bool failed = false;
  std::string error;
};

enum class ReportFormat { kCsv, kMarkdown };

// CSV: one line per row plus a TOTAL line per model. Markdown: mean F1 per
// configuration and model, a micro-aggregated grand total, collision counts,
// and pairwise Wilcoxon tests over matched (configuration, seed) pairs.
std::string render_report(std::span<const ResultRow> rows, ReportFormat format);

}  // namespace hiertag::eval

#endif  // HIERTAG_EVAL_HPP_
