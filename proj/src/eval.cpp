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

#include "hiertag/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <tuple>

#include "hiertag/error.hpp"

namespace hiertag::eval {

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

struct Span {
  std::size_t begin;
  std::size_t end;
  TagId tag;
  auto operator<=>(const Span&) const = default;
};

std::vector<Span> spans_of(const std::vector<TagId>& tags) {
  std::vector<Span> out;
  std::size_t i = 0;
  while (i < tags.size()) {
    if (tags[i].empty()) {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < tags.size() && tags[j] == tags[i]) ++j;
    out.push_back({i, j, tags[i]});
    i = j;
  }
  return out;
}

std::string fmt(double x, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, x);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

int model_rank(const std::string& model) {
  static const char* kOrder[] = {"skyline", "hier", "indep", "mtl", "concat"};
  for (int k = 0; k < 5; ++k) {
    if (model == kOrder[k]) return k;
  }
  return 5;
}

bool model_less(const std::string& a, const std::string& b) {
  return std::make_tuple(model_rank(a), a) < std::make_tuple(model_rank(b), b);
}

using GroupKey = std::tuple<std::string, std::string, std::string, std::string>;

GroupKey group_of(const ResultRow& r) {
  return {r.tag, r.base, r.extending, r.test};
}

// Wilcoxon signed-rank null distribution: number of sign assignments whose
// positive-rank sum (in doubled units) equals s.
std::vector<double> signed_rank_counts(const std::vector<long>& doubled_ranks) {
  const long total =
      std::accumulate(doubled_ranks.begin(), doubled_ranks.end(), 0L);
  std::vector<double> counts(static_cast<std::size_t>(total) + 1, 0.0);
  counts[0] = 1.0;
  long reach = 0;
  for (long r : doubled_ranks) {
    for (long s = reach; s >= 0; --s) {
      if (counts[static_cast<std::size_t>(s)] != 0.0) {
        counts[static_cast<std::size_t>(s + r)] +=
            counts[static_cast<std::size_t>(s)];
      }
    }
    reach += r;
  }
  return counts;
}

}  // namespace

double TagCounts::precision() const { return ratio(tp, tp + fp); }
double TagCounts::recall() const { return ratio(tp, tp + fn); }
double TagCounts::f1() const {
  const double p = precision(), r = recall();
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

PRFReport score(std::span<const std::vector<TagId>> predicted,
                std::span<const std::vector<TagId>> gold, Matching matching) {
  if (predicted.size() != gold.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "prediction and gold differ in document count");
  }
  PRFReport report;
  for (std::size_t d = 0; d < gold.size(); ++d) {
    const auto& p = predicted[d];
    const auto& g = gold[d];
    if (p.size() != g.size()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "length mismatch in document " + std::to_string(d));
    }
    report.token_count += g.size();
    if (matching == Matching::kToken) {
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (!g[i].empty() && p[i] == g[i]) {
          ++report.per_tag[g[i]].tp;
          continue;
        }
        if (!p[i].empty()) ++report.per_tag[p[i]].fp;
        if (!g[i].empty()) ++report.per_tag[g[i]].fn;
      }
    } else {
      const auto ps = spans_of(p);
      const auto gs = spans_of(g);
      const std::set<Span> gold_set(gs.begin(), gs.end());
      const std::set<Span> pred_set(ps.begin(), ps.end());
      for (const auto& s : ps) {
        if (gold_set.count(s)) {
          ++report.per_tag[s.tag].tp;
        } else {
          ++report.per_tag[s.tag].fp;
        }
      }
      for (const auto& s : gs) {
        if (!pred_set.count(s)) ++report.per_tag[s.tag].fn;
      }
    }
  }
  for (const auto& [tag, c] : report.per_tag) report.micro += c;
  return report;
}

PRFReport score_corpora(const Corpus& predicted, const Corpus& gold,
                        Matching matching) {
  if (predicted.sequences.size() != gold.sequences.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "prediction and gold differ in document count");
  }
  std::vector<std::vector<TagId>> p, g;
  for (std::size_t d = 0; d < gold.sequences.size(); ++d) {
    const auto& ps = predicted.sequences[d];
    const auto& gs = gold.sequences[d];
    if (ps.tokens.size() != gs.tokens.size()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "length mismatch in document " + std::to_string(d));
    }
    for (std::size_t i = 0; i < gs.tokens.size(); ++i) {
      if (ps.tokens[i].text != gs.tokens[i].text) {
        throw Error(ErrorCode::kInvalidArgument,
                    "token mismatch in document " + std::to_string(d) +
                        " at position " + std::to_string(i));
      }
    }
    p.push_back(ps.golds());
    g.push_back(gs.golds());
  }
  return score(p, g, matching);
}

std::string format_prf(const PRFReport& report) {
  std::string out = "tag\ttp\tfp\tfn\tprecision\trecall\tf1\n";
  auto line = [&out](const std::string& name, const TagCounts& c) {
    out += name + "\t" + std::to_string(c.tp) + "\t" + std::to_string(c.fp) +
           "\t" + std::to_string(c.fn) + "\t" + fmt(c.precision()) + "\t" +
           fmt(c.recall()) + "\t" + fmt(c.f1()) + "\n";
  };
  for (const auto& [tag, c] : report.per_tag) line(tag, c);
  line("micro", report.micro);
  out += "tokens\t" + std::to_string(report.token_count) + "\n";
  return out;
}

std::string format_prf_csv(const PRFReport& report) {
  std::string out = "tag,tp,fp,fn,precision,recall,f1\n";
  auto line = [&out](const std::string& name, const TagCounts& c) {
    out += csv_field(name) + "," + std::to_string(c.tp) + "," +
           std::to_string(c.fp) + "," + std::to_string(c.fn) + "," +
           fmt(c.precision()) + "," + fmt(c.recall()) + "," + fmt(c.f1()) +
           "\n";
  };
  for (const auto& [tag, c] : report.per_tag) line(tag, c);
  line("micro", report.micro);
  return out;
}

WilcoxonResult wilcoxon(std::span<const double> a, std::span<const double> b,
                        WilcoxonMethod method) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "wilcoxon needs paired samples of equal length");
  }
  if (a.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "wilcoxon needs at least 1 pair");
  }
  std::vector<double> diffs;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    if (d != 0.0) diffs.push_back(d);
  }
  WilcoxonResult res;
  res.n_nonzero = diffs.size();
  if (diffs.empty()) return res;

  const std::size_t n = diffs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return std::abs(diffs[i]) < std::abs(diffs[j]);
  });
  std::vector<double> ranks(n);
  double tie_term = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && std::abs(diffs[order[j]]) == std::abs(diffs[order[i]])) ++j;
    const double avg = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = avg;
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }
  for (std::size_t i = 0; i < n; ++i) {
    (diffs[i] > 0 ? res.w_plus : res.w_minus) += ranks[i];
  }
  res.statistic = std::min(res.w_plus, res.w_minus);

  const bool exact = method == WilcoxonMethod::kExact ||
                     (method == WilcoxonMethod::kAuto && n <= 25);
  res.exact = exact;
  if (exact) {
    std::vector<long> doubled;
    for (double r : ranks) doubled.push_back(std::lround(2.0 * r));
    const auto counts = signed_rank_counts(doubled);
    const long total = static_cast<long>(counts.size()) - 1;
    const long stat2 = std::lround(2.0 * res.statistic);
    double tail = 0.0;
    for (long s = 0; s <= total; ++s) {
      if (s <= stat2 || s >= total - stat2) {
        tail += counts[static_cast<std::size_t>(s)];
      }
    }
    res.p_value = std::min(1.0, tail / std::ldexp(1.0, static_cast<int>(n)));
  } else {
    const double nd = static_cast<double>(n);
    const double mean = nd * (nd + 1.0) / 4.0;
    const double var =
        nd * (nd + 1.0) * (2.0 * nd + 1.0) / 24.0 - tie_term / 48.0;
    if (var <= 0.0) {
      res.p_value = 1.0;
    } else {
      const double dev = std::max(0.0, std::abs(res.w_plus - mean) - 0.5);
      const double z = dev / std::sqrt(var);
      res.p_value = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
    }
  }
  res.significant_at_0_01 = res.p_value < 0.01;
  return res;
}

std::string render_report(std::span<const ResultRow> rows, ReportFormat format) {
  std::vector<const ResultRow*> sorted;
  for (const auto& r : rows) sorted.push_back(&r);
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const ResultRow* a, const ResultRow* b) {
                     if (group_of(*a) != group_of(*b)) {
                       return group_of(*a) < group_of(*b);
                     }
                     if (a->model != b->model) return model_less(a->model, b->model);
                     return a->seed < b->seed;
                   });
  std::vector<std::string> models;
  for (const auto* r : sorted) {
    if (std::find(models.begin(), models.end(), r->model) == models.end()) {
      models.push_back(r->model);
    }
  }
  std::sort(models.begin(), models.end(), model_less);

  std::map<std::string, TagCounts> totals;
  for (const auto* r : sorted) {
    if (!r->failed) totals[r->model] += r->counts;
  }

  if (format == ReportFormat::kCsv) {
    std::string out =
        "tag,base,extending,test,model,seed,status,tp,fp,fn,precision,recall,"
        "f1,collisions\n";
    for (const auto* r : sorted) {
      out += csv_field(r->tag) + "," + csv_field(r->base) + "," +
             csv_field(r->extending) + "," + csv_field(r->test) + "," +
             csv_field(r->model) + "," + std::to_string(r->seed) + ",";
      if (r->failed) {
        out += "failed,,,,,,,\n";
        continue;
      }
      out += "ok," + std::to_string(r->counts.tp) + "," +
             std::to_string(r->counts.fp) + "," + std::to_string(r->counts.fn) +
             "," + fmt(r->counts.precision()) + "," + fmt(r->counts.recall()) +
             "," + fmt(r->counts.f1()) + "," +
             (r->collisions ? std::to_string(*r->collisions) : "") + "\n";
    }
    for (const auto& m : models) {
      const auto& c = totals[m];
      out += "TOTAL,,,," + csv_field(m) + ",,ok," + std::to_string(c.tp) + "," +
             std::to_string(c.fp) + "," + std::to_string(c.fn) + "," +
             fmt(c.precision()) + "," + fmt(c.recall()) + "," + fmt(c.f1()) +
             ",\n";
    }
    return out;
  }

  // Markdown.
  std::vector<GroupKey> groups;
  for (const auto* r : sorted) {
    if (groups.empty() || groups.back() != group_of(*r)) {
      groups.push_back(group_of(*r));
    }
  }
  std::string out = "## F1\n\n| Tag | Base | Extending | Test |";
  for (const auto& m : models) out += " " + m + " |";
  out += "\n|---|---|---|---|";
  for (std::size_t k = 0; k < models.size(); ++k) out += "---:|";
  out += "\n";

  bool any_collisions = false;
  for (const auto& g : groups) {
    out += "| " + std::get<0>(g) + " | " + std::get<1>(g) + " | " +
           std::get<2>(g) + " | " + std::get<3>(g) + " |";
    for (const auto& m : models) {
      double sum = 0.0;
      std::size_t ok = 0, failed = 0;
      for (const auto* r : sorted) {
        if (group_of(*r) != g || r->model != m) continue;
        if (r->failed) {
          ++failed;
        } else {
          sum += r->counts.f1();
          ++ok;
          any_collisions |= r->collisions.has_value();
        }
      }
      if (failed > 0) {
        out += " FAILED |";
      } else if (ok == 0) {
        out += " |";
      } else {
        out += " " + fmt(sum / static_cast<double>(ok), 3) + " |";
      }
    }
    out += "\n";
  }
  out += "| **Grand Total** | | | |";
  for (const auto& m : models) out += " " + fmt(totals[m].f1(), 3) + " |";
  out += "\n";

  if (any_collisions) {
    out += "\n## Collisions\n\n| Tag | Base | Extending | Test |";
    std::vector<std::string> with_collisions;
    for (const auto& m : models) {
      for (const auto* r : sorted) {
        if (r->model == m && r->collisions) {
          with_collisions.push_back(m);
          break;
        }
      }
    }
    for (const auto& m : with_collisions) out += " " + m + " |";
    out += "\n|---|---|---|---|";
    for (std::size_t k = 0; k < with_collisions.size(); ++k) out += "---:|";
    out += "\n";
    for (const auto& g : groups) {
      out += "| " + std::get<0>(g) + " | " + std::get<1>(g) + " | " +
             std::get<2>(g) + " | " + std::get<3>(g) + " |";
      for (const auto& m : with_collisions) {
        std::size_t sum = 0, ok = 0;
        for (const auto* r : sorted) {
          if (group_of(*r) == g && r->model == m && r->collisions) {
            sum += *r->collisions;
            ++ok;
          }
        }
        out += ok == 0 ? std::string(" |")
                       : " " + fmt(static_cast<double>(sum) /
                                       static_cast<double>(ok), 1) + " |";
      }
      out += "\n";
    }
  }

  if (models.size() > 1) {
    out += "\n## Wilcoxon signed-rank (two-sided, paired by configuration and "
           "seed)\n\n| A | B | pairs | non-zero | W | p | p < 0.01 |\n"
           "|---|---|---:|---:|---:|---:|---|\n";
    using CellKey = std::tuple<GroupKey, std::uint64_t>;
    std::map<std::string, std::map<CellKey, double>> f1s;
    for (const auto* r : sorted) {
      if (!r->failed) f1s[r->model][{group_of(*r), r->seed}] = r->counts.f1();
    }
    for (std::size_t i = 0; i < models.size(); ++i) {
      for (std::size_t j = i + 1; j < models.size(); ++j) {
        std::vector<double> a, b;
        for (const auto& [key, v] : f1s[models[i]]) {
          auto it = f1s[models[j]].find(key);
          if (it == f1s[models[j]].end()) continue;
          a.push_back(v);
          b.push_back(it->second);
        }
        out += "| " + models[i] + " | " + models[j] + " | " +
               std::to_string(a.size()) + " |";
        if (a.empty()) {
          out += " | | | |\n";
          continue;
        }
        const auto w = wilcoxon(a, b);
        out += " " + std::to_string(w.n_nonzero) + " | " + fmt(w.statistic, 1) +
               " | " + fmt(w.p_value) + " | " +
               (w.significant_at_0_01 ? "yes" : "no") + " |\n";
      }
    }
  }
  return out;
}

}  // namespace hiertag::eval
