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

#include "hiertag/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdlib>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "hiertag/error.hpp"
#include "text_util.hpp"

namespace hiertag {
namespace {

[[noreturn]] void parse_error(std::size_t line, const std::string& msg) {
  throw Error(ErrorCode::kParse,
              "experiment spec line " + std::to_string(line) + ": " + msg);
}

std::vector<std::string> split_list(std::string_view value) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= value.size()) {
    std::size_t comma = value.find(',', start);
    if (comma == std::string_view::npos) comma = value.size();
    const auto item = internal::trim(value.substr(start, comma - start));
    if (!item.empty()) out.emplace_back(item);
    start = comma + 1;
  }
  return out;
}

template <typename T>
T parse_number(std::string_view value, std::size_t line,
               const std::string& key) {
  T out{};
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    parse_error(line, "bad value '" + std::string(value) + "' for " + key);
  }
  return out;
}

std::filesystem::path resolve(const std::filesystem::path& base,
                              std::string_view value) {
  std::filesystem::path p{std::string(value)};
  return p.is_absolute() ? p : base / p;
}

enum class Section { kTop, kDataset, kTriplet };

}  // namespace

ExperimentSpec parse_experiment_spec(std::string_view text,
                                     const std::filesystem::path& base_dir) {
  ExperimentSpec spec;
  Section section = Section::kTop;
  const auto lines = internal::split_lines(text);
  for (std::size_t idx = 0; idx < lines.size(); ++idx) {
    const std::size_t lineno = idx + 1;
    std::string_view line = lines[idx];
    if (auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = internal::trim(line);
    if (line.empty()) continue;
    if (line == "[dataset]") {
      section = Section::kDataset;
      spec.datasets.emplace_back();
      continue;
    }
    if (line == "[triplet]") {
      section = Section::kTriplet;
      spec.triplets.emplace_back();
      continue;
    }
    if (line.front() == '[') {
      parse_error(lineno, "unknown section " + std::string(line));
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      parse_error(lineno, "expected key = value");
    }
    const std::string key(internal::trim(line.substr(0, eq)));
    const std::string_view value = internal::trim(line.substr(eq + 1));
    if (value.empty()) parse_error(lineno, "empty value for " + key);

    if (section == Section::kDataset) {
      DatasetSpec& ds = spec.datasets.back();
      if (key == "name") {
        ds.name = value;
      } else if (key == "tagset") {
        ds.tagset = value;
      } else if (key == "train") {
        ds.train = resolve(base_dir, value);
      } else if (key == "dev") {
        ds.dev = resolve(base_dir, value);
      } else if (key == "test") {
        ds.test = resolve(base_dir, value);
      } else {
        parse_error(lineno, "unknown dataset key '" + key + "'");
      }
      continue;
    }
    if (section == Section::kTriplet) {
      TripletSpec& t = spec.triplets.back();
      if (key == "tag") {
        t.tag = value;
      } else if (key == "base") {
        t.base = value;
      } else if (key == "extending") {
        t.extending = value;
      } else {
        parse_error(lineno, "unknown triplet key '" + key + "'");
      }
      continue;
    }

    TrainConfig& c = spec.config;
    if (key == "kind") {
      if (value == "extension") {
        spec.kind = ExperimentKind::kExtension;
      } else if (value == "integration") {
        spec.kind = ExperimentKind::kIntegration;
      } else {
        parse_error(lineno, "kind must be extension or integration");
      }
    } else if (key == "hierarchy") {
      spec.hierarchy = resolve(base_dir, value);
    } else if (key == "models") {
      spec.models = split_list(value);
    } else if (key == "seeds") {
      spec.seeds.clear();
      for (const auto& s : split_list(value)) {
        spec.seeds.push_back(parse_number<std::uint64_t>(s, lineno, key));
      }
    } else if (key == "consolidation") {
      try {
        spec.consolidation = parse_consolidation(value);
      } catch (const Error& e) {
        parse_error(lineno, e.what());
      }
    } else if (key == "matching") {
      if (value == "token") {
        spec.matching = eval::Matching::kToken;
      } else if (value == "span") {
        spec.matching = eval::Matching::kSpan;
      } else {
        parse_error(lineno, "matching must be token or span");
      }
    } else if (key == "epochs") {
      c.max_epochs = parse_number<std::size_t>(value, lineno, key);
    } else if (key == "patience") {
      c.patience = parse_number<std::size_t>(value, lineno, key);
    } else if (key == "lr") {
      c.learning_rate = parse_number<double>(value, lineno, key);
    } else if (key == "l2") {
      c.l2 = parse_number<double>(value, lineno, key);
    } else if (key == "batch_size") {
      c.batch_size = parse_number<std::size_t>(value, lineno, key);
    } else if (key == "hidden_dim") {
      c.hidden_dim = parse_number<std::size_t>(value, lineno, key);
    } else if (key == "window") {
      c.window = parse_number<int>(value, lineno, key);
    } else if (key == "train") {
      spec.train = split_list(value);
    } else if (key == "test") {
      spec.test = split_list(value);
    } else {
      parse_error(lineno, "unknown key '" + key + "'");
    }
  }
  for (auto& ds : spec.datasets) {
    if (ds.tagset.empty()) ds.tagset = ds.name;
  }
  return spec;
}

ExperimentSpec load_experiment_spec(const std::filesystem::path& path) {
  return parse_experiment_spec(internal::read_file(path),
                               path.parent_path().empty() ? "."
                                                          : path.parent_path());
}

namespace {

[[noreturn]] void invalid(const std::string& msg) {
  throw Error(ErrorCode::kValidation, "experiment spec: " + msg);
}

void require_file(const std::filesystem::path& p, const std::string& what) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(p, ec)) {
    invalid(what + " '" + p.string() + "' does not exist");
  }
}

const DatasetSpec& find_dataset(const ExperimentSpec& spec,
                                const std::string& name) {
  for (const auto& ds : spec.datasets) {
    if (ds.name == name) return ds;
  }
  invalid("unknown dataset '" + name + "'");
}

}  // namespace

void validate_experiment_spec(const ExperimentSpec& spec) {
  if (spec.models.empty()) invalid("no models listed");
  for (const auto& m : spec.models) {
    if (m == kSkylineModel) {
      if (spec.kind != ExperimentKind::kExtension) {
        invalid("the skyline model applies to extension experiments only");
      }
      continue;
    }
    try {
      parse_model_kind(m);
    } catch (const Error& e) {
      invalid(e.what());
    }
  }
  if (std::set<std::string>(spec.models.begin(), spec.models.end()).size() !=
      spec.models.size()) {
    invalid("duplicate model in models list");
  }
  if (spec.seeds.empty()) invalid("no seeds listed");
  if (spec.hierarchy) require_file(*spec.hierarchy, "hierarchy file");
  std::set<std::string> names;
  for (const auto& ds : spec.datasets) {
    if (ds.name.empty()) invalid("dataset without a name");
    if (!names.insert(ds.name).second) {
      invalid("duplicate dataset '" + ds.name + "'");
    }
    if (ds.train.empty()) invalid("dataset '" + ds.name + "' has no train");
    require_file(ds.train, "train file of '" + ds.name + "'");
    if (ds.dev) require_file(*ds.dev, "dev file of '" + ds.name + "'");
    if (ds.test) require_file(*ds.test, "test file of '" + ds.name + "'");
  }
  if (spec.kind == ExperimentKind::kExtension) {
    if (spec.triplets.empty()) invalid("extension experiment without triplets");
    for (const auto& t : spec.triplets) {
      if (t.tag.empty() || t.base.empty() || t.extending.empty()) {
        invalid("triplet needs tag, base and extending");
      }
      if (t.base == t.extending) {
        invalid("triplet base and extending datasets must differ");
      }
      const auto& base = find_dataset(spec, t.base);
      find_dataset(spec, t.extending);
      if (!base.test) invalid("base dataset '" + t.base + "' has no test file");
    }
  } else {
    if (!spec.triplets.empty()) {
      invalid("triplets are only valid in extension experiments");
    }
    if (spec.train.empty()) invalid("integration experiment without train");
    if (spec.test.empty()) invalid("integration experiment without test");
    for (const auto& n : spec.train) find_dataset(spec, n);
    for (const auto& n : spec.test) {
      if (!find_dataset(spec, n).test) {
        invalid("test dataset '" + n + "' has no test file");
      }
    }
  }
}

std::size_t default_thread_count() {
  if (const char* env = std::getenv("HIERTAG_THREADS")) {
    std::size_t n = 0;
    std::string_view s(env);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), n);
    if (ec == std::errc() && ptr == s.data() + s.size() && n > 0) return n;
  }
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

namespace {

struct LoadedDataset {
  const DatasetSpec* spec = nullptr;
  Corpus train;
  std::optional<Corpus> dev;
  std::optional<Corpus> test;
};

struct Cell {
  const TripletSpec* triplet = nullptr;
  std::string model;
  std::uint64_t seed = 0;
};

class Runner {
 public:
  Runner(const ExperimentSpec& spec, const ExperimentOptions& options)
      : spec_(spec), options_(options) {}

  ExperimentResult run() {
    validate_experiment_spec(spec_);
    load_inputs();
    std::vector<Cell> cells;
    if (spec_.kind == ExperimentKind::kExtension) {
      for (const auto& t : spec_.triplets) {
        for (const auto& m : spec_.models) {
          for (auto s : spec_.seeds) cells.push_back({&t, m, s});
        }
      }
    } else {
      for (const auto& m : spec_.models) {
        for (auto s : spec_.seeds) cells.push_back({nullptr, m, s});
      }
    }
    std::vector<std::vector<eval::ResultRow>> results(cells.size());
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> finished{0};
    auto worker = [&] {
      for (std::size_t i = next++; i < cells.size(); i = next++) {
        results[i] = run_cell(cells[i]);
        const std::size_t done = ++finished;
        std::string msg = "cell " + std::to_string(done) + "/" +
                          std::to_string(cells.size()) + " " + cells[i].model +
                          " seed " + std::to_string(cells[i].seed);
        if (cells[i].triplet) {
          msg += " tag " + cells[i].triplet->tag + " (" +
                 cells[i].triplet->base + " <- " +
                 cells[i].triplet->extending + ")";
        }
        for (const auto& r : results[i]) {
          msg += r.failed ? " FAILED: " + r.error
                          : " f1=" + std::to_string(r.counts.f1());
        }
        log(msg);
      }
    };
    const std::size_t threads = std::min(
        cells.size(),
        options_.threads > 0 ? options_.threads : default_thread_count());
    if (threads <= 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
      for (auto& th : pool) th.join();
    }

    ExperimentResult out;
    for (auto& r : results) {
      for (auto& row : r) {
        out.any_failed |= row.failed;
        out.rows.push_back(std::move(row));
      }
    }
    out.csv = eval::render_report(out.rows, eval::ReportFormat::kCsv);
    out.markdown = eval::render_report(out.rows, eval::ReportFormat::kMarkdown);
    return out;
  }

 private:
  void log(const std::string& msg) {
    if (!options_.log) return;
    std::lock_guard<std::mutex> lock(log_mutex_);
    options_.log(msg);
  }

  void load_inputs() {
    if (spec_.hierarchy) {
      hierarchy_ = TagHierarchy::load(*spec_.hierarchy);
      if (hierarchy_.extended()) {
        invalid("the hierarchy must not be extended; tagsets are added per "
                "cell before extension");
      }
    }
    for (const auto& ds : spec_.datasets) {
      LoadedDataset d;
      d.spec = &ds;
      d.train = read_column_file(ds.train, ds.tagset, Split::kTrain);
      if (ds.dev) d.dev = read_column_file(*ds.dev, ds.tagset, Split::kDev);
      if (ds.test) d.test = read_column_file(*ds.test, ds.tagset, Split::kTest);
      if (!hierarchy_.has_tagset(ds.tagset)) {
        TagSet tags = induce_tagset(d.train);
        for (const auto* c : {d.dev ? &*d.dev : nullptr,
                              d.test ? &*d.test : nullptr}) {
          if (!c) continue;
          const TagSet more = induce_tagset(*c);
          tags.insert(more.begin(), more.end());
        }
        hierarchy_.add_tagset(ds.tagset, tags);
      }
      const TagSet& ts = hierarchy_.tagset(ds.tagset);
      check_corpus_tags(d.train, ts);
      if (d.dev) check_corpus_tags(*d.dev, ts);
      if (d.test) check_corpus_tags(*d.test, ts);
      data_.emplace(ds.name, std::move(d));
    }
    hierarchy_.validate();
    for (const auto& t : spec_.triplets) {
      const auto& b = data_.at(t.base);
      const auto& e = data_.at(t.extending);
      if (!hierarchy_.tagset(b.spec->tagset).count(t.tag) ||
          !hierarchy_.tagset(e.spec->tagset).count(t.tag)) {
        invalid("triplet tag '" + t.tag + "' must be in the tagsets of both '" +
                t.base + "' and '" + t.extending + "'");
      }
    }
  }

  std::vector<eval::ResultRow> run_cell(const Cell& cell) {
    std::vector<eval::ResultRow> rows;
    auto add_row = [&](const std::string& test) {
      eval::ResultRow r;
      if (cell.triplet) {
        r.tag = cell.triplet->tag;
        r.base = cell.triplet->base;
        r.extending = cell.triplet->extending;
      } else {
        for (std::size_t i = 0; i < spec_.train.size(); ++i) {
          r.base += (i ? "+" : "") + spec_.train[i];
        }
      }
      r.test = test;
      r.model = cell.model;
      r.seed = cell.seed;
      rows.push_back(std::move(r));
    };
    if (cell.triplet) {
      add_row(cell.triplet->base);
    } else {
      for (const auto& t : spec_.test) add_row(t);
    }
    try {
      if (cell.triplet) {
        run_extension(cell, rows[0]);
      } else {
        run_integration(cell, rows);
      }
    } catch (const std::exception& e) {
      for (auto& r : rows) {
        r.failed = true;
        r.error = e.what();
        r.counts = {};
        r.collisions.reset();
      }
    }
    return rows;
  }

  void evaluate(const std::vector<TrainedModel>& models, const Corpus& test,
                const std::string& tagset, std::uint64_t seed,
                eval::ResultRow& row) {
    const auto tagged =
        tag_corpus(models, test, tagset, spec_.consolidation, seed);
    row.counts = eval::score_corpora(tagged.predictions, test, spec_.matching)
                     .micro;
    const ModelKind kind = models[0].kind;
    if (kind == ModelKind::kIndep || kind == ModelKind::kMtl) {
      row.collisions = tagged.collisions;
    }
  }

  void run_extension(const Cell& cell, eval::ResultRow& row) {
    const TripletSpec& t = *cell.triplet;
    const LoadedDataset& base = data_.at(t.base);
    const LoadedDataset& ext = data_.at(t.extending);
    const std::string& base_ts = base.spec->tagset;
    TrainConfig cfg = spec_.config;
    cfg.seed = cell.seed;

    if (cell.model == kSkylineModel) {
      const ExtendedHierarchy eh = ExtendedHierarchy::extend(hierarchy_);
      TrainingDataset ds{base.train, base.dev};
      std::vector<TrainedModel> models;
      models.push_back(fit(setup_single(ds, eh, cfg)));
      evaluate(models, *base.test, base_ts, cell.seed, row);
      row.collisions.reset();
      return;
    }

    const TagSet& ts_base = hierarchy_.tagset(base_ts);
    const TagSet& ts_ext = hierarchy_.tagset(ext.spec->tagset);
    const SelectiveSplit split = make_selective(base.train, ts_base, ext.train,
                                                ts_ext, t.tag, &hierarchy_);
    std::optional<SelectiveSplit> dev_split;
    if (base.dev && ext.dev) {
      dev_split = make_selective(*base.dev, ts_base, *ext.dev, ts_ext, t.tag,
                                 &hierarchy_);
    }
    const ExtendedHierarchy eh =
        ExtendedHierarchy::extend(with_selective_tagsets(hierarchy_, split));
    std::vector<TrainingDataset> datasets(2);
    datasets[0].train = split.base;
    datasets[1].train = split.extending;
    if (dev_split) {
      datasets[0].dev = dev_split->base;
      datasets[1].dev = dev_split->extending;
    }
    const auto models =
        train_models(parse_model_kind(cell.model), datasets, eh, cfg);
    evaluate(models, *base.test, base_ts, cell.seed, row);
  }

  void run_integration(const Cell& cell, std::vector<eval::ResultRow>& rows) {
    TrainConfig cfg = spec_.config;
    cfg.seed = cell.seed;
    const ExtendedHierarchy eh = ExtendedHierarchy::extend(hierarchy_);
    std::vector<TrainingDataset> datasets;
    for (const auto& n : spec_.train) {
      const LoadedDataset& d = data_.at(n);
      datasets.push_back({d.train, d.dev});
    }
    const auto models =
        train_models(parse_model_kind(cell.model), datasets, eh, cfg);
    for (std::size_t i = 0; i < spec_.test.size(); ++i) {
      const LoadedDataset& d = data_.at(spec_.test[i]);
      evaluate(models, *d.test, d.spec->tagset, cell.seed, rows[i]);
    }
  }

  const ExperimentSpec& spec_;
  const ExperimentOptions& options_;
  TagHierarchy hierarchy_;
  std::map<std::string, LoadedDataset> data_;
  std::mutex log_mutex_;
};

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec,
                                const ExperimentOptions& options) {
  Runner runner(spec, options);
  return runner.run();
}

}  // namespace hiertag
