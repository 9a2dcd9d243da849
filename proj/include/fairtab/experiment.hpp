#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairtab/data/io.hpp"
#include "fairtab/data/pipeline.hpp"
#include "fairtab/data/synthetic.hpp"
#include "fairtab/error.hpp"
#include "fairtab/metrics.hpp"
#include "fairtab/trainer.hpp"

namespace fairtab {

namespace fs = std::filesystem;

struct SyntheticSpec {
  std::size_t n = 5000;
  std::size_t d = 10;
  double bias_strength = 0.4;
  double base_rate = 0.5;
  std::uint64_t seed = 0;
};

/// Where the rows come from: a CSV file with its schema, or the synthetic generator.
struct DataSource {
  std::string csv;
  std::string schema;
  std::optional<SyntheticSpec> synthetic;
  SplitFractions fractions{0.70, 0.15, 0.15};
  std::uint64_t split_seed = 0;
};

struct ExperimentConfig {
  DataSource data;
  TrainConfig train;
  std::size_t runs = 5;
  std::size_t jobs = 1;
  std::vector<double> alphas;
  std::vector<TrainingMode> modes;
  std::string out = "runs";
};

/// Directory searched for dataset files given by bare or missing paths.
inline std::optional<fs::path> data_root() {
  if (const char* env = std::getenv("FAIRTAB_DATA_DIR"); env && *env) return fs::path(env);
  return std::nullopt;
}

/// `p` as given if it exists, else FAIRTAB_DATA_DIR/<file name>. Returns `p` when
/// neither exists so the caller's error names the configured path.
inline std::string resolve_data_path(const std::string& p) {
  if (p.empty() || fs::exists(p)) return p;
  if (auto root = data_root()) {
    const fs::path alt = *root / fs::path(p).filename();
    if (fs::exists(alt)) return alt.string();
  }
  return p;
}

namespace detail {

inline std::string relative_to(const fs::path& dir, const std::string& p) {
  if (p.empty() || fs::path(p).is_absolute()) return p;
  return (dir / p).lexically_normal().string();
}

}  // namespace detail

/// Parses an experiment config. Relative paths are taken relative to `dir`.
inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j, const fs::path& dir = ".") {
  ExperimentConfig c;
  try {
    const std::string dataset = j.value("dataset", std::string("adult"));
    c.train = default_config(dataset);
    if (j.contains("train")) c.train = train_config_from_json(j["train"], c.train);
    c.train.dataset = dataset;
    if (j.contains("data")) {
      const auto& d = j["data"];
      if (d.contains("csv")) c.data.csv = detail::relative_to(dir, d["csv"].get<std::string>());
      if (d.contains("schema")) c.data.schema = detail::relative_to(dir, d["schema"].get<std::string>());
      if (d.contains("split")) c.data.fractions = d["split"].get<SplitFractions>();
      if (d.contains("split_seed")) c.data.split_seed = d["split_seed"].get<std::uint64_t>();
      if (d.contains("synthetic")) {
        const auto& s = d["synthetic"];
        SyntheticSpec spec;
        spec.n = s.value("n", spec.n);
        spec.d = s.value("d", spec.d);
        spec.bias_strength = s.value("bias_strength", spec.bias_strength);
        spec.base_rate = s.value("base_rate", spec.base_rate);
        spec.seed = s.value("seed", spec.seed);
        c.data.synthetic = spec;
      }
    }
    c.runs = j.value("runs", c.runs);
    c.jobs = j.value("jobs", c.jobs);
    c.out = j.value("out", c.out);
    if (j.contains("sweep")) {
      const auto& s = j["sweep"];
      if (s.contains("alphas")) c.alphas = s["alphas"].get<std::vector<double>>();
      if (s.contains("modes"))
        for (const auto& m : s["modes"]) c.modes.push_back(training_mode_from_string(m.get<std::string>()));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  }
  return c;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  if (!fs::exists(path)) throw ConfigError("config file not found: " + path);
  nlohmann::json j;
  try {
    j = read_json(path);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return experiment_config_from_json(j, fs::path(path).parent_path());
}

inline nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json data{{"csv", c.data.csv}, {"schema", c.data.schema}, {"split", c.data.fractions},
                      {"split_seed", c.data.split_seed}};
  if (c.data.synthetic) {
    const auto& s = *c.data.synthetic;
    data["synthetic"] = {{"n", s.n}, {"d", s.d}, {"bias_strength", s.bias_strength}, {"base_rate", s.base_rate},
                         {"seed", s.seed}};
  }
  nlohmann::json modes = nlohmann::json::array();
  for (auto m : c.modes) modes.push_back(std::string(to_string(m)));
  return {{"dataset", c.train.dataset}, {"data", data},     {"train", to_json(c.train)},
          {"runs", c.runs},             {"jobs", c.jobs},   {"out", c.out},
          {"sweep", {{"alphas", c.alphas}, {"modes", modes}}}};
}

/// Checks referenced files and, when `sweep` is set, the grids.
inline void validate(ExperimentConfig& c, bool sweep) {
  c.train.validate();
  if (c.runs < 1) throw ConfigError("runs must be at least 1");
  if (!c.data.synthetic) {
    if (c.data.csv.empty()) throw ConfigError("config names no dataset file");
    if (c.data.schema.empty()) throw ConfigError("config names no schema file");
    c.data.csv = resolve_data_path(c.data.csv);
    if (!fs::exists(c.data.csv))
      throw ConfigError("dataset file not found: " + c.data.csv + " (set FAIRTAB_DATA_DIR to the directory holding it)");
    if (!fs::exists(c.data.schema)) throw ConfigError("schema file not found: " + c.data.schema);
  }
  if (sweep) {
    if (c.alphas.empty()) throw ConfigError("sweep needs a nonempty alpha grid");
    if (c.modes.empty()) throw ConfigError("sweep needs at least one mode");
    for (double a : c.alphas)
      if (!(a >= 0.0)) throw ConfigError("sweep alphas must be non-negative");
  }
}

inline Splits load_splits(const DataSource& d) {
  if (d.synthetic) {
    const auto& s = *d.synthetic;
    return split(synth_biased(s.n, s.d, s.bias_strength, s.base_rate, s.seed), d.fractions, d.split_seed);
  }
  return prepare_csv(d.csv, load_schema(d.schema), d.fractions, d.split_seed).splits;
}

inline std::string format_alpha(double a) { return csv::format_double(a); }

/// One (alpha, mode) cell of a sweep.
struct SweepCell {
  TrainingMode mode = TrainingMode::supervised;
  double alpha = 1.0;
  bool ok = false;
  std::string error;
  AggregateReport report;
  TradeoffPoint point;                ///< (max dp, mean accuracy) at threshold 0.5
  std::vector<TradeoffPoint> curve;   ///< threshold points of every run
  double aoc = 0.0;                   ///< mean over runs of the per-run threshold-curve AOC
};

struct SweepResult {
  double dp_max = 0.0;
  std::optional<AggregateReport> baseline;
  std::vector<SweepCell> cells;
  std::map<std::string, double> aoc_per_mode;  ///< AOC of the per-alpha points of each mode

  std::vector<TradeoffPoint> points() const {
    std::vector<TradeoffPoint> out;
    for (const auto& c : cells)
      if (c.ok) out.push_back(c.point);
    return out;
  }
};

inline std::string cell_tag(TrainingMode m, double alpha) {
  return std::string(to_string(m)) + " alpha=" + format_alpha(alpha);
}

/// Training for one sweep cell; `train` lets callers cache or log runs.
using CellRunner = std::function<AggregateReport(const TrainConfig&)>;

/// Runs every alpha x mode cell (up to `jobs` cells at once). A failing cell is
/// recorded and the sweep continues. `dp_max` defaults to the unfair baseline's
/// max DP, which is trained first; a cell's AOC is the mean of its runs'
/// threshold-curve AOCs.
inline SweepResult run_sweep(const TrainConfig& base, const std::vector<double>& alphas,
                             const std::vector<TrainingMode>& modes, std::size_t jobs, const CellRunner& runner,
                             std::optional<double> dp_max = std::nullopt) {
  if (alphas.empty() || modes.empty()) throw ConfigError("run_sweep: empty grid");
  SweepResult out;
  if (dp_max) {
    out.dp_max = *dp_max;
  } else {
    TrainConfig b = base;
    b.baseline = Baseline::unfair_mlp;
    out.baseline = runner(b);
    out.dp_max = out.baseline->max_dp;
  }
  if (!(out.dp_max > 0.0)) throw DataError("run_sweep: reference DP is zero, AOC undefined");

  for (auto m : modes)
    for (double a : alphas) {
      SweepCell cell;
      cell.mode = m;
      cell.alpha = a;
      out.cells.push_back(cell);
    }
  parallel_for(out.cells.size(), jobs, [&](std::size_t i) {
    SweepCell& cell = out.cells[i];
    TrainConfig c = base;
    c.baseline = Baseline::none;
    c.mode = cell.mode;
    c.alpha = cell.alpha;
    try {
      cell.report = runner(c);
      const std::string tag = cell_tag(cell.mode, cell.alpha);
      cell.point = {cell.report.max_dp, cell.report.mean_accuracy, tag};
      double sum = 0.0;
      for (const auto& r : cell.report.runs) {
        sum += aoc(r.tradeoff, out.dp_max);
        for (auto p : r.tradeoff) {
          p.tag = tag + " seed=" + std::to_string(r.config.seed) + " " + p.tag;
          cell.curve.push_back(p);
        }
      }
      cell.aoc = sum / static_cast<double>(cell.report.runs.size());
      cell.ok = true;
    } catch (const Error& e) {
      cell.error = e.what();
      log::warn("sweep cell " + cell_tag(cell.mode, cell.alpha) + " failed: " + e.what());
    }
  });

  for (auto m : modes) {
    std::vector<TradeoffPoint> pts;
    for (const auto& c : out.cells)
      if (c.ok && c.mode == m) pts.push_back(c.point);
    if (!pts.empty()) out.aoc_per_mode[std::string(to_string(m))] = aoc(pts, out.dp_max);
  }
  return out;
}

inline nlohmann::json to_json(const SweepResult& s) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : s.cells) {
    nlohmann::json j{{"mode", std::string(to_string(c.mode))}, {"alpha", c.alpha}, {"ok", c.ok}};
    if (c.ok) {
      j["max_dp"] = c.report.max_dp;
      j["mean_accuracy"] = c.report.mean_accuracy;
      j["aoc"] = c.aoc;
    } else {
      j["error"] = c.error;
    }
    cells.push_back(j);
  }
  nlohmann::json j{{"dp_max", s.dp_max}, {"aoc_per_mode", s.aoc_per_mode}, {"cells", cells}};
  if (s.baseline) j["baseline"] = {{"max_dp", s.baseline->max_dp}, {"mean_accuracy", s.baseline->mean_accuracy}};
  return j;
}

inline void write_series(const fs::path& path, const std::vector<std::pair<double, double>>& xy) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  for (const auto& [x, y] : xy) out << csv::format_double(x) << ' ' << csv::format_double(y) << '\n';
}

/// Writes points.csv, frontier.csv, frontier_<mode>.csv, curves.csv, aoc.json
/// and plot/ series files with a README describing their axes.
inline void write_sweep_outputs(const fs::path& dir, const SweepResult& s) {
  fs::create_directories(dir / "plot");
  write_points_csv((dir / "points.csv").string(), s.points());
  write_points_csv((dir / "frontier.csv").string(), pareto_frontier(s.points()));
  std::vector<TradeoffPoint> curves;
  for (const auto& c : s.cells) curves.insert(curves.end(), c.curve.begin(), c.curve.end());
  write_points_csv((dir / "curves.csv").string(), curves);
  write_json((dir / "aoc.json").string(), to_json(s));

  std::vector<std::string> series;
  std::map<std::string, std::vector<TradeoffPoint>> by_mode;
  std::map<std::string, std::vector<std::pair<double, double>>> aoc_by_mode;
  for (const auto& c : s.cells) {
    if (!c.ok) continue;
    const std::string m(to_string(c.mode));
    by_mode[m].push_back(c.point);
    aoc_by_mode[m].push_back({c.alpha, c.aoc});
    std::vector<std::pair<double, double>> xy;
    for (const auto& p : pareto_frontier(c.curve)) xy.push_back({p.dp, p.accuracy});
    const std::string name = "threshold_frontier_" + m + "_alpha_" + format_alpha(c.alpha) + ".txt";
    write_series(dir / "plot" / name, xy);
    series.push_back(name);
  }
  for (auto& [m, pts] : by_mode) {
    write_points_csv((dir / ("frontier_" + m + ".csv")).string(), pareto_frontier(pts));
    std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.dp < b.dp; });
    std::vector<std::pair<double, double>> xy;
    for (const auto& p : pts) xy.push_back({p.dp, p.accuracy});
    write_series(dir / "plot" / ("tradeoff_" + m + ".txt"), xy);
    auto a = aoc_by_mode[m];
    std::sort(a.begin(), a.end());
    write_series(dir / "plot" / ("aoc_vs_alpha_" + m + ".txt"), a);
  }
  if (s.baseline) write_series(dir / "plot" / "baseline.txt", {{s.baseline->max_dp, s.baseline->mean_accuracy}});

  std::ofstream readme(dir / "plot" / "README.md");
  readme << "# Plot data\n\n"
            "Whitespace-separated columns, one point per line, no header.\n\n"
            "| file | x | y |\n|---|---|---|\n"
            "| `tradeoff_<mode>.txt` | max demographic parity over runs (threshold 0.5) | mean test accuracy; one "
            "line per alpha, sorted by x |\n"
            "| `aoc_vs_alpha_<mode>.txt` | alpha | mean per-run AOC of the threshold curve |\n"
            "| `threshold_frontier_<mode>_alpha_<a>.txt` | demographic parity | test accuracy; Pareto frontier of "
            "the decision-threshold points of all runs |\n"
            "| `baseline.txt` | max demographic parity of the unfair MLP | its mean test accuracy |\n\n"
            "AOC reference DP (x-range upper bound): "
         << csv::format_double(s.dp_max) << "\n";
}

}  // namespace fairtab
