#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "fairtab/experiment.hpp"
#include "fairtab/theory/plan.hpp"

namespace fs = std::filesystem;
using namespace fairtab;

namespace {

constexpr int kOk = 0;
constexpr int kRuntime = 1;
constexpr int kUsage = 2;

struct Flags {
  std::string config;
  std::string dataset;
  std::string data;
  std::string schema;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> runs;
  std::optional<std::size_t> jobs;
  std::optional<std::size_t> epochs;
  std::optional<double> alpha;
  std::string mode;
  std::string sampler;
  std::string baseline;
  std::string alphas;
  std::string in;
};

void add_shared(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "experiment config (JSON)");
  cmd->add_option("--dataset", f.dataset, "adult | german | health | synthetic");
  cmd->add_option("--data", f.data, "dataset CSV");
  cmd->add_option("--schema", f.schema, "schema JSON");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--seed", f.seed, "first seed");
  cmd->add_option("--runs", f.runs, "number of seeds");
  cmd->add_option("--jobs", f.jobs, "concurrent runs or sweep cells");
  cmd->add_option("--epochs", f.epochs, "training epochs");
  cmd->add_option("--alpha", f.alpha, "weight of the contrastive term");
  cmd->add_option("--mode", f.mode, "supervised | self-supervised");
  cmd->add_option("--sampler", f.sampler, "fair | counterfactual | none");
  cmd->add_option("--baseline", f.baseline, "unfair-mlp");
}

/// Shipped config for `dataset`, looked up next to the source tree.
std::string shipped_config(const std::string& dataset) {
  const fs::path p = fs::path(FAIRTAB_SOURCE_DIR) / "configs" / (dataset + ".json");
  return fs::exists(p) ? p.string() : std::string();
}

ExperimentConfig resolve_config(const Flags& f) {
  std::string path = f.config;
  if (path.empty() && !f.dataset.empty()) path = shipped_config(f.dataset);
  ExperimentConfig c;
  if (!path.empty()) {
    c = load_experiment_config(path);
  } else {
    c.train = default_config(f.dataset.empty() ? "adult" : f.dataset);
  }
  if (!f.dataset.empty() && f.dataset != c.train.dataset) {
    const auto keep = c;
    c.train = default_config(f.dataset);
    c.train.alpha = keep.train.alpha;
    c.train.mode = keep.train.mode;
    c.train.sampler = keep.train.sampler;
    c.data = {};
  }
  if (!f.data.empty()) {
    c.data.csv = f.data;
    c.data.synthetic.reset();
  }
  if (!f.schema.empty()) c.data.schema = f.schema;
  if (c.train.dataset == "synthetic" && c.data.csv.empty() && !c.data.synthetic) c.data.synthetic = SyntheticSpec{};
  if (!c.data.synthetic) {
    if (c.data.csv.empty()) c.data.csv = c.train.dataset + ".csv";
    if (c.data.schema.empty())
      c.data.schema = (fs::path(FAIRTAB_SOURCE_DIR) / "schemas" / (c.train.dataset + ".schema.json")).string();
  }
  if (!f.out.empty()) c.out = f.out;
  if (f.seed) c.train.seed = *f.seed;
  if (f.runs) c.runs = *f.runs;
  if (f.jobs) c.jobs = *f.jobs;
  if (f.epochs) c.train.epochs = *f.epochs;
  if (f.alpha) c.train.alpha = *f.alpha;
  if (!f.mode.empty()) c.train.mode = training_mode_from_string(f.mode);
  if (!f.sampler.empty()) c.train.sampler = pair_mode_from_string(f.sampler);
  if (!f.baseline.empty()) c.train.baseline = baseline_from_string(f.baseline);
  return c;
}

void print_aggregate(const std::string& label, const AggregateReport& a) {
  std::cout << label << ": mean accuracy " << a.mean_accuracy << ", max DP " << a.max_dp << " over " << a.runs.size()
            << " run(s)\n";
}

int cmd_prepare(const Flags& f) {
  auto c = resolve_config(f);
  if (c.data.synthetic) throw ConfigError("prepare needs a CSV dataset");
  if (c.data.schema.empty()) throw ConfigError("prepare needs --schema");
  if (!fs::exists(c.data.schema)) throw ConfigError("schema file not found: " + c.data.schema);
  validate(c, false);
  const fs::path out = f.out.empty() ? fs::path("prepared") / c.train.dataset : fs::path(f.out);
  const auto prepared = prepare_csv(c.data.csv, load_schema(c.data.schema), c.data.fractions, c.data.split_seed);
  fs::create_directories(out);
  write_dataset_csv((out / "train.csv").string(), prepared.splits.train);
  write_dataset_csv((out / "val.csv").string(), prepared.splits.val);
  write_dataset_csv((out / "test.csv").string(), prepared.splits.test);
  write_json((out / "stats.json").string(), {{"source", c.data.csv},
                                             {"schema", c.data.schema},
                                             {"split", c.data.fractions},
                                             {"split_seed", c.data.split_seed},
                                             {"rows_read", prepared.rows_read},
                                             {"rows_dropped", prepared.rows_dropped},
                                             {"warnings", prepared.warnings},
                                             {"fit", to_json(prepared.stats)}});
  nlohmann::json groups;
  for (const auto& [name, d] : {std::pair<std::string, const Dataset*>{"train", &prepared.splits.train},
                                {"val", &prepared.splits.val},
                                {"test", &prepared.splits.test}}) {
    const auto idx = subgroup_index(*d);
    nlohmann::json g;
    for (int y = 0; y < 2; ++y)
      for (int s = 0; s < 2; ++s) g["y" + std::to_string(y) + "_s" + std::to_string(s)] = idx(y, s).size();
    g["total"] = d->size();
    groups[name] = g;
  }
  write_json((out / "subgroups.json").string(), groups);
  std::cout << "prepared " << prepared.rows_read - prepared.rows_dropped << " rows (" << prepared.rows_dropped
            << " dropped) into " << out.string() << "\n";
  for (const auto& w : prepared.warnings) std::cerr << "warning: " << w << '\n';
  return kOk;
}

int cmd_train(const Flags& f) {
  auto c = resolve_config(f);
  validate(c, false);
  const Splits splits = load_splits(c.data);
  const fs::path out = c.out;
  fs::create_directories(out);
  write_json((out / "config.json").string(), to_json(c));
  const auto agg = run_experiment(splits, c.train, c.runs, c.jobs, [&](const TrainResult& r) {
    const fs::path dir = out / ("seed_" + std::to_string(r.report.config.seed));
    fs::create_directories(dir);
    write_json((dir / "report.json").string(), to_json(r.report));
    write_json((dir / "model.json").string(), to_json(r.model));
    write_representations_csv((dir / "representations_test.csv").string(), r.model, splits.test);
  });
  write_json((out / "aggregate.json").string(), to_json(agg));
  print_aggregate(std::string(c.train.baseline == Baseline::unfair_mlp ? to_string(c.train.baseline)
                                                                       : to_string(c.train.mode)),
                  agg);
  return kOk;
}

int cmd_sweep(const Flags& f) {
  auto c = resolve_config(f);
  if (!f.alphas.empty()) {
    c.alphas.clear();
    std::stringstream ss(f.alphas);
    for (std::string tok; std::getline(ss, tok, ',');) {
      try {
        c.alphas.push_back(std::stod(tok));
      } catch (const std::exception&) {
        throw ConfigError("bad value in --alphas: '" + tok + "'");
      }
    }
  }
  if (!f.mode.empty()) c.modes = {training_mode_from_string(f.mode)};
  validate(c, true);
  const Splits splits = load_splits(c.data);
  const fs::path out = c.out;
  fs::create_directories(out);
  write_json((out / "config.json").string(), to_json(c));

  const auto runner = [&](const TrainConfig& tc) {
    const std::string name = tc.baseline == Baseline::unfair_mlp
                                 ? std::string("baseline")
                                 : std::string(to_string(tc.mode)) + "_alpha_" + format_alpha(tc.alpha);
    const fs::path dir = out / "cells" / name;
    fs::create_directories(dir);
    const auto agg = run_experiment(splits, tc, c.runs, 1);
    write_json((dir / "aggregate.json").string(), to_json(agg));
    return agg;
  };
  const auto result = run_sweep(c.train, c.alphas, c.modes, c.jobs, runner);
  write_sweep_outputs(out, result);
  if (result.baseline) print_aggregate("unfair-mlp", *result.baseline);
  std::size_t failed = 0;
  for (const auto& cell : result.cells) {
    if (cell.ok) {
      std::cout << cell_tag(cell.mode, cell.alpha) << ": max DP " << cell.point.dp << ", mean accuracy "
                << cell.point.accuracy << ", AOC " << cell.aoc << "\n";
    } else {
      ++failed;
      std::cout << cell_tag(cell.mode, cell.alpha) << ": FAILED " << cell.error << "\n";
    }
  }
  for (const auto& [mode, a] : result.aoc_per_mode) std::cout << "AOC " << mode << ": " << a << "\n";
  return failed == result.cells.size() ? kRuntime : kOk;
}

int cmd_verify_theory(const Flags& f) {
  std::string path = f.config;
  if (path.empty()) path = (fs::path(FAIRTAB_SOURCE_DIR) / "configs" / "theory_default.json").string();
  const auto report = theory::run_plan(theory::read_plan(path));
  for (const auto& ch : report.checks) {
    std::cout << (ch.pass ? "PASS " : "FAIL ") << ch.name << " (" << ch.type << ")";
    if (!ch.diagnostic.empty()) std::cout << ": " << ch.diagnostic;
    std::cout << "\n";
  }
  if (!f.out.empty()) {
    fs::create_directories(f.out);
    write_json((fs::path(f.out) / "theory_report.json").string(), nlohmann::json(report));
  }
  return report.all_pass() ? kOk : kRuntime;
}

int cmd_report(const Flags& f) {
  const fs::path dir = f.in.empty() ? fs::path(f.out) : fs::path(f.in);
  if (dir.empty()) throw ConfigError("report needs --in DIR");
  bool found = false;
  if (fs::exists(dir / "aggregate.json")) {
    print_aggregate(dir.string(), aggregate_report_from_json(read_json((dir / "aggregate.json").string())));
    found = true;
  }
  if (fs::exists(dir / "points.csv")) {
    const auto points = read_points_csv((dir / "points.csv").string());
    const auto frontier = pareto_frontier(points);
    write_points_csv((dir / "frontier.csv").string(), frontier);
    std::cout << points.size() << " points, " << frontier.size() << " on the frontier\n";
    for (const auto& p : frontier) std::cout << "  " << p.tag << ": dp " << p.dp << ", accuracy " << p.accuracy << "\n";
    if (fs::exists(dir / "aoc.json")) {
      const auto j = read_json((dir / "aoc.json").string());
      const double dp_max = j.at("dp_max").get<double>();
      std::cout << "AOC of all points (reference DP " << dp_max << "): " << aoc(points, dp_max) << "\n";
      for (auto it = j.at("aoc_per_mode").begin(); it != j.at("aoc_per_mode").end(); ++it)
        std::cout << "AOC " << it.key() << ": " << it.value().get<double>() << "\n";
    }
    found = true;
  }
  if (!found) throw ConfigError("no aggregate.json or points.csv in " + dir.string());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fairtab: fairness-aware contrastive learning on tabular data"};
  app.require_subcommand(1);
  Flags f;

  auto* prepare = app.add_subcommand("prepare", "split and preprocess a CSV dataset");
  auto* train = app.add_subcommand("train", "train over several seeds and write reports");
  auto* sweep = app.add_subcommand("sweep", "alpha x mode grid with trade-off points and AOC");
  auto* theory = app.add_subcommand("verify-theory", "run a theory check plan");
  auto* report = app.add_subcommand("report", "summarize a train or sweep output directory");
  for (auto* cmd : {prepare, train, sweep}) add_shared(cmd, f);
  sweep->add_option("--alphas", f.alphas, "comma-separated alpha grid");
  theory->add_option("--config", f.config, "check plan (JSON)");
  theory->add_option("--out", f.out, "write theory_report.json here");
  report->add_option("--in", f.in, "output directory of train or sweep")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*prepare) return cmd_prepare(f);
    if (*train) return cmd_train(f);
    if (*sweep) return cmd_sweep(f);
    if (*theory) return cmd_verify_theory(f);
    if (*report) return cmd_report(f);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kUsage;
}
