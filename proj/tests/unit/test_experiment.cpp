#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "fairtab/experiment.hpp"
#include "helpers.hpp"

using namespace fairtab;

namespace {

// Aggregate whose runs all sit at (dp, acc) with a two-point threshold curve.
AggregateReport fake_aggregate(const TrainConfig& c, double dp, double acc) {
  RunReport r;
  r.config = c;
  r.test.accuracy = acc;
  r.test.dp = dp;
  r.tradeoff = {{dp, acc, "t=0.5"}, {dp / 2, acc - 0.1, "t=0.7"}};
  return aggregate({r, r});
}

}  // namespace

TEST(ExperimentConfig, ParsesAndResolvesRelativePaths) {
  const auto j = nlohmann::json::parse(R"({
    "dataset": "german",
    "data": {"csv": "d/german.csv", "schema": "s/german.schema.json", "split_seed": 3},
    "train": {"alpha": 2.5, "mode": "self-supervised", "epochs": 7},
    "runs": 3,
    "sweep": {"alphas": [0.1, 1], "modes": ["supervised"]},
    "out": "o"
  })");
  const auto c = experiment_config_from_json(j, "/base");
  EXPECT_EQ(c.data.csv, "/base/d/german.csv");
  EXPECT_EQ(c.data.schema, "/base/s/german.schema.json");
  EXPECT_EQ(c.data.split_seed, 3u);
  EXPECT_EQ(c.train.batch_size, 64u);
  EXPECT_EQ(c.train.encoder, (std::vector<std::size_t>{32, 32, 32}));
  EXPECT_DOUBLE_EQ(c.train.alpha, 2.5);
  EXPECT_EQ(c.train.mode, TrainingMode::self_supervised);
  EXPECT_EQ(c.train.epochs, 7u);
  EXPECT_EQ(c.runs, 3u);
  EXPECT_EQ(c.alphas, (std::vector<double>{0.1, 1}));
  ASSERT_EQ(c.modes.size(), 1u);
  EXPECT_EQ(c.out, "o");

  const auto again = experiment_config_from_json(to_json(c), "/elsewhere");
  EXPECT_EQ(again.data.csv, c.data.csv);
  EXPECT_EQ(to_json(again), to_json(c));
}

TEST(ExperimentConfig, ShippedConfigsMatchPublishedSettings) {
  struct Case {
    std::string name;
    std::vector<std::size_t> encoder;
    std::size_t batch;
  };
  for (const auto& k : {Case{"adult", {64, 64, 64}, 256}, Case{"german", {32, 32, 32}, 64},
                        Case{"health", {128, 64, 64}, 256}}) {
    const auto c = load_experiment_config(testutil::source_path("configs/" + k.name + ".json"));
    EXPECT_EQ(c.train.dataset, k.name);
    EXPECT_EQ(c.train.encoder, k.encoder) << k.name;
    EXPECT_EQ(c.train.classifier, (std::vector<std::size_t>{16})) << k.name;
    EXPECT_EQ(c.train.epochs, 100u);
    EXPECT_DOUBLE_EQ(c.train.lr, 1e-3);
    EXPECT_DOUBLE_EQ(c.train.tau, 1.0);
    EXPECT_EQ(c.train.batch_size, k.batch);
    EXPECT_EQ(c.runs, 5u);
    EXPECT_EQ(c.alphas, (std::vector<double>{0.1, 0.5, 1, 2, 5, 10}));
    EXPECT_EQ(c.modes.size(), 2u);
  }
}

TEST(ExperimentConfig, ValidationNamesMissingFiles) {
  ExperimentConfig c;
  c.data.csv = "/definitely/missing.csv";
  c.data.schema = testutil::source_path("schemas/adult.schema.json");
  try {
    validate(c, false);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("/definitely/missing.csv"), std::string::npos);
  }
  c.data.synthetic = SyntheticSpec{};
  EXPECT_NO_THROW(validate(c, false));
  EXPECT_THROW(validate(c, true), ConfigError);  // empty grids
  c.alphas = {1.0};
  EXPECT_THROW(validate(c, true), ConfigError);
  c.modes = {TrainingMode::supervised};
  EXPECT_NO_THROW(validate(c, true));
  c.alphas = {-1.0};
  EXPECT_THROW(validate(c, true), ConfigError);
}

TEST(ExperimentConfig, MalformedJsonIsConfigError) {
  EXPECT_THROW(experiment_config_from_json(nlohmann::json::parse(R"({"runs": "five"})")), ConfigError);
  EXPECT_THROW(experiment_config_from_json(nlohmann::json::parse(R"({"dataset": "mnist"})")), ConfigError);
  EXPECT_THROW(load_experiment_config("/no/such/config.json"), ConfigError);
}

TEST(ExperimentConfig, DataDirFallback) {
  const auto dir = testutil::temp_dir("datadir");
  std::ofstream(dir / "thing.csv") << "a\n1\n";
  setenv("FAIRTAB_DATA_DIR", dir.c_str(), 1);
  EXPECT_EQ(resolve_data_path("/nowhere/thing.csv"), (dir / "thing.csv").string());
  EXPECT_EQ(resolve_data_path("/nowhere/other.csv"), "/nowhere/other.csv");
  unsetenv("FAIRTAB_DATA_DIR");
  EXPECT_EQ(resolve_data_path("/nowhere/thing.csv"), "/nowhere/thing.csv");
}

TEST(RunSweep, BaselineSetsReferenceAndAocPerMode) {
  TrainConfig base;
  std::map<std::pair<int, double>, std::pair<double, double>> table{
      {{0, 0.5}, {0.10, 0.80}}, {{0, 2.0}, {0.05, 0.78}}, {{1, 0.5}, {0.15, 0.82}}, {{1, 2.0}, {0.12, 0.81}}};
  const auto runner = [&](const TrainConfig& c) {
    if (c.baseline == Baseline::unfair_mlp) return fake_aggregate(c, 0.2, 0.85);
    EXPECT_EQ(c.baseline, Baseline::none);
    const auto [dp, acc] = table.at({static_cast<int>(c.mode), c.alpha});
    return fake_aggregate(c, dp, acc);
  };
  const std::vector<TrainingMode> modes{TrainingMode::supervised, TrainingMode::self_supervised};
  const auto r = run_sweep(base, {0.5, 2.0}, modes, 2, runner);
  ASSERT_TRUE(r.baseline);
  EXPECT_DOUBLE_EQ(r.dp_max, 0.2);
  ASSERT_EQ(r.cells.size(), 4u);
  EXPECT_EQ(r.points().size(), 4u);

  // supervised: frontier (0.05, 0.78), (0.10, 0.80); step curve over [0, 0.2]
  const double sup = 0.78 * 0.10 / 0.2 + 0.80 * 0.10 / 0.2;
  EXPECT_NEAR(r.aoc_per_mode.at("supervised"), sup, 1e-12);
  // self-supervised: frontier (0.12, 0.81), (0.15, 0.82)
  const double self = (0.81 * 0.15 + 0.82 * 0.05) / 0.2;
  EXPECT_NEAR(r.aoc_per_mode.at("self-supervised"), self, 1e-12);

  // per-cell AOC: each run has points (dp/2, acc-0.1) and (dp, acc)
  for (const auto& c : r.cells) {
    ASSERT_TRUE(c.ok);
    const double dp = c.point.dp, acc = c.point.accuracy;
    const double expect = ((acc - 0.1) * dp + acc * (0.2 - dp)) / 0.2;
    EXPECT_NEAR(c.aoc, expect, 1e-12) << cell_tag(c.mode, c.alpha);
    EXPECT_EQ(c.curve.size(), 4u);
  }
}

TEST(RunSweep, SingletonGridIsConstantExtension) {
  const auto runner = [](const TrainConfig& c) { return fake_aggregate(c, 0.07, 0.9); };
  const auto r = run_sweep(TrainConfig{}, {1.0}, {TrainingMode::supervised}, 1, runner, 0.3);
  EXPECT_FALSE(r.baseline);
  ASSERT_EQ(r.points().size(), 1u);
  EXPECT_NEAR(r.aoc_per_mode.at("supervised"), 0.9, 1e-15);
}

TEST(RunSweep, FailedCellIsRecordedAndSweepContinues) {
  std::vector<std::string> warnings;
  log::ScopedSink sink([&](std::string_view m) { warnings.emplace_back(m); });
  const auto runner = [](const TrainConfig& c) {
    if (c.alpha == 5.0) throw NumericError("loss diverged");
    return fake_aggregate(c, 0.1, 0.8);
  };
  const auto r = run_sweep(TrainConfig{}, {1.0, 5.0}, {TrainingMode::supervised}, 1, runner, 0.2);
  ASSERT_EQ(r.cells.size(), 2u);
  EXPECT_TRUE(r.cells[0].ok);
  EXPECT_FALSE(r.cells[1].ok);
  EXPECT_NE(r.cells[1].error.find("loss diverged"), std::string::npos);
  EXPECT_EQ(r.points().size(), 1u);
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("alpha=5"), std::string::npos);
}

TEST(RunSweep, RejectsEmptyGridAndZeroReference) {
  const auto runner = [](const TrainConfig& c) { return fake_aggregate(c, 0.0, 0.8); };
  EXPECT_THROW(run_sweep(TrainConfig{}, {}, {TrainingMode::supervised}, 1, runner), ConfigError);
  EXPECT_THROW(run_sweep(TrainConfig{}, {1.0}, {}, 1, runner), ConfigError);
  EXPECT_THROW(run_sweep(TrainConfig{}, {1.0}, {TrainingMode::supervised}, 1, runner), DataError);
}

TEST(RunSweep, OutputsRoundTrip) {
  const auto runner = [](const TrainConfig& c) {
    return fake_aggregate(c, 0.05 + 0.01 * c.alpha, 0.8 + 0.005 * c.alpha + (c.mode == TrainingMode::supervised ? 0.01 : 0.0));
  };
  const auto r = run_sweep(TrainConfig{}, {0.1, 1, 10}, {TrainingMode::supervised, TrainingMode::self_supervised}, 1,
                           runner, 0.25);
  const auto dir = testutil::temp_dir("sweep_out");
  write_sweep_outputs(dir, r);
  const auto points = read_points_csv((dir / "points.csv").string());
  ASSERT_EQ(points.size(), 6u);
  for (std::size_t i = 0; i < points.size(); ++i) {
    EXPECT_EQ(points[i].dp, r.points()[i].dp);
    EXPECT_EQ(points[i].accuracy, r.points()[i].accuracy);
    EXPECT_EQ(points[i].tag, r.points()[i].tag);
  }
  const auto front = read_points_csv((dir / "frontier.csv").string());
  const auto refront = pareto_frontier(points);
  ASSERT_EQ(front.size(), refront.size());
  for (std::size_t i = 0; i < front.size(); ++i) EXPECT_EQ(front[i].tag, refront[i].tag);

  const auto j = read_json((dir / "aoc.json").string());
  EXPECT_DOUBLE_EQ(j.at("dp_max").get<double>(), 0.25);
  EXPECT_DOUBLE_EQ(j.at("aoc_per_mode").at("supervised").get<double>(), r.aoc_per_mode.at("supervised"));
  for (const auto* f : {"tradeoff_supervised.txt", "tradeoff_self-supervised.txt", "aoc_vs_alpha_supervised.txt",
                        "README.md"})
    EXPECT_TRUE(std::filesystem::exists(dir / "plot" / f)) << f;

  std::ifstream series(dir / "plot" / "aoc_vs_alpha_supervised.txt");
  double a = 0, v = 0;
  std::size_t lines = 0;
  while (series >> a >> v) ++lines;
  EXPECT_EQ(lines, 3u);
  EXPECT_DOUBLE_EQ(a, 10.0);
}
