#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "fairtab/data/csv.hpp"
#include "fairtab/data/io.hpp"
#include "fairtab/data/pipeline.hpp"
#include "fairtab/data/preprocess.hpp"
#include "fairtab/data/schema.hpp"
#include "fairtab/data/split.hpp"
#include "fairtab/data/synthetic.hpp"
#include "fairtab/log.hpp"
#include "helpers.hpp"

using namespace fairtab;

namespace {

Schema toy_schema() {
  return schema_from_json(nlohmann::json::parse(R"({
    "name": "toy",
    "columns": [{"name": "x", "kind": "continuous"},
                {"name": "color", "kind": "categorical", "vocabulary": ["a", "b"]},
                {"name": "sex", "kind": "categorical"}],
    "label": {"column": "label", "favorable": ["yes"], "unfavorable": ["no"]},
    "sensitive": {"column": "sex", "privileged": ["M"], "unprivileged": ["F"]}
  })"));
}

RawTable toy_raw(const std::string& body) {
  std::istringstream in("x,color,sex,label\n" + body);
  return raw_from_table(csv::read(in, "toy"), toy_schema(), "toy");
}

// Counts rows per (y, s) cell.
std::array<std::size_t, 4> cell_counts(const std::vector<int>& y, const std::vector<int>& s,
                                       const std::vector<std::size_t>& rows) {
  std::array<std::size_t, 4> c{};
  for (auto r : rows) ++c[static_cast<std::size_t>(2 * y[r] + s[r])];
  return c;
}

}  // namespace

TEST(Csv, SplitsQuotedFields) {
  const auto f = csv::split_record(R"(a,"b,c","d ""e""",  f )");
  ASSERT_EQ(f.size(), 4u);
  EXPECT_EQ(f[1], "b,c");
  EXPECT_EQ(f[2], "d \"e\"");
  EXPECT_EQ(f[3], "f");
}

TEST(Csv, EmptyInputIsAnError) {
  std::istringstream in("");
  EXPECT_THROW(csv::read(in), DataError);
}

TEST(Csv, DoubleFormattingRoundTrips) {
  for (double v : {0.1, -1.0 / 3.0, 1e-300, 12345.678901234567}) EXPECT_EQ(*csv::parse_double(csv::format_double(v)), v);
  EXPECT_FALSE(csv::parse_double("abc"));
  EXPECT_FALSE(csv::parse_double("1.5x"));
}

TEST(Schema, RejectsLabelListedAsFeature) {
  auto j = to_json(toy_schema());
  j["columns"].push_back({{"name", "label"}, {"kind", "categorical"}});
  EXPECT_THROW(schema_from_json(j), ConfigError);
}

TEST(Schema, JsonRoundTrip) {
  const Schema s = toy_schema();
  EXPECT_EQ(to_json(schema_from_json(to_json(s))), to_json(s));
}

TEST(Schema, ShippedSchemasLoad) {
  for (const auto* name : {"adult", "german", "health"}) {
    const Schema s = load_schema(testutil::source_path(std::string("schemas/") + name + ".schema.json"));
    EXPECT_EQ(s.name, name);
  }
  EXPECT_THROW(load_schema("/nonexistent/schema.json"), ConfigError);
}

TEST(LoadCsv, SingleValidRow) {
  const auto raw = toy_raw("1.5,a,M,yes\n");
  EXPECT_EQ(raw.size(), 1u);
  EXPECT_EQ(raw.y[0], 1);
  EXPECT_EQ(raw.s[0], 1);
}

TEST(LoadCsv, DropsUnparseableRowsWithCounts) {
  const auto raw = toy_raw("1,a,M,yes\nzz,a,F,no\n2,b,F,no\n3,a,M\n");
  EXPECT_EQ(raw.size(), 2u);
  EXPECT_EQ(raw.rows_read, 4u);
  EXPECT_EQ(raw.rows_dropped, 2u);
}

TEST(LoadCsv, UnmappableLabelOrSensitiveIsAnError) {
  EXPECT_THROW(toy_raw("1,a,M,maybe\n"), DataError);
  EXPECT_THROW(toy_raw("1,a,X,yes\n"), DataError);
}

TEST(LoadCsv, MissingColumnIsAnError) {
  std::istringstream in("x,sex,label\n1,M,yes\n");
  EXPECT_THROW(raw_from_table(csv::read(in), toy_schema(), "t"), DataError);
}

TEST(Preprocess, ZScoresWithPopulationStd) {
  const auto res = preprocess(toy_raw("1,a,M,yes\n2,b,F,no\n3,a,F,no\n"), toy_schema());
  const double z = std::sqrt(1.5);  // (3 - 2) / sqrt(2/3)
  EXPECT_NEAR(res.data.X(0, 0), -z, 1e-12);
  EXPECT_NEAR(res.data.X(1, 0), 0.0, 1e-12);
  EXPECT_NEAR(res.data.X(2, 0), z, 1e-12);
  EXPECT_NEAR(res.data.X(0, 0), -1.2247, 1e-4);
}

TEST(Preprocess, OneHotUsesSchemaVocabulary) {
  const auto res = preprocess(toy_raw("1,a,M,yes\n2,b,F,no\n"), toy_schema());
  const auto& names = res.data.feature_names;
  const auto pos = std::find(names.begin(), names.end(), "color=a") - names.begin();
  ASSERT_LT(pos, static_cast<long>(names.size()));
  EXPECT_EQ(res.data.X(0, pos), 1.0);
  EXPECT_EQ(res.data.X(0, pos + 1), 0.0);
  EXPECT_EQ(res.data.X(1, pos), 0.0);
  EXPECT_EQ(res.data.X(1, pos + 1), 1.0);
}

TEST(Preprocess, OneHotGroupsSumToOne) {
  const auto res = preprocess(toy_raw("1,a,M,yes\n2,b,F,no\n5,b,M,no\n"), toy_schema());
  // columns: x, color=a, color=b, sex=F, sex=M (or sex order as fitted)
  for (Index i = 0; i < res.data.X.rows(); ++i) {
    EXPECT_EQ(res.data.X(i, 1) + res.data.X(i, 2), 1.0);
    EXPECT_EQ(res.data.X(i, 3) + res.data.X(i, 4), 1.0);
  }
}

TEST(Preprocess, TrainStatsReappliedGiveIdenticalValues) {
  const auto raw = toy_raw("1,a,M,yes\n2,b,F,no\n4,a,F,no\n");
  const auto fitted = preprocess(raw, toy_schema());
  const auto applied = preprocess(raw, toy_schema(), fitted.stats);
  EXPECT_EQ(applied.data.X, fitted.data.X);
  const auto reloaded = fit_stats_from_json(nlohmann::json::parse(to_json(fitted.stats).dump()));
  EXPECT_EQ(preprocess(raw, toy_schema(), reloaded).data.X, fitted.data.X);
}

TEST(Preprocess, MissingValuesImputedAndSlotted) {
  std::vector<std::string> warned;
  log::ScopedSink sink([&](std::string_view m) { warned.emplace_back(m); });
  const auto res = preprocess(toy_raw("1,a,M,yes\n?,b,F,no\n3,?,F,no\n5,a,M,no\n"), toy_schema());
  // median of {1, 3, 5} is 3; mean 3 -> imputed value sits at 0
  EXPECT_NEAR(res.data.X(1, 0), (3.0 - 3.0) / 1.0, 1e-12);
  const auto& names = res.data.feature_names;
  EXPECT_NE(std::find(names.begin(), names.end(), "color=missing"), names.end());
}

TEST(Preprocess, UnseenCategoryAndConstantColumnWarn) {
  std::vector<std::string> warned;
  log::ScopedSink sink([&](std::string_view m) { warned.emplace_back(m); });
  const auto schema = schema_from_json(nlohmann::json::parse(R"({
    "name": "t", "columns": [{"name": "x", "kind": "continuous"}, {"name": "c", "kind": "categorical"}],
    "label": {"column": "y", "favorable": ["1"], "unfavorable": ["0"]},
    "sensitive": {"column": "g", "privileged": ["p"], "unprivileged": ["u"]}})"));
  std::istringstream train_in("x,c,g,y\n2,u,p,1\n2,v,u,0\n");
  const auto fitted = preprocess(raw_from_table(csv::read(train_in), schema, "train"), schema);
  EXPECT_EQ(fitted.data.X(0, 0), 0.0);
  EXPECT_EQ(fitted.data.X(1, 0), 0.0);
  std::istringstream test_in("x,c,g,y\n7,w,p,1\n");
  const auto applied = preprocess(raw_from_table(csv::read(test_in), schema, "test"), schema, fitted.stats);
  EXPECT_EQ(applied.data.X(0, 1), 0.0);
  EXPECT_EQ(applied.data.X(0, 2), 0.0);
  EXPECT_GE(warned.size(), 2u);
}

TEST(Preprocess, ThresholdSensitiveAddsIndicatorColumn) {
  const auto schema = schema_from_json(nlohmann::json::parse(R"({
    "name": "t", "columns": [{"name": "age", "kind": "continuous"}],
    "label": {"column": "y", "favorable": ["1"], "unfavorable": ["2"]},
    "sensitive": {"column": "age", "threshold": 25, "privileged_above": true}})"));
  std::istringstream in("age,y\n20,1\n25,2\n26,1\n60,2\n");
  const auto res = preprocess(raw_from_table(csv::read(in), schema, "t"), schema);
  EXPECT_EQ(res.data.s, (std::vector<int>{0, 0, 1, 1}));
  EXPECT_EQ(res.data.dim(), 2);
  EXPECT_EQ(res.data.sensitive.kind, SensitiveEncoding::Kind::indicator);
  EXPECT_EQ(res.data.X(2, 1), 1.0);
  const auto flipped = counterfactual_flip(res.data);
  EXPECT_EQ(flipped.X(2, 1), 0.0);
  EXPECT_EQ(flipped.X.col(0), res.data.X.col(0));
}

TEST(Preprocess, DropSensitiveFeatures) {
  auto j = to_json(toy_schema());
  j["drop_sensitive_features"] = true;
  const auto schema = schema_from_json(j);
  std::istringstream in("x,color,sex,label\n1,a,M,yes\n2,b,F,no\n");
  const auto res = preprocess(raw_from_table(csv::read(in), schema, "t"), schema);
  for (const auto& n : res.data.feature_names) EXPECT_EQ(n.find("sex"), std::string::npos);
  EXPECT_EQ(res.data.sensitive.kind, SensitiveEncoding::Kind::none);
}

TEST(Split, SizesFor100Rows) {
  std::vector<int> y(100), s(100);
  for (int i = 0; i < 100; ++i) {
    y[static_cast<std::size_t>(i)] = i % 3 == 0;
    s[static_cast<std::size_t>(i)] = i % 2;
  }
  const auto idx = split_indices(y, s, {0.7, 0.15, 0.15}, 1);
  EXPECT_EQ(idx.train.size(), 70u);
  EXPECT_EQ(idx.val.size(), 15u);
  EXPECT_EQ(idx.test.size(), 15u);
}

TEST(Split, DisjointCoveringDeterministicAndStratified) {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    Rng rng(seed);
    const std::size_t n = 200 + rng.index(800);
    std::vector<int> y(n), s(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = rng.bernoulli(0.3);
      s[i] = rng.bernoulli(0.6);
    }
    const auto idx = split_indices(y, s, {0.7, 0.15, 0.15}, seed);
    const auto again = split_indices(y, s, {0.7, 0.15, 0.15}, seed);
    EXPECT_EQ(idx.train, again.train);
    EXPECT_EQ(idx.test, again.test);
    std::set<std::size_t> all(idx.train.begin(), idx.train.end());
    all.insert(idx.val.begin(), idx.val.end());
    all.insert(idx.test.begin(), idx.test.end());
    EXPECT_EQ(all.size(), n);
    EXPECT_EQ(idx.train.size() + idx.val.size() + idx.test.size(), n);

    std::vector<std::size_t> everything(n);
    for (std::size_t i = 0; i < n; ++i) everything[i] = i;
    const auto full = cell_counts(y, s, everything);
    for (const auto* part : {&idx.train, &idx.val, &idx.test}) {
      const auto c = cell_counts(y, s, *part);
      for (std::size_t k = 0; k < 4; ++k) {
        const double expect = static_cast<double>(full[k]) * static_cast<double>(part->size()) / static_cast<double>(n);
        EXPECT_LE(std::abs(static_cast<double>(c[k]) - expect), 2.0) << "cell " << k;
        EXPECT_LE(std::abs(static_cast<double>(c[k]) / part->size() - static_cast<double>(full[k]) / n), 0.05);
      }
    }
  }
}

TEST(Split, EmptyTrainingSubgroupIsAnError) {
  const auto d = testutil::cell_dataset({10, 10, 10, 0}, 2, 1);
  EXPECT_THROW(split(d, {0.7, 0.15, 0.15}, 1), DataError);
}

TEST(Subgroups, SmallExample) {
  const auto idx = subgroup_index(std::vector<int>{1, 1, 0}, std::vector<int>{1, 0, 0});
  EXPECT_EQ(idx(1, 1), (std::vector<std::size_t>{0}));
  EXPECT_EQ(idx(1, 0), (std::vector<std::size_t>{1}));
  EXPECT_EQ(idx(0, 0), (std::vector<std::size_t>{2}));
  EXPECT_TRUE(idx(0, 1).empty());
}

TEST(Subgroups, SingleCellLeavesThreeEmpty) {
  const auto idx = subgroup_index(std::vector<int>(5, 0), std::vector<int>(5, 1));
  EXPECT_EQ(idx(0, 1).size(), 5u);
  EXPECT_TRUE(idx(0, 0).empty() && idx(1, 0).empty() && idx(1, 1).empty());
}

TEST(Subgroups, RandomPartitionProperty) {
  Rng rng(9);
  std::vector<int> y(500), s(500);
  for (std::size_t i = 0; i < 500; ++i) {
    y[i] = rng.bernoulli(0.4);
    s[i] = rng.bernoulli(0.5);
  }
  const auto idx = subgroup_index(y, s);
  std::set<std::size_t> seen;
  std::size_t total = 0;
  for (int yy = 0; yy <= 1; ++yy)
    for (int ss = 0; ss <= 1; ++ss)
      for (auto i : idx(yy, ss)) {
        EXPECT_EQ(y[i], yy);
        EXPECT_EQ(s[i], ss);
        seen.insert(i);
        ++total;
      }
  EXPECT_EQ(seen.size(), 500u);
  EXPECT_EQ(total, 500u);
}

namespace {

double outcome_gap(const Dataset& d) {
  double pos[2] = {0, 0}, tot[2] = {0, 0};
  for (std::size_t i = 0; i < d.size(); ++i) {
    tot[d.s[i]] += 1;
    pos[d.s[i]] += d.y[i];
  }
  return pos[1] / tot[1] - pos[0] / tot[0];
}

}  // namespace

TEST(Synthetic, OutcomeGapMatchesBias) {
  EXPECT_LT(std::abs(outcome_gap(synth_biased(10000, 6, 0.0, 0.4, 1))), 0.05);
  EXPECT_NEAR(outcome_gap(synth_biased(10000, 6, 0.3, 0.4, 2)), 0.3, 0.05);
}

TEST(Synthetic, DeterministicAndValid) {
  const auto a = synth_biased(500, 5, 0.4, 0.4, 3);
  const auto b = synth_biased(500, 5, 0.4, 0.4, 3);
  EXPECT_EQ(a.X, b.X);
  EXPECT_EQ(a.y, b.y);
  EXPECT_NO_THROW(require_all_subgroups(a.y, a.s, "synth"));
}

TEST(Synthetic, RejectsBadArguments) {
  EXPECT_THROW(synth_biased(10, 5, 0.4, 0.4, 1), ConfigError);
  EXPECT_THROW(synth_biased(100, 1, 0.4, 0.4, 1), ConfigError);
  EXPECT_THROW(synth_biased(100, 5, 0.9, 0.3, 1), DataError);
}

TEST(Counterfactual, FlipsSensitiveOnly) {
  const auto d = synth_biased(200, 4, 0.3, 0.4, 5);
  const auto f = counterfactual_flip(d);
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_EQ(f.s[i], 1 - d.s[i]);
  for (Index c = 0; c + 1 < d.dim(); ++c) EXPECT_EQ(f.X.col(c), d.X.col(c));
  EXPECT_NE(f.X.col(d.dim() - 1), d.X.col(d.dim() - 1));
  const auto back = counterfactual_flip(f);
  EXPECT_EQ(back.X, d.X);
  EXPECT_EQ(back.s, d.s);
}

TEST(Counterfactual, OneHotColumnsSwap) {
  const auto res = preprocess(toy_raw("1,a,M,yes\n2,b,F,no\n"), toy_schema());
  const auto f = counterfactual_flip(res.data);
  EXPECT_EQ(f.s, (std::vector<int>{0, 1}));
  const auto& cols = res.data.sensitive.columns;
  ASSERT_EQ(cols.size(), 2u);
  EXPECT_EQ(f.X.col(cols[0]), res.data.X.col(cols[1]));
  EXPECT_EQ(f.X.col(0), res.data.X.col(0));
}

TEST(Counterfactual, NonBinaryEncodingIsAnError) {
  Dataset d = testutil::cell_dataset({2, 2, 2, 2}, 4, 1);
  d.sensitive.kind = SensitiveEncoding::Kind::one_hot;
  d.sensitive.columns = {0, 1, 2};
  d.sensitive.group_of_column = {1, 1, 0};
  EXPECT_THROW(counterfactual_flip(d), DataError);
}

TEST(Io, DatasetCsvRoundTripIsLossless) {
  const auto d = synth_biased(100, 4, 0.3, 0.4, 6);
  const auto dir = testutil::temp_dir("io");
  const auto path = (dir / "d.csv").string();
  write_dataset_csv(path, d);
  const auto back = read_dataset_csv(path, d.sensitive);
  EXPECT_EQ(back.X, d.X);
  EXPECT_EQ(back.y, d.y);
  EXPECT_EQ(back.s, d.s);
  EXPECT_EQ(back.feature_names, d.feature_names);
}

TEST(Health, NineCategoryAgeStandIn) {
  const Schema schema = load_schema(testutil::source_path("schemas/health.schema.json"));
  const std::vector<std::string> ages{"0-9", "10-19", "20-29", "30-39", "40-49", "50-59", "60-69", "70-79", "80+"};
  const std::vector<std::string> charlson{"0", "1-2", "3-4", "5+"};
  std::ostringstream csv_text;
  csv_text << "age_group,sex,claims,los_total,drug_count,lab_count,primary_condition,specialty,CharlsonIndex\n";
  Rng rng(4);
  for (int i = 0; i < 400; ++i) {
    const std::size_t a = rng.index(9);
    csv_text << ages[a] << ',' << (rng.bernoulli(0.5) ? "M" : "F") << ',' << rng.index(20) << ',' << rng.index(10) << ','
             << rng.index(8) << ',' << rng.index(30) << ",C" << rng.index(5) << ",S" << rng.index(4) << ','
             << charlson[rng.bernoulli(a >= 5 ? 0.3 : 0.8) ? 0 : 1 + rng.index(3)] << '\n';
  }
  std::istringstream in(csv_text.str());
  const auto raw = raw_from_table(csv::read(in), schema, "health-standin");
  ASSERT_EQ(raw.size(), 400u);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto& age = raw.columns[0].strings[i];
    const auto pos = std::find(ages.begin(), ages.end(), age) - ages.begin();
    EXPECT_EQ(raw.s[i], pos < 5 ? 1 : 0);
  }
  const auto prep = prepare(raw, schema, {0.7, 0.15, 0.15}, 1);
  EXPECT_EQ(prep.splits.train.sensitive.columns.size(), 9u);
  EXPECT_FALSE(prep.splits.train.sensitive.binary());
}

TEST(RealData, AdultRowCount) {
  if (!testutil::have_data("adult.csv")) GTEST_SKIP() << "adult.csv not available";
  const Schema schema = load_schema(testutil::source_path("schemas/adult.schema.json"));
  const auto raw = load_csv(testutil::data_dir() + "/adult.csv", schema);
  EXPECT_EQ(raw.rows_read, 48842u);
  EXPECT_EQ(raw.rows_dropped, 0u);
  std::size_t male = 0;
  for (int s : raw.s) male += static_cast<std::size_t>(s);
  EXPECT_EQ(male, 32650u);
}

TEST(RealData, GermanRowCountAndAgeThreshold) {
  if (!testutil::have_data("german.csv")) GTEST_SKIP() << "german.csv not available";
  const Schema schema = load_schema(testutil::source_path("schemas/german.schema.json"));
  const auto raw = load_csv(testutil::data_dir() + "/german.csv", schema);
  EXPECT_EQ(raw.size(), 1000u);
  std::size_t age_col = 0;
  while (raw.columns[age_col].name != "age") ++age_col;
  for (std::size_t i = 0; i < raw.size(); ++i) EXPECT_EQ(raw.s[i], raw.columns[age_col].numbers[i] > 25 ? 1 : 0);
  std::size_t good = 0;
  for (int y : raw.y) good += static_cast<std::size_t>(y);
  EXPECT_EQ(good, 700u);
}
