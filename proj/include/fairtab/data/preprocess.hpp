#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairtab/data/csv.hpp"
#include "fairtab/data/dataset.hpp"
#include "fairtab/data/schema.hpp"
#include "fairtab/error.hpp"
#include "fairtab/log.hpp"

namespace fairtab {

/// Typed but untransformed feature column. Missing entries are flagged.
struct RawColumn {
  std::string name;
  ColumnKind kind = ColumnKind::continuous;
  std::vector<double> numbers;       // continuous
  std::vector<std::string> strings;  // categorical
  std::vector<char> missing;
};

struct RawTable {
  std::vector<RawColumn> columns;  // schema feature columns, schema order
  std::vector<int> y;
  std::vector<int> s;
  std::size_t rows_read = 0;
  std::size_t rows_dropped = 0;
  std::map<std::string, std::size_t> drop_reasons;
  std::string origin;

  std::size_t size() const { return y.size(); }

  template <class Indices>
  RawTable subset(const Indices& rows) const {
    RawTable out;
    out.origin = origin;
    for (const auto& c : columns) {
      RawColumn rc;
      rc.name = c.name;
      rc.kind = c.kind;
      for (auto i : rows) {
        const auto r = static_cast<std::size_t>(i);
        if (c.kind == ColumnKind::continuous) rc.numbers.push_back(c.numbers[r]);
        else rc.strings.push_back(c.strings[r]);
        rc.missing.push_back(c.missing[r]);
      }
      out.columns.push_back(std::move(rc));
    }
    for (auto i : rows) {
      out.y.push_back(y[static_cast<std::size_t>(i)]);
      out.s.push_back(s[static_cast<std::size_t>(i)]);
    }
    out.rows_read = out.y.size();
    return out;
  }
};

namespace detail {

inline bool contains(const std::vector<std::string>& v, const std::string& x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

inline std::size_t column_position(const std::vector<std::string>& header, const std::string& name,
                                   const std::string& origin) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw DataError(origin + ": missing column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

}  // namespace detail

/// Maps a parsed CSV onto the schema. Rows with a malformed required field (wrong
/// field count, missing label/sensitive value, non-numeric continuous value) are
/// dropped and counted. A label or sensitive value outside the schema mapping is an
/// error.
inline RawTable raw_from_table(const csv::Table& table, const Schema& schema, const std::string& origin) {
  schema.validate();
  RawTable raw;
  raw.origin = origin;
  std::vector<std::size_t> pos;
  for (const auto& c : schema.columns) pos.push_back(detail::column_position(table.header, c.name, origin));
  const auto label_pos = detail::column_position(table.header, schema.label.column, origin);
  const auto sens_pos = detail::column_position(table.header, schema.sensitive.column, origin);
  for (const auto& c : schema.columns) raw.columns.push_back({c.name, c.kind, {}, {}, {}});

  auto drop = [&raw](const std::string& why) {
    ++raw.rows_dropped;
    ++raw.drop_reasons[why];
  };

  for (const auto& row : table.rows) {
    ++raw.rows_read;
    if (row.size() != table.header.size()) {
      drop("field count");
      continue;
    }
    const auto& label = row[label_pos];
    if (schema.is_missing(label)) {
      drop("missing label");
      continue;
    }
    int y = 0;
    if (detail::contains(schema.label.favorable, label)) y = 1;
    else if (!detail::contains(schema.label.unfavorable, label))
      throw DataError(origin + ": label value '" + label + "' is not mapped by schema '" + schema.name + "'");

    const auto& sens = row[sens_pos];
    if (schema.is_missing(sens)) {
      drop("missing sensitive");
      continue;
    }
    int s = 0;
    if (schema.sensitive.threshold) {
      const auto v = csv::parse_double(sens);
      if (!v) {
        drop("unparseable sensitive");
        continue;
      }
      s = ((*v > *schema.sensitive.threshold) == schema.sensitive.privileged_above) ? 1 : 0;
    } else if (detail::contains(schema.sensitive.privileged, sens)) {
      s = 1;
    } else if (!detail::contains(schema.sensitive.unprivileged, sens)) {
      throw DataError(origin + ": sensitive value '" + sens + "' is not mapped by schema '" + schema.name + "'");
    }

    bool ok = true;
    std::vector<double> nums(schema.columns.size(), 0.0);
    std::vector<char> miss(schema.columns.size(), 0);
    for (std::size_t c = 0; c < schema.columns.size() && ok; ++c) {
      const auto& field = row[pos[c]];
      if (schema.is_missing(field)) {
        miss[c] = 1;
      } else if (schema.columns[c].kind == ColumnKind::continuous) {
        const auto v = csv::parse_double(field);
        if (!v || !std::isfinite(*v)) ok = false;
        else nums[c] = *v;
      }
    }
    if (!ok) {
      drop("unparseable number");
      continue;
    }
    for (std::size_t c = 0; c < schema.columns.size(); ++c) {
      auto& col = raw.columns[c];
      col.missing.push_back(miss[c]);
      if (col.kind == ColumnKind::continuous) col.numbers.push_back(nums[c]);
      else col.strings.push_back(miss[c] ? std::string() : row[pos[c]]);
    }
    raw.y.push_back(y);
    raw.s.push_back(s);
  }
  return raw;
}

inline RawTable load_csv(const std::string& path, const Schema& schema) {
  const auto table = csv::read_file(path);
  if (table.rows.empty()) throw DataError(path + ": no data rows");
  return raw_from_table(table, schema, path);
}

/// Statistics fitted on the training split and reused for val/test.
struct ColumnStats {
  std::string name;
  ColumnKind kind = ColumnKind::continuous;
  double mean = 0.0;
  double stddev = 1.0;  // population standard deviation
  double median = 0.0;  // imputation value
  bool constant = false;
  std::vector<std::string> vocabulary;
  bool missing_slot = false;
};

struct FitStats {
  std::string schema_name;
  std::vector<ColumnStats> columns;
  std::vector<std::string> feature_names;
  SensitiveEncoding sensitive;
};

inline nlohmann::json to_json(const FitStats& st) {
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& c : st.columns) {
    if (c.kind == ColumnKind::continuous) {
      cols.push_back({{"name", c.name}, {"kind", "continuous"}, {"mean", c.mean}, {"stddev", c.stddev},
                      {"median", c.median}, {"constant", c.constant}});
    } else {
      cols.push_back({{"name", c.name}, {"kind", "categorical"}, {"vocabulary", c.vocabulary},
                      {"missing_slot", c.missing_slot}});
    }
  }
  return {{"schema", st.schema_name},
          {"columns", cols},
          {"feature_names", st.feature_names},
          {"sensitive", to_json(st.sensitive)}};
}

inline FitStats fit_stats_from_json(const nlohmann::json& j) {
  FitStats st;
  st.schema_name = j.value("schema", std::string());
  for (const auto& cj : j.at("columns")) {
    ColumnStats c;
    c.name = cj.at("name").get<std::string>();
    if (cj.at("kind").get<std::string>() == "continuous") {
      c.kind = ColumnKind::continuous;
      c.mean = cj.at("mean").get<double>();
      c.stddev = cj.at("stddev").get<double>();
      c.median = cj.at("median").get<double>();
      c.constant = cj.at("constant").get<bool>();
    } else {
      c.kind = ColumnKind::categorical;
      c.vocabulary = cj.at("vocabulary").get<std::vector<std::string>>();
      c.missing_slot = cj.at("missing_slot").get<bool>();
    }
    st.columns.push_back(std::move(c));
  }
  st.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  st.sensitive = sensitive_encoding_from_json(j.at("sensitive"));
  return st;
}

struct PreprocessResult {
  Dataset data;
  FitStats stats;
  std::vector<std::string> warnings;
};

namespace detail {

inline double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

inline FitStats fit(const RawTable& raw, const Schema& schema, std::vector<std::string>& warnings) {
  FitStats st;
  st.schema_name = schema.name;
  const bool drop_sens = schema.drop_sensitive_features;
  Index col = 0;
  for (std::size_t c = 0; c < raw.columns.size(); ++c) {
    const auto& rc = raw.columns[c];
    const auto& spec = schema.columns[c];
    const bool is_sensitive = spec.name == schema.sensitive.column;
    ColumnStats cs;
    cs.name = rc.name;
    cs.kind = rc.kind;
    if (rc.kind == ColumnKind::continuous) {
      std::vector<double> observed;
      for (std::size_t i = 0; i < rc.numbers.size(); ++i)
        if (!rc.missing[i]) observed.push_back(rc.numbers[i]);
      cs.median = median_of(observed);
      const double n = static_cast<double>(rc.numbers.size());
      double sum = 0.0;
      for (std::size_t i = 0; i < rc.numbers.size(); ++i) sum += rc.missing[i] ? cs.median : rc.numbers[i];
      cs.mean = n > 0 ? sum / n : 0.0;
      double ss = 0.0;
      for (std::size_t i = 0; i < rc.numbers.size(); ++i) {
        const double v = (rc.missing[i] ? cs.median : rc.numbers[i]) - cs.mean;
        ss += v * v;
      }
      cs.stddev = n > 0 ? std::sqrt(ss / n) : 0.0;
      if (!(cs.stddev > 0.0)) {
        cs.constant = true;
        cs.stddev = 1.0;
        warnings.push_back("column '" + rc.name + "' has zero variance; encoded as constant 0");
      }
      if (!(is_sensitive && drop_sens)) {
        st.feature_names.push_back(rc.name);
        ++col;
      }
    } else {
      cs.vocabulary = spec.vocabulary;
      if (cs.vocabulary.empty()) {
        std::set<std::string> seen;
        for (std::size_t i = 0; i < rc.strings.size(); ++i)
          if (!rc.missing[i]) seen.insert(rc.strings[i]);
        cs.vocabulary.assign(seen.begin(), seen.end());
      }
      cs.missing_slot = std::any_of(rc.missing.begin(), rc.missing.end(), [](char m) { return m != 0; });
      if (!(is_sensitive && drop_sens)) {
        if (is_sensitive && !schema.sensitive.threshold) {
          st.sensitive.kind = SensitiveEncoding::Kind::one_hot;
          for (std::size_t v = 0; v < cs.vocabulary.size(); ++v) {
            st.sensitive.columns.push_back(col + static_cast<Index>(v));
            const auto& value = cs.vocabulary[v];
            st.sensitive.group_of_column.push_back(contains(schema.sensitive.privileged, value)     ? 1
                                                   : contains(schema.sensitive.unprivileged, value) ? 0
                                                                                                    : -1);
          }
          if (cs.missing_slot) {
            st.sensitive.columns.push_back(col + static_cast<Index>(cs.vocabulary.size()));
            st.sensitive.group_of_column.push_back(-1);
          }
        }
        for (const auto& v : cs.vocabulary) st.feature_names.push_back(rc.name + "=" + v);
        if (cs.missing_slot) st.feature_names.push_back(rc.name + "=missing");
        col += static_cast<Index>(cs.vocabulary.size() + (cs.missing_slot ? 1 : 0));
      }
    }
    st.columns.push_back(std::move(cs));
  }
  if (schema.sensitive.threshold && !drop_sens) {
    st.sensitive.kind = SensitiveEncoding::Kind::indicator;
    st.sensitive.columns = {col};
    st.sensitive.group_of_column = {1};
    st.feature_names.push_back(schema.sensitive.column + "_privileged");
  }
  return st;
}

}  // namespace detail

/// One-hot encodes categorical columns and z-scores continuous ones. With
/// `stats` empty the statistics are fitted on `raw` (the training split);
/// otherwise the given statistics are applied unchanged.
inline PreprocessResult preprocess(const RawTable& raw, const Schema& schema,
                                   const std::optional<FitStats>& stats = std::nullopt) {
  if (raw.columns.size() != schema.columns.size())
    throw DataError("preprocess: raw table does not conform to schema '" + schema.name + "'");
  PreprocessResult res;
  res.stats = stats ? *stats : detail::fit(raw, schema, res.warnings);
  const auto& st = res.stats;
  if (st.columns.size() != raw.columns.size())
    throw DataError("preprocess: statistics do not match schema '" + schema.name + "'");

  const auto n = static_cast<Index>(raw.size());
  const auto d = static_cast<Index>(st.feature_names.size());
  Matrix X = Matrix::Zero(n, d);
  Index col = 0;
  const bool drop_sens = schema.drop_sensitive_features;
  std::size_t unseen = 0;
  std::size_t unslotted_missing = 0;
  for (std::size_t c = 0; c < raw.columns.size(); ++c) {
    const auto& rc = raw.columns[c];
    const auto& cs = st.columns[c];
    if (rc.kind != cs.kind || rc.name != cs.name)
      throw DataError("preprocess: column '" + rc.name + "' does not match fitted statistics");
    if (rc.name == schema.sensitive.column && drop_sens) continue;
    if (rc.kind == ColumnKind::continuous) {
      if (!cs.constant) {
        for (Index i = 0; i < n; ++i) {
          const double v = rc.missing[static_cast<std::size_t>(i)] ? cs.median : rc.numbers[static_cast<std::size_t>(i)];
          X(i, col) = (v - cs.mean) / cs.stddev;
        }
      }
      ++col;
    } else {
      std::map<std::string, Index> slot;
      for (std::size_t v = 0; v < cs.vocabulary.size(); ++v) slot[cs.vocabulary[v]] = static_cast<Index>(v);
      for (Index i = 0; i < n; ++i) {
        const auto r = static_cast<std::size_t>(i);
        if (rc.missing[r]) {
          if (cs.missing_slot) X(i, col + static_cast<Index>(cs.vocabulary.size())) = 1.0;
          else ++unslotted_missing;
          continue;
        }
        const auto it = slot.find(rc.strings[r]);
        if (it == slot.end()) ++unseen;
        else X(i, col + it->second) = 1.0;
      }
      col += static_cast<Index>(cs.vocabulary.size() + (cs.missing_slot ? 1 : 0));
    }
  }
  if (schema.sensitive.threshold && !drop_sens) {
    for (Index i = 0; i < n; ++i) X(i, col) = raw.s[static_cast<std::size_t>(i)];
    ++col;
  }
  if (col != d) throw ShapeError("preprocess: encoded width differs from fitted feature count");
  if (unseen > 0)
    res.warnings.push_back(std::to_string(unseen) + " categorical value(s) unseen at fit time; encoded as all-zeros");
  if (unslotted_missing > 0)
    res.warnings.push_back(std::to_string(unslotted_missing) +
                           " missing categorical value(s) without a fitted missing slot; encoded as all-zeros");
  for (const auto& w : res.warnings) log::warn(w);

  res.data.X = std::move(X);
  res.data.y = raw.y;
  res.data.s = raw.s;
  res.data.feature_names = st.feature_names;
  res.data.provenance = raw.origin;
  res.data.sensitive = st.sensitive;
  res.data.validate();
  return res;
}

}  // namespace fairtab
