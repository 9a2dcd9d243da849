#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairtab/data/csv.hpp"
#include "fairtab/data/dataset.hpp"
#include "fairtab/data/preprocess.hpp"
#include "fairtab/error.hpp"

namespace fairtab {

/// Preprocessed dataset as CSV: feature columns followed by y and s.
inline void write_dataset_csv(const std::string& path, const Dataset& d) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  for (const auto& name : d.feature_names) out << csv::quote(name) << ',';
  out << "y,s\n";
  for (Index i = 0; i < d.X.rows(); ++i) {
    for (Index c = 0; c < d.X.cols(); ++c) out << csv::format_double(d.X(i, c)) << ',';
    out << d.y[static_cast<std::size_t>(i)] << ',' << d.s[static_cast<std::size_t>(i)] << '\n';
  }
  if (!out) throw DataError("write failed for '" + path + "'");
}

/// Inverse of write_dataset_csv. The sensitive-column layout comes from the fitted
/// statistics written alongside the split files.
inline Dataset read_dataset_csv(const std::string& path, const SensitiveEncoding& sensitive = {}) {
  const auto table = csv::read_file(path);
  const auto& h = table.header;
  if (h.size() < 3 || h[h.size() - 2] != "y" || h.back() != "s")
    throw DataError(path + ": expected trailing 'y,s' columns");
  Dataset d;
  d.provenance = path;
  d.feature_names.assign(h.begin(), h.end() - 2);
  const auto cols = static_cast<Index>(d.feature_names.size());
  d.X.resize(static_cast<Index>(table.rows.size()), cols);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    if (row.size() != h.size()) throw DataError(path + ": row " + std::to_string(r + 1) + " has wrong field count");
    for (Index c = 0; c < cols; ++c) {
      const auto v = csv::parse_double(row[static_cast<std::size_t>(c)]);
      if (!v) throw DataError(path + ": row " + std::to_string(r + 1) + " has a non-numeric feature");
      d.X(static_cast<Index>(r), c) = *v;
    }
    const auto y = csv::parse_double(row[h.size() - 2]);
    const auto s = csv::parse_double(row[h.size() - 1]);
    if (!y || !s) throw DataError(path + ": row " + std::to_string(r + 1) + " has a bad y or s");
    d.y.push_back(static_cast<int>(*y));
    d.s.push_back(static_cast<int>(*s));
  }
  d.sensitive = sensitive;
  d.validate();
  return d;
}

inline void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

inline nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace fairtab
