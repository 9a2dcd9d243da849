#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairtab/core/matrix.hpp"
#include "fairtab/error.hpp"

namespace fairtab {

/// Which feature columns are derived from the sensitive attribute.
struct SensitiveEncoding {
  enum class Kind { none, one_hot, indicator };
  Kind kind = Kind::none;
  std::vector<Index> columns;
  /// one_hot: sensitive value each column stands for (1 privileged, 0 unprivileged,
  /// -1 for a slot such as "missing"). indicator: single entry, 1.
  std::vector<int> group_of_column;

  /// A flip is well defined only for a two-valued attribute.
  bool binary() const {
    if (kind == Kind::indicator) return columns.size() == 1;
    if (kind == Kind::one_hot)
      return columns.size() == 2 && group_of_column.size() == 2 &&
             ((group_of_column[0] == 1 && group_of_column[1] == 0) ||
              (group_of_column[0] == 0 && group_of_column[1] == 1));
    return true;
  }
};

inline nlohmann::json to_json(const SensitiveEncoding& e) {
  const char* kind = e.kind == SensitiveEncoding::Kind::none      ? "none"
                     : e.kind == SensitiveEncoding::Kind::one_hot ? "one_hot"
                                                                  : "indicator";
  return {{"kind", kind}, {"columns", e.columns}, {"group_of_column", e.group_of_column}};
}

inline SensitiveEncoding sensitive_encoding_from_json(const nlohmann::json& j) {
  SensitiveEncoding e;
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "none") e.kind = SensitiveEncoding::Kind::none;
  else if (kind == "one_hot") e.kind = SensitiveEncoding::Kind::one_hot;
  else if (kind == "indicator") e.kind = SensitiveEncoding::Kind::indicator;
  else throw DataError("unknown sensitive encoding '" + kind + "'");
  e.columns = j.at("columns").get<std::vector<Index>>();
  e.group_of_column = j.at("group_of_column").get<std::vector<int>>();
  return e;
}

/// Preprocessed samples: X is n x d, y and s are binary.
struct Dataset {
  Matrix X;
  std::vector<int> y;
  std::vector<int> s;
  std::vector<std::string> feature_names;
  std::string provenance;
  SensitiveEncoding sensitive;

  std::size_t size() const { return y.size(); }
  Index dim() const { return X.cols(); }

  void validate() const {
    const auto n = y.size();
    if (n == 0) throw DataError("dataset '" + provenance + "' is empty");
    if (s.size() != n || static_cast<std::size_t>(X.rows()) != n)
      throw ShapeError("dataset '" + provenance + "': X, y and s row counts differ");
    if (!feature_names.empty() && static_cast<Index>(feature_names.size()) != X.cols())
      throw ShapeError("dataset '" + provenance + "': feature name count differs from column count");
    if (!X.allFinite()) throw NumericError("dataset '" + provenance + "' contains non-finite features");
    for (std::size_t i = 0; i < n; ++i) {
      if ((y[i] != 0 && y[i] != 1) || (s[i] != 0 && s[i] != 1))
        throw DataError("dataset '" + provenance + "': row " + std::to_string(i) + " has non-binary y or s");
    }
    for (Index c : sensitive.columns)
      if (c < 0 || c >= X.cols()) throw ShapeError("dataset '" + provenance + "': sensitive column out of range");
  }
};

/// Rows `rows` of `d`, in the given order.
template <class Indices>
Dataset subset(const Dataset& d, const Indices& rows) {
  Dataset out;
  out.X = gather_rows(d.X, rows);
  out.y.reserve(rows.size());
  out.s.reserve(rows.size());
  for (auto i : rows) {
    out.y.push_back(d.y[static_cast<std::size_t>(i)]);
    out.s.push_back(d.s[static_cast<std::size_t>(i)]);
  }
  out.feature_names = d.feature_names;
  out.provenance = d.provenance;
  out.sensitive = d.sensitive;
  return out;
}

/// Index lists for the four (y, s) cells.
struct SubgroupIndex {
  std::array<std::vector<std::size_t>, 4> cells;

  static constexpr std::size_t slot(int y, int s) { return static_cast<std::size_t>(y * 2 + s); }

  const std::vector<std::size_t>& operator()(int y, int s) const { return cells[slot(y, s)]; }
  std::vector<std::size_t>& operator()(int y, int s) { return cells[slot(y, s)]; }

  std::size_t total() const {
    std::size_t n = 0;
    for (const auto& c : cells) n += c.size();
    return n;
  }
};

inline SubgroupIndex subgroup_index(const std::vector<int>& y, const std::vector<int>& s) {
  if (y.size() != s.size()) throw ShapeError("subgroup_index: y and s lengths differ");
  SubgroupIndex idx;
  for (std::size_t i = 0; i < y.size(); ++i) idx(y[i], s[i]).push_back(i);
  return idx;
}

inline SubgroupIndex subgroup_index(const Dataset& d) { return subgroup_index(d.y, d.s); }

/// Copy of `d` with s replaced by 1 - s and the sensitive-derived columns flipped to
/// match. Every other column is left bit-identical.
inline Dataset counterfactual_flip(const Dataset& d) {
  if (!d.sensitive.binary())
    throw DataError("counterfactual_flip: sensitive attribute of '" + d.provenance + "' is not binary-encoded");
  Dataset out = d;
  for (auto& v : out.s) {
    if (v != 0 && v != 1) throw DataError("counterfactual_flip: non-binary sensitive value");
    v = 1 - v;
  }
  using Kind = SensitiveEncoding::Kind;
  if (d.sensitive.kind == Kind::one_hot) {
    const Index a = d.sensitive.columns[0];
    const Index b = d.sensitive.columns[1];
    out.X.col(a) = d.X.col(b);
    out.X.col(b) = d.X.col(a);
  } else if (d.sensitive.kind == Kind::indicator) {
    const Index c = d.sensitive.columns[0];
    out.X.col(c) = (1.0 - d.X.col(c).array()).matrix();
  }
  return out;
}

}  // namespace fairtab
