#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairtab/data/csv.hpp"
#include "fairtab/error.hpp"

namespace fairtab {

/// Counts per (s, y, y_hat) cell.
struct GroupCounts {
  std::array<std::size_t, 8> cells{};

  static constexpr std::size_t slot(int s, int y, int yhat) { return static_cast<std::size_t>(s * 4 + y * 2 + yhat); }
  std::size_t operator()(int s, int y, int yhat) const { return cells[slot(s, y, yhat)]; }

  std::size_t total() const {
    std::size_t n = 0;
    for (auto c : cells) n += c;
    return n;
  }
  std::size_t group(int s) const { return (*this)(s, 0, 0) + (*this)(s, 0, 1) + (*this)(s, 1, 0) + (*this)(s, 1, 1); }
  std::size_t predicted_positive(int s) const { return (*this)(s, 0, 1) + (*this)(s, 1, 1); }
};

inline GroupCounts group_counts(const std::vector<int>& y, const std::vector<int>& yhat, const std::vector<int>& s) {
  if (y.size() != yhat.size() || y.size() != s.size()) throw ShapeError("group_counts: lengths differ");
  GroupCounts c;
  for (std::size_t i = 0; i < y.size(); ++i) ++c.cells[GroupCounts::slot(s[i], y[i], yhat[i])];
  return c;
}

inline double accuracy(const std::vector<int>& y, const std::vector<int>& yhat) {
  if (y.size() != yhat.size()) throw ShapeError("accuracy: lengths differ");
  if (y.empty()) throw DataError("accuracy: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < y.size(); ++i) hits += y[i] == yhat[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(y.size());
}

namespace detail {

inline double rate(std::size_t num, std::size_t den, const char* what) {
  if (den == 0) throw DataError(std::string(what) + ": conditioning cell is empty");
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace detail

/// |P(y_hat = 1 | s = 1) - P(y_hat = 1 | s = 0)|
inline double demographic_parity(const GroupCounts& c) {
  const double p1 = detail::rate(c.predicted_positive(1), c.group(1), "demographic_parity");
  const double p0 = detail::rate(c.predicted_positive(0), c.group(0), "demographic_parity");
  return std::abs(p1 - p0);
}

inline double demographic_parity(const std::vector<int>& yhat, const std::vector<int>& s) {
  if (yhat.size() != s.size()) throw ShapeError("demographic_parity: lengths differ");
  std::array<std::size_t, 2> pos{}, tot{};
  for (std::size_t i = 0; i < s.size(); ++i) {
    ++tot[static_cast<std::size_t>(s[i])];
    pos[static_cast<std::size_t>(s[i])] += yhat[i] == 1 ? 1 : 0;
  }
  return std::abs(detail::rate(pos[1], tot[1], "demographic_parity") -
                  detail::rate(pos[0], tot[0], "demographic_parity"));
}

inline double tpr_gap(const GroupCounts& c) {
  const double t1 = detail::rate(c(1, 1, 1), c(1, 1, 0) + c(1, 1, 1), "equal_opportunity");
  const double t0 = detail::rate(c(0, 1, 1), c(0, 1, 0) + c(0, 1, 1), "equal_opportunity");
  return std::abs(t1 - t0);
}

inline double fpr_gap(const GroupCounts& c) {
  const double f1 = detail::rate(c(1, 0, 1), c(1, 0, 0) + c(1, 0, 1), "equalized_odds");
  const double f0 = detail::rate(c(0, 0, 1), c(0, 0, 0) + c(0, 0, 1), "equalized_odds");
  return std::abs(f1 - f0);
}

/// |TPR(s=1) - TPR(s=0)|
inline double equal_opportunity(const GroupCounts& c) { return tpr_gap(c); }

/// max(|TPR gap|, |FPR gap|)
inline double equalized_odds(const GroupCounts& c) { return std::max(tpr_gap(c), fpr_gap(c)); }

inline double equal_opportunity(const std::vector<int>& yhat, const std::vector<int>& y, const std::vector<int>& s) {
  return equal_opportunity(group_counts(y, yhat, s));
}

inline double equalized_odds(const std::vector<int>& yhat, const std::vector<int>& y, const std::vector<int>& s) {
  return equalized_odds(group_counts(y, yhat, s));
}

struct TradeoffPoint {
  double dp = 0.0;
  double accuracy = 0.0;
  std::string tag;
};

inline bool dominates(const TradeoffPoint& a, const TradeoffPoint& b) {
  return a.dp <= b.dp && a.accuracy >= b.accuracy && (a.dp < b.dp || a.accuracy > b.accuracy);
}

/// Points not dominated by any other (lower-or-equal dp with higher-or-equal
/// accuracy, one strictly). Sorted by dp ascending, then accuracy descending.
inline std::vector<TradeoffPoint> pareto_frontier(std::vector<TradeoffPoint> points) {
  std::stable_sort(points.begin(), points.end(), [](const TradeoffPoint& a, const TradeoffPoint& b) {
    return a.dp < b.dp || (a.dp == b.dp && a.accuracy > b.accuracy);
  });
  std::vector<TradeoffPoint> front;
  double best_before = -std::numeric_limits<double>::infinity();  // best accuracy at strictly smaller dp
  std::size_t i = 0;
  while (i < points.size()) {
    std::size_t j = i;
    while (j < points.size() && points[j].dp == points[i].dp) ++j;
    const double top = points[i].accuracy;  // best accuracy at this dp
    for (std::size_t k = i; k < j && points[k].accuracy == top; ++k)
      if (top > best_before) front.push_back(points[k]);
    best_before = std::max(best_before, top);
    i = j;
  }
  return front;
}

/// Normalised area under the best-accuracy-so-far step curve over dp in [0, dp_max].
/// Left of the smallest observed dp the curve takes that point's accuracy.
inline double aoc(const std::vector<TradeoffPoint>& points, double dp_max) {
  if (points.empty()) throw DataError("aoc: no points");
  if (!(dp_max > 0.0)) throw ConfigError("aoc: dp_max must be positive");
  const auto front = pareto_frontier(points);
  // integrate over t = dp / dp_max so each step contributes accuracy * width directly
  double area = 0.0;
  double level = front.front().accuracy;
  double x = 0.0;
  for (const auto& p : front) {
    const double edge = std::min(std::max(p.dp, 0.0), dp_max);
    area += level * ((edge - x) / dp_max);
    x = edge;
    level = std::max(level, p.accuracy);
    if (x >= dp_max) break;
  }
  return area + level * ((dp_max - x) / dp_max);
}

inline void write_points_csv(const std::string& path, const std::vector<TradeoffPoint>& points) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << "dp,accuracy,tag\n";
  for (const auto& p : points)
    out << csv::format_double(p.dp) << ',' << csv::format_double(p.accuracy) << ',' << csv::quote(p.tag) << '\n';
}

inline std::vector<TradeoffPoint> read_points_csv(const std::string& path) {
  const auto table = csv::read_file(path);
  if (table.header.size() < 2 || table.header[0] != "dp" || table.header[1] != "accuracy")
    throw DataError(path + ": expected 'dp,accuracy[,tag]' header");
  std::vector<TradeoffPoint> points;
  for (const auto& row : table.rows) {
    if (row.size() < 2) throw DataError(path + ": short row");
    const auto dp = csv::parse_double(row[0]);
    const auto acc = csv::parse_double(row[1]);
    if (!dp || !acc) throw DataError(path + ": non-numeric point");
    points.push_back({*dp, *acc, row.size() > 2 ? row[2] : std::string()});
  }
  return points;
}

}  // namespace fairtab
