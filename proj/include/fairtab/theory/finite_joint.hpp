#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "fairtab/error.hpp"

namespace fairtab::theory {

/// Probability table over a finite product space, stored row-major
/// (last axis fastest).
class FiniteJoint {
 public:
  FiniteJoint() = default;

  explicit FiniteJoint(std::vector<std::size_t> sizes, std::vector<std::string> labels = {})
      : sizes_(std::move(sizes)), labels_(std::move(labels)) {
    if (sizes_.empty()) throw TheoryError("FiniteJoint: need at least one axis");
    for (std::size_t n : sizes_)
      if (n == 0) throw TheoryError("FiniteJoint: axis size must be positive");
    if (labels_.empty())
      for (std::size_t a = 0; a < sizes_.size(); ++a) labels_.push_back("v" + std::to_string(a));
    if (labels_.size() != sizes_.size()) throw TheoryError("FiniteJoint: one label per axis");
    strides_.assign(sizes_.size(), 1);
    for (std::size_t a = sizes_.size() - 1; a > 0; --a) strides_[a - 1] = strides_[a] * sizes_[a];
    table_.assign(strides_[0] * sizes_[0], 0.0);
  }

  /// Builds from a flat row-major table and validates it.
  static FiniteJoint from_table(std::vector<std::size_t> sizes, std::vector<double> table,
                                std::vector<std::string> labels = {}) {
    FiniteJoint j(std::move(sizes), std::move(labels));
    if (table.size() != j.table_.size())
      throw TheoryError("FiniteJoint: table has " + std::to_string(table.size()) + " entries, expected " +
                        std::to_string(j.table_.size()));
    j.table_ = std::move(table);
    j.validate();
    return j;
  }

  std::size_t rank() const noexcept { return sizes_.size(); }
  const std::vector<std::size_t>& sizes() const noexcept { return sizes_; }
  std::size_t size(std::size_t axis) const { return sizes_.at(axis); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::vector<double>& table() const noexcept { return table_; }
  std::size_t cells() const noexcept { return table_.size(); }

  std::size_t flat(std::initializer_list<std::size_t> idx) const { return flat(std::vector<std::size_t>(idx)); }

  std::size_t flat(const std::vector<std::size_t>& idx) const {
    if (idx.size() != rank()) throw TheoryError("FiniteJoint: index rank mismatch");
    std::size_t f = 0;
    for (std::size_t a = 0; a < rank(); ++a) {
      if (idx[a] >= sizes_[a]) throw TheoryError("FiniteJoint: index out of range on axis " + labels_[a]);
      f += idx[a] * strides_[a];
    }
    return f;
  }

  /// Coordinate of flat cell `f` along `axis`.
  std::size_t coord(std::size_t f, std::size_t axis) const { return (f / strides_[axis]) % sizes_[axis]; }

  double operator()(std::initializer_list<std::size_t> idx) const { return table_[flat(idx)]; }
  double& at(std::initializer_list<std::size_t> idx) { return table_[flat(idx)]; }
  double& at_flat(std::size_t f) { return table_.at(f); }

  void add(std::initializer_list<std::size_t> idx, double p) { table_[flat(idx)] += p; }

  double total() const { return std::accumulate(table_.begin(), table_.end(), 0.0); }

  /// Throws TheoryError unless entries are finite, non-negative and sum to 1.
  void validate(double tol = 1e-12) const {
    if (table_.empty()) throw TheoryError("FiniteJoint: empty table");
    for (double p : table_) {
      if (!std::isfinite(p)) throw TheoryError("FiniteJoint: non-finite probability");
      if (p < 0.0) throw TheoryError("FiniteJoint: negative probability " + std::to_string(p));
    }
    const double t = total();
    if (std::abs(t - 1.0) > tol) throw TheoryError("FiniteJoint: probabilities sum to " + std::to_string(t));
  }

  /// Marginal over `axes`, in the order given.
  FiniteJoint marginal(const std::vector<std::size_t>& axes) const {
    std::vector<std::size_t> sz;
    std::vector<std::string> lb;
    for (std::size_t a : axes) {
      check_axis(a);
      sz.push_back(sizes_[a]);
      lb.push_back(labels_[a]);
    }
    FiniteJoint m(sz, lb);
    for (std::size_t f = 0; f < table_.size(); ++f) {
      if (table_[f] == 0.0) continue;
      std::size_t g = 0;
      for (std::size_t k = 0; k < axes.size(); ++k) g += coord(f, axes[k]) * m.strides_[k];
      m.table_[g] += table_[f];
    }
    return m;
  }

  /// Conditional law given axis == value. The axis keeps its place with size 1.
  FiniteJoint given(std::size_t axis, std::size_t value) const {
    check_axis(axis);
    if (value >= sizes_[axis]) throw TheoryError("FiniteJoint: conditioning value out of range");
    std::vector<std::size_t> sz = sizes_;
    sz[axis] = 1;
    FiniteJoint c(sz, labels_);
    double mass = 0.0;
    for (std::size_t f = 0; f < table_.size(); ++f) {
      if (coord(f, axis) != value) continue;
      std::size_t g = 0;
      for (std::size_t a = 0; a < rank(); ++a)
        if (a != axis) g += coord(f, a) * c.strides_[a];
      c.table_[g] += table_[f];
      mass += table_[f];
    }
    if (mass <= 0.0) throw TheoryError("FiniteJoint: conditioning event " + labels_[axis] + "=" +
                                       std::to_string(value) + " has zero probability");
    for (double& p : c.table_) p /= mass;
    return c;
  }

  double probability(std::size_t axis, std::size_t value) const {
    check_axis(axis);
    double mass = 0.0;
    for (std::size_t f = 0; f < table_.size(); ++f)
      if (coord(f, axis) == value) mass += table_[f];
    return mass;
  }

  void check_axis(std::size_t a) const {
    if (a >= rank()) throw TheoryError("FiniteJoint: axis " + std::to_string(a) + " out of range");
  }

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::string> labels_;
  std::vector<std::size_t> strides_;
  std::vector<double> table_;
};

namespace detail {

inline std::size_t subset_key(const FiniteJoint& j, std::size_t f, const std::vector<std::size_t>& axes) {
  std::size_t key = 0;
  for (std::size_t a : axes) key = key * j.size(a) + j.coord(f, a);
  return key;
}

inline std::size_t subset_cells(const FiniteJoint& j, const std::vector<std::size_t>& axes) {
  std::size_t n = 1;
  for (std::size_t a : axes) n *= j.size(a);
  return n;
}

inline std::vector<std::size_t> concat(std::vector<std::size_t> a, const std::vector<std::size_t>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace detail

/// I(A;B|C) in nats. Each axis may appear in at most one of the three groups;
/// an empty `cond` gives unconditional mutual information.
inline double exact_cmi(const FiniteJoint& joint, const std::vector<std::size_t>& a,
                        const std::vector<std::size_t>& b, const std::vector<std::size_t>& cond) {
  joint.validate();
  if (a.empty() || b.empty()) throw TheoryError("exact_cmi: axis groups must be nonempty");
  std::vector<int> seen(joint.rank(), 0);
  for (const auto* group : {&a, &b, &cond})
    for (std::size_t ax : *group) {
      joint.check_axis(ax);
      if (seen[ax]++) throw TheoryError("exact_cmi: axis " + joint.labels()[ax] + " used twice");
    }

  const auto ac = detail::concat(a, cond);
  const auto bc = detail::concat(b, cond);
  const auto abc = detail::concat(a, bc);
  std::vector<double> p_c(detail::subset_cells(joint, cond), 0.0);
  std::vector<double> p_ac(detail::subset_cells(joint, ac), 0.0);
  std::vector<double> p_bc(detail::subset_cells(joint, bc), 0.0);
  std::vector<double> p_abc(detail::subset_cells(joint, abc), 0.0);
  const auto& t = joint.table();
  for (std::size_t f = 0; f < t.size(); ++f) {
    if (t[f] == 0.0) continue;
    p_c[detail::subset_key(joint, f, cond)] += t[f];
    p_ac[detail::subset_key(joint, f, ac)] += t[f];
    p_bc[detail::subset_key(joint, f, bc)] += t[f];
    p_abc[detail::subset_key(joint, f, abc)] += t[f];
  }

  const std::size_t nc = p_c.size();
  const std::size_t nb = detail::subset_cells(joint, b);
  const std::size_t nbc = nb * nc;
  double mi = 0.0;
  for (std::size_t k = 0; k < p_abc.size(); ++k) {
    const double p = p_abc[k];
    if (p <= 0.0) continue;
    const std::size_t ia = k / nbc;
    const std::size_t ibc = k % nbc;
    const std::size_t ic = ibc % nc;
    mi += p * std::log(p * p_c[ic] / (p_ac[ia * nc + ic] * p_bc[ibc]));
  }
  return mi;
}

/// I(A;B) in nats.
inline double exact_mi(const FiniteJoint& joint, const std::vector<std::size_t>& a,
                       const std::vector<std::size_t>& b) {
  return exact_cmi(joint, a, b, {});
}

}  // namespace fairtab::theory
