#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "fairtab/core/matrix.hpp"
#include "fairtab/error.hpp"
#include "fairtab/sampler.hpp"

namespace fairtab {

enum class Similarity { cosine, dot };

inline std::string_view to_string(Similarity s) { return s == Similarity::cosine ? "cosine" : "dot"; }

inline Similarity similarity_from_string(std::string_view s) {
  if (s == "cosine") return Similarity::cosine;
  if (s == "dot") return Similarity::dot;
  throw ConfigError("unknown similarity '" + std::string(s) + "'");
}

struct LossConfig {
  double tau = 1.0;
  double alpha = 1.0;
  Similarity similarity = Similarity::cosine;
  bool denominator_includes_positive = true;

  void validate() const {
    if (!(tau > 0.0)) throw ConfigError("loss: temperature must be positive");
    if (!(alpha >= 0.0)) throw ConfigError("loss: alpha must be non-negative");
  }
};

/// Loss value and its gradient w.r.t. the input embeddings (same row layout).
struct LossValue {
  double value = 0.0;
  Matrix grad;
};

inline double cosine_sim(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw ShapeError("cosine_sim: vector lengths differ");
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) throw NumericError("cosine_sim: zero-norm vector");
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

namespace detail {

struct Normalized {
  Matrix unit;   // rows scaled to unit length (cosine) or unchanged (dot)
  Vector norms;  // row norms (cosine only)
};

inline Normalized normalize_rows(const Matrix& e, Similarity sim) {
  Normalized out;
  if (sim == Similarity::dot) {
    out.unit = e;
    return out;
  }
  out.norms = e.rowwise().norm();
  for (Index r = 0; r < e.rows(); ++r)
    if (out.norms(r) == 0.0) throw NumericError("contrastive loss: zero-norm embedding at row " + std::to_string(r));
  out.unit = out.norms.cwiseInverse().asDiagonal() * e;
  return out;
}

// Pulls a gradient w.r.t. normalized rows back to the raw rows.
inline Matrix denormalize_grad(const Matrix& grad_unit, const Normalized& n, Similarity sim) {
  if (sim == Similarity::dot) return grad_unit;
  const Vector radial = (grad_unit.array() * n.unit.array()).rowwise().sum();
  Matrix g = grad_unit - radial.asDiagonal() * n.unit;
  return n.norms.cwiseInverse().asDiagonal() * g;
}

}  // namespace detail

/// Paired InfoNCE:
///   -(1/N) sum_i log( exp(sim(a_i, p_i)/tau) / sum_{k in D(i)} exp(sim(a_i, e_k)/tau) )
/// with e = [anchors; positives] (2N rows), D(i) = mask row i, plus the positive
/// N + i when `include_positive`. The gradient has the 2N-row layout of e.
inline LossValue info_nce(const Matrix& anchors, const Matrix& positives, const Mask& mask, double tau,
                          Similarity sim = Similarity::cosine, bool include_positive = true) {
  if (!(tau > 0.0)) throw ConfigError("info_nce: temperature must be positive");
  const Index n = anchors.rows();
  if (n == 0) throw ShapeError("info_nce: empty batch");
  require_shape(positives, n, anchors.cols(), "info_nce: positives");
  if (mask.rows() != n || mask.cols() != 2 * n) throw ShapeError("info_nce: mask must be N x 2N");

  Matrix e(2 * n, anchors.cols());
  e.topRows(n) = anchors;
  e.bottomRows(n) = positives;
  const auto norm = detail::normalize_rows(e, sim);
  const Matrix scores = (norm.unit.topRows(n) * norm.unit.transpose()) / tau;

  Matrix g = Matrix::Zero(n, 2 * n);  // dL/dscores
  double total = 0.0;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (Index i = 0; i < n; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (Index k = 0; k < 2 * n; ++k) {
      if (mask(i, k) || (include_positive && k == n + i)) {
        mx = std::max(mx, scores(i, k));
        any = true;
      }
    }
    if (!any) throw NumericError("info_nce: empty denominator for anchor " + std::to_string(i));
    double z = 0.0;
    for (Index k = 0; k < 2 * n; ++k)
      if (mask(i, k) || (include_positive && k == n + i)) z += std::exp(scores(i, k) - mx);
    const double lse = mx + std::log(z);
    total += lse - scores(i, n + i);
    for (Index k = 0; k < 2 * n; ++k)
      if (mask(i, k) || (include_positive && k == n + i)) g(i, k) = std::exp(scores(i, k) - lse) * inv_n;
    g(i, n + i) -= inv_n;
  }

  Matrix grad_unit = (g.transpose() * norm.unit.topRows(n)) / tau;
  grad_unit.topRows(n) += (g * norm.unit) / tau;
  return {total * inv_n, detail::denormalize_grad(grad_unit, norm, sim)};
}

/// Supervised contrastive loss over a set of embeddings:
///   -(1/N') sum_i (1/|P(i)|) sum_{p in P(i)} log( exp(s_ip/tau) / sum_{q in Q(i)} exp(s_iq/tau) )
/// with Q(i) all other rows, P(i) the rows of Q(i) sharing i's label, and N' the
/// number of anchors with non-empty P(i). Dot-product similarity by default.
inline LossValue sup_con(const Matrix& embeddings, const std::vector<int>& labels, double tau,
                         Similarity sim = Similarity::dot) {
  if (!(tau > 0.0)) throw ConfigError("sup_con: temperature must be positive");
  const Index n = embeddings.rows();
  if (static_cast<std::size_t>(n) != labels.size()) throw ShapeError("sup_con: label count differs from rows");
  if (n < 2) throw ShapeError("sup_con: need at least two embeddings");
  const auto norm = detail::normalize_rows(embeddings, sim);
  const Matrix scores = (norm.unit * norm.unit.transpose()) / tau;

  Matrix g = Matrix::Zero(n, n);
  double total = 0.0;
  Index used = 0;
  for (Index i = 0; i < n; ++i) {
    std::size_t positives = 0;
    double mx = -std::numeric_limits<double>::infinity();
    for (Index q = 0; q < n; ++q) {
      if (q == i) continue;
      mx = std::max(mx, scores(i, q));
      if (labels[static_cast<std::size_t>(q)] == labels[static_cast<std::size_t>(i)]) ++positives;
    }
    if (positives == 0) continue;
    ++used;
    double z = 0.0;
    for (Index q = 0; q < n; ++q)
      if (q != i) z += std::exp(scores(i, q) - mx);
    const double lse = mx + std::log(z);
    const double inv_p = 1.0 / static_cast<double>(positives);
    double term = 0.0;
    for (Index q = 0; q < n; ++q) {
      if (q == i) continue;
      g(i, q) = std::exp(scores(i, q) - lse);
      if (labels[static_cast<std::size_t>(q)] == labels[static_cast<std::size_t>(i)]) {
        term += lse - scores(i, q);
        g(i, q) -= inv_p;
      }
    }
    total += term * inv_p;
  }
  if (used == 0) throw NumericError("sup_con: no anchor has a same-label partner");
  g /= static_cast<double>(used);
  const Matrix grad_unit = ((g + g.transpose()) * norm.unit) / tau;
  return {total / static_cast<double>(used), detail::denormalize_grad(grad_unit, norm, sim)};
}

struct BceValue {
  double value = 0.0;
  Vector grad_probs;   // dL/dp, using the clamped probabilities
  Vector grad_logits;  // dL/dlogit for p = sigmoid(logit): (p - y) / N
};

/// Mean binary cross-entropy with probabilities clamped to [1e-12, 1 - 1e-12].
inline BceValue bce(const Vector& probs, const std::vector<int>& labels) {
  const Index n = probs.size();
  if (static_cast<std::size_t>(n) != labels.size()) throw ShapeError("bce: label count differs from predictions");
  if (n == 0) throw ShapeError("bce: empty batch");
  constexpr double lo = 1e-12;
  constexpr double hi = 1.0 - 1e-12;
  BceValue out;
  out.grad_probs.resize(n);
  out.grad_logits.resize(n);
  const double inv_n = 1.0 / static_cast<double>(n);
  double sum = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double p = std::clamp(probs(i), lo, hi);
    const double y = labels[static_cast<std::size_t>(i)];
    sum -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
    out.grad_probs(i) = (-y / p + (1.0 - y) / (1.0 - p)) * inv_n;
    out.grad_logits(i) = (probs(i) - y) * inv_n;
  }
  out.value = sum * inv_n;
  return out;
}

/// alpha * L_BCE + L_SCL. Gradients combine with the same weights.
inline double total_loss(double alpha, double bce_value, double scl_value) {
  if (!(alpha >= 0.0)) throw ConfigError("total_loss: alpha must be non-negative");
  return alpha * bce_value + scl_value;
}

}  // namespace fairtab
