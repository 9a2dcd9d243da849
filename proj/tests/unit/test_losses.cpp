#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "fairtab/core/gradient_check.hpp"
#include "fairtab/losses.hpp"
#include "helpers.hpp"

using namespace fairtab;

namespace {

double dot(const Matrix& e, Index a, Index b) { return e.row(a).dot(e.row(b)); }

double cos_of(const Matrix& e, Index a, Index b) { return dot(e, a, b) / (e.row(a).norm() * e.row(b).norm()); }

// Direct evaluation of -1/N sum_i log(exp(s(i, pos)/tau) / sum_{k in D(i)} exp(s(i, k)/tau)).
double info_nce_oracle(const Matrix& a, const Matrix& p, const Mask& mask, double tau, bool cosine) {
  const Index n = a.rows();
  Matrix e(2 * n, a.cols());
  e << a, p;
  double total = 0.0;
  for (Index i = 0; i < n; ++i) {
    auto sim = [&](Index k) { return cosine ? cos_of(e, i, k) : dot(e, i, k); };
    double denom = 0.0;
    for (Index k = 0; k < 2 * n; ++k)
      if (mask(i, k) || k == n + i) denom += std::exp(sim(k) / tau);
    total += -std::log(std::exp(sim(n + i) / tau) / denom);
  }
  return total / static_cast<double>(n);
}

double sup_con_oracle(const Matrix& e, const std::vector<int>& y, double tau) {
  const Index n = e.rows();
  double total = 0.0;
  int used = 0;
  for (Index i = 0; i < n; ++i) {
    double denom = 0.0;
    std::vector<Index> pos;
    for (Index q = 0; q < n; ++q) {
      if (q == i) continue;
      denom += std::exp(dot(e, i, q) / tau);
      if (y[static_cast<std::size_t>(q)] == y[static_cast<std::size_t>(i)]) pos.push_back(q);
    }
    if (pos.empty()) continue;
    double term = 0.0;
    for (Index p : pos) term += std::log(std::exp(dot(e, i, p) / tau) / denom);
    total += -term / static_cast<double>(pos.size());
    ++used;
  }
  return total / used;
}

Mask full_mask(Index n) {
  Mask m = Mask::Constant(n, 2 * n, true);
  for (Index i = 0; i < n; ++i) m(i, i) = m(i, n + i) = false;
  return m;
}

Matrix fixed_points() {
  Matrix e(4, 3);
  e << 0.3, -1.2, 0.5,
       1.1, 0.4, -0.7,
       -0.6, 0.9, 0.2,
       0.05, -0.3, 1.4;
  return e;
}

// Central-difference check of d value / d embeddings for a loss over one matrix.
template <class F>
double embedding_grad_error(Matrix e, F&& f) {
  const Matrix g = f(e).grad;
  std::vector<ParamBlock> params{{"e", {e.data(), static_cast<std::size_t>(e.size())}}};
  std::vector<GradBlock> grads{{"e", {g.data(), static_cast<std::size_t>(g.size())}}};
  Rng rng(1);
  return gradient_check(params, grads, [&] { return f(e).value; }, 1e-5, 1000, rng).max_relative;
}

}  // namespace

TEST(Cosine, ReferenceValues) {
  Vector a(2), b(2), c(2);
  a << 1, 0;
  b << 0, 1;
  c << 1, 1;
  EXPECT_EQ(cosine_sim(a, b), 0.0);
  EXPECT_NEAR(cosine_sim(c, a), 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(cosine_sim(c, a), 0.70711, 1e-5);
  Vector z(3);
  z << 0.2, -3.0, 1.7;
  EXPECT_NEAR(cosine_sim(z, z), 1.0, 1e-15);
  EXPECT_THROW(cosine_sim(a, Vector::Zero(2)), NumericError);
}

TEST(InfoNce, AllIdenticalEmbeddingsGiveLogOfDenominatorSize) {
  // every anchor: its positive plus three negatives, all similarities equal
  const Matrix e = Matrix::Constant(4, 2, 1.5);
  Mask three = Mask::Constant(4, 8, false);
  for (Index i = 0; i < 4; ++i)
    for (Index k = 0; k < 4; ++k)
      if (k != i) three(i, k) = true;
  EXPECT_NEAR(info_nce(e, e, three, 1.0).value, std::log(4.0), 1e-12);
  EXPECT_NEAR(info_nce(e, e, three, 0.2, Similarity::dot).value, std::log(4.0), 1e-12);
  // self-supervised mask over 2 pairs: 2N - 2 = 2 negatives plus the positive
  EXPECT_NEAR(info_nce(e.topRows(2), e.topRows(2), full_mask(2), 1.0).value, std::log(3.0), 1e-12);
}

TEST(InfoNce, SeparatedPositivesVanishAtLowTemperature) {
  Matrix a(2, 2), p(2, 2);
  a << 1, 0, -1, 0;
  p << 1, 0, -1, 0;
  Mask m = Mask::Constant(2, 4, false);
  m(0, 1) = m(0, 3) = true;  // negatives at cosine -1
  m(1, 0) = m(1, 2) = true;
  EXPECT_LT(info_nce(a, p, m, 0.05).value, 1e-10);
}

TEST(InfoNce, MatchesOracleOnFixedBatches) {
  Matrix a(3, 3), p(3, 3);
  a << 0.3, -1.2, 0.5, 1.1, 0.4, -0.7, -0.6, 0.9, 0.2;
  p << 0.2, -1.0, 0.8, 0.9, 0.1, -0.2, -0.3, 1.2, 0.1;
  const Mask m = full_mask(3);
  for (double tau : {1.0, 0.5, 0.1}) {
    EXPECT_NEAR(info_nce(a, p, m, tau).value, info_nce_oracle(a, p, m, tau, true), 1e-12);
    EXPECT_NEAR(info_nce(a, p, m, tau, Similarity::dot).value, info_nce_oracle(a, p, m, tau, false), 1e-12);
  }
  Mask partial = Mask::Constant(3, 6, false);
  partial(0, 2) = partial(1, 5) = partial(2, 0) = partial(2, 4) = true;
  EXPECT_NEAR(info_nce(a, p, partial, 0.7).value, info_nce_oracle(a, p, partial, 0.7, true), 1e-12);
}

TEST(InfoNce, NonNegativePermutationEquivariantAndScaleInvariant) {
  Rng rng(5);
  const Matrix a = testutil::random_matrix(6, 4, rng);
  const Matrix p = testutil::random_matrix(6, 4, rng);
  const Mask m = full_mask(6);
  const double v = info_nce(a, p, m, 0.5).value;
  EXPECT_GE(v, 0.0);
  std::vector<Index> perm{3, 1, 5, 0, 2, 4};
  Matrix ap(6, 4), pp(6, 4);
  for (Index i = 0; i < 6; ++i) {
    ap.row(i) = a.row(perm[static_cast<std::size_t>(i)]);
    pp.row(i) = p.row(perm[static_cast<std::size_t>(i)]);
  }
  EXPECT_NEAR(info_nce(ap, pp, m, 0.5).value, v, 1e-12);
  EXPECT_NEAR(info_nce(3.7 * a, 3.7 * p, m, 0.5).value, v, 1e-12);
}

TEST(InfoNce, LowerTemperatureLowersLossWhenPositiveIsMostSimilar) {
  Matrix a(2, 2), p(2, 2);
  a << 1, 0.1, -0.2, 1;
  p << 1, 0.2, -0.1, 1;
  const Mask m = full_mask(2);
  double prev = info_nce(a, p, m, 2.0).value;
  for (double tau : {1.0, 0.5, 0.25, 0.1}) {
    const double v = info_nce(a, p, m, tau).value;
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST(InfoNce, EmptyDenominatorIsAnError) {
  const Matrix a = Matrix::Ones(1, 2);
  const Mask m = Mask::Constant(1, 2, false);
  EXPECT_THROW(info_nce(a, a, m, 1.0, Similarity::cosine, false), NumericError);
  EXPECT_THROW(info_nce(a, a, m, 0.0), ConfigError);
}

TEST(InfoNce, GradientMatchesFiniteDifferences) {
  Rng rng(7);
  for (const auto sim : {Similarity::cosine, Similarity::dot}) {
    const Index n = 4;
    const Matrix e = testutil::random_matrix(2 * n, 3, rng);
    Mask m = full_mask(n);
    m(1, 2) = false;
    const double err = embedding_grad_error(e, [&](const Matrix& x) {
      return info_nce(x.topRows(n), x.bottomRows(n), m, 0.5, sim);
    });
    EXPECT_LT(err, 1e-6) << to_string(sim);
  }
}

TEST(SupCon, SymmetricBatchGivesLogThree) {
  const Matrix e = Matrix::Constant(4, 3, 0.4);
  EXPECT_NEAR(sup_con(e, {1, 1, 1, 1}, 1.0).value, std::log(3.0), 1e-12);
}

TEST(SupCon, TwoSameClassItemsGiveZero) {
  Matrix e(2, 2);
  e << 0.3, 0.8, -1.0, 0.2;
  EXPECT_NEAR(sup_con(e, {0, 0}, 1.0).value, 0.0, 1e-15);
}

TEST(SupCon, MatchesOracleOnFixedBatch) {
  const Matrix e = fixed_points();
  for (double tau : {1.0, 0.3}) EXPECT_NEAR(sup_con(e, {1, 1, 0, 0}, tau).value, sup_con_oracle(e, {1, 1, 0, 0}, tau), 1e-12);
  EXPECT_NEAR(sup_con(e, {1, 0, 0, 0}, 1.0).value, sup_con_oracle(e, {1, 0, 0, 0}, 1.0), 1e-12);
}

TEST(SupCon, DotProductIsNotScaleInvariant) {
  const Matrix e = fixed_points();
  EXPECT_GT(std::abs(sup_con(2.0 * e, {1, 1, 0, 0}, 1.0).value - sup_con(e, {1, 1, 0, 0}, 1.0).value), 1e-3);
}

TEST(SupCon, PermutationEquivariant) {
  const Matrix e = fixed_points();
  Matrix p(4, 3);
  p << e.row(2), e.row(0), e.row(3), e.row(1);
  EXPECT_NEAR(sup_con(p, {0, 1, 0, 1}, 1.0).value, sup_con(e, {1, 1, 0, 0}, 1.0).value, 1e-12);
}

TEST(SupCon, NoPositivesAnywhereIsAnError) {
  EXPECT_THROW(sup_con(fixed_points(), {0, 1, 2, 3}, 1.0), NumericError);
  EXPECT_THROW(sup_con(Matrix::Ones(1, 2), {0}, 1.0), ShapeError);
}

TEST(SupCon, GradientMatchesFiniteDifferences) {
  Rng rng(8);
  const Matrix e = testutil::random_matrix(8, 3, rng);
  const std::vector<int> y{1, 0, 1, 1, 0, 0, 1, 2};
  for (const auto sim : {Similarity::dot, Similarity::cosine}) {
    const double err = embedding_grad_error(e, [&](const Matrix& x) { return sup_con(x, y, 0.7, sim); });
    EXPECT_LT(err, 1e-6) << to_string(sim);
  }
}

TEST(Bce, ReferenceValues) {
  Vector p(2);
  p << 0.9, 0.2;
  EXPECT_NEAR(bce(p, {1, 0}).value, -(std::log(0.9) + std::log(0.8)) / 2.0, 1e-15);
  EXPECT_NEAR(bce(p, {1, 0}).value, 0.16425, 1e-5);
  EXPECT_NEAR(bce(Vector::Constant(3, 0.5), {1, 0, 1}).value, std::log(2.0), 1e-15);
  Vector exact(2);
  exact << 1.0, 0.0;
  EXPECT_LT(bce(exact, {1, 0}).value, 1e-11);
  Vector wrong(1);
  wrong << 0.0;
  EXPECT_NEAR(bce(wrong, {1}).value, -std::log(1e-12), 1e-9);
}

TEST(Bce, LogitGradientMatchesFiniteDifferences) {
  Vector logits(5);
  logits << 0.3, -2.0, 1.5, 0.0, -0.4;
  const std::vector<int> y{1, 0, 0, 1, 1};
  auto probs = [&] { return Vector((1.0 + (-logits.array()).exp()).inverse()); };
  const Vector g = bce(probs(), y).grad_logits;
  std::vector<ParamBlock> params{{"logits", {logits.data(), 5}}};
  std::vector<GradBlock> grads{{"logits", {g.data(), 5}}};
  Rng rng(1);
  EXPECT_LT(gradient_check(params, grads, [&] { return bce(probs(), y).value; }, 1e-5, 5, rng).max_relative, 1e-7);
  Vector p(3);
  p << 0.2, 0.6, 0.9;
  const Vector gp = bce(p, {1, 0, 1}).grad_probs;
  std::vector<ParamBlock> pp{{"p", {p.data(), 3}}};
  std::vector<GradBlock> gg{{"p", {gp.data(), 3}}};
  EXPECT_LT(gradient_check(pp, gg, [&] { return bce(p, {1, 0, 1}).value; }, 1e-6, 3, rng).max_relative, 1e-7);
}

TEST(TotalLoss, Linearity) {
  EXPECT_EQ(total_loss(0.0, 0.4, 1.3), 1.3);
  EXPECT_EQ(total_loss(1.0, 0.5, 1.0), 1.5);
  EXPECT_THROW(total_loss(-1.0, 0.5, 1.0), ConfigError);
}

TEST(TotalLoss, SharedEmbeddingGradientCombinesLinearly) {
  // z feeds both a contrastive term and a logistic head w; d/dz = alpha * dBCE/dz + dSCL/dz
  Rng rng(11);
  const Index n = 3;
  const Matrix e = testutil::random_matrix(2 * n, 4, rng);
  const Vector w = testutil::random_matrix(4, 1, rng).col(0);
  const std::vector<int> y{1, 0, 1};
  const Mask m = full_mask(n);
  const double alpha = 0.7;
  auto f = [&](const Matrix& x) {
    const auto scl = info_nce(x.topRows(n), x.bottomRows(n), m, 1.0);
    const Vector logits = x.topRows(n) * w;
    const auto b = bce(Vector((1.0 + (-logits.array()).exp()).inverse()), y);
    LossValue out{total_loss(alpha, b.value, scl.value), scl.grad};
    out.grad.topRows(n) += alpha * b.grad_logits * w.transpose();
    return out;
  };
  EXPECT_LT(embedding_grad_error(e, f), 1e-6);
}
