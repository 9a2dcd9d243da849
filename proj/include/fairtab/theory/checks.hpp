#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairtab/core/rng.hpp"
#include "fairtab/error.hpp"
#include "fairtab/log.hpp"
#include "fairtab/theory/finite_joint.hpp"
#include "fairtab/theory/pair_law.hpp"

namespace fairtab::theory {

/// Log-similarity between two codes: log g(z, z').
using Critic = std::function<double(std::size_t, std::size_t)>;

/// exp(<e_z, e_z'> / tau) with one-hot code embeddings.
inline Critic onehot_critic(double tau) {
  if (!(tau > 0.0)) throw ConfigError("onehot_critic: tau must be positive");
  return [tau](std::size_t a, std::size_t b) { return a == b ? 1.0 / tau : 0.0; };
}

/// exp(<e_z, e_z'> / tau) with the given code embeddings.
inline Critic dot_critic(std::vector<std::vector<double>> emb, double tau) {
  if (!(tau > 0.0)) throw ConfigError("dot_critic: tau must be positive");
  return [emb = std::move(emb), tau](std::size_t a, std::size_t b) {
    const auto& u = emb.at(a);
    const auto& v = emb.at(b);
    double d = 0.0;
    for (std::size_t k = 0; k < u.size() && k < v.size(); ++k) d += u[k] * v[k];
    return d / tau;
  };
}

namespace detail {

inline double log_sum_exp(const std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

/// True when the critic takes one value over all code pairs with mass.
inline bool critic_degenerate(const Critic& f, const std::vector<double>& pz, const std::vector<double>& pzp) {
  bool first = true;
  double ref = 0.0;
  for (std::size_t a = 0; a < pz.size(); ++a) {
    if (pz[a] <= 0.0) continue;
    for (std::size_t b = 0; b < pzp.size(); ++b) {
      if (pzp[b] <= 0.0) continue;
      const double v = f(a, b);
      if (first) ref = v, first = false;
      else if (v != ref) return false;
    }
  }
  return true;
}

inline std::vector<double> axis_marginal(const FiniteJoint& j, std::size_t axis) {
  return j.marginal({axis}).table();
}

}  // namespace detail

struct BoundCheck {
  std::size_t K = 0;
  std::size_t n_samples = 0;
  double loss = 0.0;       ///< Monte Carlo InfoNCE loss
  double lhs = 0.0;        ///< -loss + log K
  double rhs = 0.0;        ///< exact I(Z;Z+)
  double std_error = 0.0;  ///< of the loss estimate
  bool degenerate = false;
  bool holds = false;      ///< lhs <= rhs + 3 std_error
};

/// Monte Carlo estimate of -L_NCE + log K against the exact I(Z;Z+). Pairs are
/// drawn from the law, the K negatives i.i.d. from the marginal of Z+.
inline BoundCheck infonce_bound_check(const PairLaw& law, const Critic& critic, std::size_t K,
                                      std::size_t n_samples, Rng& rng) {
  using namespace pair_axis;
  if (K < 1) throw ConfigError("infonce_bound_check: K must be at least 1");
  if (n_samples < 2) throw ConfigError("infonce_bound_check: need at least two samples");
  const FiniteJoint pairs = law.joint.marginal({z, zp});
  const std::size_t nz = pairs.size(0), nzp = pairs.size(1);
  const std::vector<double> pz = detail::axis_marginal(law.joint, z);
  const std::vector<double> pzp = detail::axis_marginal(law.joint, zp);

  BoundCheck r;
  r.K = K;
  r.n_samples = n_samples;
  r.rhs = exact_mi(law.joint, {z}, {zp});
  r.degenerate = detail::critic_degenerate(critic, pz, pzp);
  if (r.degenerate) log::warn("infonce_bound_check: critic is constant on the support, loss is log(K+1)");

  std::discrete_distribution<std::size_t> draw_pair(pairs.table().begin(), pairs.table().end());
  std::discrete_distribution<std::size_t> draw_neg(pzp.begin(), pzp.end());
  std::vector<double> logits(K + 1);
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t n = 0; n < n_samples; ++n) {
    const std::size_t cell = draw_pair(rng.engine());
    const std::size_t a = cell / nzp, b = cell % nzp;
    logits[0] = critic(a, b);
    for (std::size_t k = 1; k <= K; ++k) logits[k] = critic(a, draw_neg(rng.engine()));
    const double loss = detail::log_sum_exp(logits) - logits[0];
    sum += loss;
    sum_sq += loss * loss;
  }
  (void)nz;
  const double n = static_cast<double>(n_samples);
  r.loss = sum / n;
  const double var = std::max(0.0, (sum_sq - n * r.loss * r.loss) / (n - 1.0));
  r.std_error = std::sqrt(var / n);
  r.lhs = -r.loss + std::log(static_cast<double>(K));
  r.holds = r.lhs <= r.rhs + 3.0 * r.std_error;
  return r;
}

/// Population InfoNCE loss: exact expectation over pairs from the law and K
/// i.i.d. negatives from the marginal of Z+, enumerating negative code counts.
inline double exact_infonce(const PairLaw& law, const Critic& critic, std::size_t K) {
  using namespace pair_axis;
  if (K < 1) throw ConfigError("exact_infonce: K must be at least 1");
  const FiniteJoint pairs = law.joint.marginal({z, zp});
  const std::size_t nz = pairs.size(0), nzp = pairs.size(1);
  const std::vector<double> q = detail::axis_marginal(law.joint, zp);

  std::vector<double> log_fact(K + 1, 0.0);
  for (std::size_t k = 1; k <= K; ++k) log_fact[k] = log_fact[k - 1] + std::log(static_cast<double>(k));

  // every composition of K into nzp counts, with its multinomial probability
  std::vector<std::vector<std::size_t>> counts;
  std::vector<double> prob;
  std::vector<std::size_t> m(nzp, 0);
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t i, std::size_t left) {
    if (i + 1 == nzp) {
      m[i] = left;
      double lp = log_fact[K];
      for (std::size_t b = 0; b < nzp; ++b) {
        if (m[b] == 0) continue;
        if (q[b] <= 0.0) return;
        lp += static_cast<double>(m[b]) * std::log(q[b]) - log_fact[m[b]];
      }
      counts.push_back(m);
      prob.push_back(std::exp(lp));
      return;
    }
    for (std::size_t c = 0; c <= left; ++c) {
      m[i] = c;
      rec(i + 1, left - c);
    }
  };
  rec(0, K);

  double loss = 0.0;
  std::vector<double> logits;
  for (std::size_t a = 0; a < nz; ++a)
    for (std::size_t b = 0; b < nzp; ++b) {
      const double p = pairs({a, b});
      if (p <= 0.0) continue;
      const double pos = critic(a, b);
      double inner = 0.0;
      for (std::size_t t = 0; t < counts.size(); ++t) {
        logits.assign(1, pos);
        for (std::size_t c = 0; c < nzp; ++c)
          if (counts[t][c] > 0) logits.push_back(critic(a, c) + std::log(static_cast<double>(counts[t][c])));
        inner += prob[t] * (detail::log_sum_exp(logits) - pos);
      }
      loss += p * inner;
    }
  return loss;
}

struct EncoderScore {
  DiscreteEncoder encoder;
  bool feasible = true;
  std::string diagnostic;
  double l_nce = 0.0;
  double mi_pairs = 0.0;  ///< I(Z;Z+)
  double mi_zy = 0.0;     ///< I(Z;Y)
  double leakage = 0.0;   ///< I(Z;S|Y)
  double ib = 0.0;        ///< I(Z;Y) - lambda I(Z;S|Y)
  double ib_plus = 0.0;   ///< I(Z;Y) + lambda I(Z;S|Y)
  bool assumptions_hold = false;
};

struct IbReport {
  double pi = 0.0;
  double lambda = 0.0;
  std::size_t K = 0;
  double tau = 1.0;
  std::vector<EncoderScore> encoders;
  std::vector<std::size_t> argmin_nce;
  std::vector<std::size_t> argmax_ib;
  std::vector<std::size_t> argmax_ib_plus;
  bool coincide = false;       ///< argmin L_NCE == argmax (I(Z;Y) - lambda I(Z;S|Y))
  bool coincide_plus = false;  ///< argmin L_NCE == argmax (I(Z;Y) + lambda I(Z;S|Y))
  std::size_t skipped = 0;
};

namespace detail {

/// Indices within `tol` (relative to max(1, |best|)) of the best value.
inline std::vector<std::size_t> arg_best(const std::vector<EncoderScore>& e, double EncoderScore::*field, bool maximize,
                                         double tol = 1e-9) {
  double best = maximize ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
  for (const auto& s : e)
    if (s.feasible) best = maximize ? std::max(best, s.*field) : std::min(best, s.*field);
  std::vector<std::size_t> out;
  const double slack = tol * std::max(1.0, std::abs(best));
  for (std::size_t i = 0; i < e.size(); ++i)
    if (e[i].feasible && std::abs(e[i].*field - best) <= slack) out.push_back(i);
  return out;
}

}  // namespace detail

/// Scores every encoder by exact population InfoNCE (one-hot code embeddings,
/// temperature tau, K negatives) and by the bottleneck objective with
/// lambda = 1 - pi, then compares the optimal sets. Encoders whose pair law
/// cannot be built are skipped with a warning.
inline IbReport ib_equivalence_check(const FiniteJoint& base, const std::vector<DiscreteEncoder>& family,
                                     std::size_t K, double tau, const PairLawOptions& opt = {}) {
  using namespace pair_axis;
  if (family.empty()) throw ConfigError("ib_equivalence_check: empty encoder family");
  IbReport r;
  r.pi = opt.pi ? *opt.pi : data_pi(base);
  r.lambda = 1.0 - r.pi;
  r.K = K;
  r.tau = tau;
  const Critic critic = onehot_critic(tau);
  for (const auto& enc : family) {
    EncoderScore e;
    e.encoder = enc;
    try {
      const PairLaw law = build_pair_law(base, enc, opt);
      e.l_nce = exact_infonce(law, critic, K);
      e.mi_pairs = exact_mi(law.joint, {z}, {zp});
      e.mi_zy = exact_mi(law.joint, {z}, {y});
      e.leakage = exact_cmi(law.joint, {z}, {s}, {y});
      e.ib = e.mi_zy - r.lambda * e.leakage;
      e.ib_plus = e.mi_zy + r.lambda * e.leakage;
      e.assumptions_hold = check_assumptions(law).holds;
    } catch (const TheoryError& err) {
      e.feasible = false;
      e.diagnostic = err.what();
      ++r.skipped;
      log::warn(std::string("ib_equivalence_check: skipping encoder: ") + err.what());
    }
    r.encoders.push_back(std::move(e));
  }
  r.argmin_nce = detail::arg_best(r.encoders, &EncoderScore::l_nce, false);
  r.argmax_ib = detail::arg_best(r.encoders, &EncoderScore::ib, true);
  r.argmax_ib_plus = detail::arg_best(r.encoders, &EncoderScore::ib_plus, true);
  r.coincide = !r.argmin_nce.empty() && r.argmin_nce == r.argmax_ib;
  r.coincide_plus = !r.argmin_nce.empty() && r.argmin_nce == r.argmax_ib_plus;
  return r;
}

/// Four-point base: x in {0, 1} for y = 0 with x strongly tied to s, x in {2, 3}
/// for y = 1 independent of s. Pr[Y = 1] = 0.5, Pr[S = 1 | Y = 1] = 0.6.
inline FiniteJoint shipped_base() {
  FiniteJoint b({4, 2, 2}, {"X", "Y", "S"});
  // y = 0: Pr[S = 1 | Y = 0] = 0.4, Pr[X = 1 | Y = 0, S = s] = 0.2 + 0.6 s
  b.at({0, 0, 0}) = 0.5 * 0.6 * 0.8;
  b.at({1, 0, 0}) = 0.5 * 0.6 * 0.2;
  b.at({0, 0, 1}) = 0.5 * 0.4 * 0.2;
  b.at({1, 0, 1}) = 0.5 * 0.4 * 0.8;
  // y = 1: Pr[X = 3 | Y = 1] = 0.3 for both groups
  for (std::size_t s = 0; s < 2; ++s) {
    const double ps = s == 1 ? 0.6 : 0.4;
    b.at({2, 1, s}) = 0.5 * ps * 0.7;
    b.at({3, 1, s}) = 0.5 * ps * 0.3;
  }
  b.validate();
  return b;
}

inline void to_json(nlohmann::json& j, const BoundCheck& b) {
  j = nlohmann::json{{"K", b.K},       {"n_samples", b.n_samples}, {"loss", b.loss},
                     {"lhs", b.lhs},   {"rhs", b.rhs},             {"std_error", b.std_error},
                     {"degenerate", b.degenerate}, {"holds", b.holds}};
}

inline void to_json(nlohmann::json& j, const EncoderScore& s) {
  j = nlohmann::json{{"encoder", s.encoder}, {"feasible", s.feasible}};
  if (!s.feasible) {
    j["diagnostic"] = s.diagnostic;
    return;
  }
  j["l_nce"] = s.l_nce;
  j["mi_pairs"] = s.mi_pairs;
  j["mi_zy"] = s.mi_zy;
  j["leakage"] = s.leakage;
  j["ib"] = s.ib;
  j["ib_plus"] = s.ib_plus;
  j["assumptions_hold"] = s.assumptions_hold;
}

inline void to_json(nlohmann::json& j, const IbReport& r) {
  j = nlohmann::json{{"pi", r.pi},
                     {"lambda", r.lambda},
                     {"K", r.K},
                     {"tau", r.tau},
                     {"encoders", r.encoders},
                     {"argmin_nce", r.argmin_nce},
                     {"argmax_ib", r.argmax_ib},
                     {"argmax_ib_plus", r.argmax_ib_plus},
                     {"coincide", r.coincide},
                     {"coincide_plus", r.coincide_plus},
                     {"skipped", r.skipped}};
}

}  // namespace fairtab::theory
