#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairtab/error.hpp"
#include "fairtab/theory/finite_joint.hpp"

namespace fairtab::theory {

/// Axes of a base law over (X, Y, S).
namespace base_axis {
inline constexpr std::size_t x = 0, y = 1, s = 2;
}

/// Axes of a pair law over (Z, Z+, Y, S, C).
namespace pair_axis {
inline constexpr std::size_t z = 0, zp = 1, y = 2, s = 3, c = 4;
}

inline constexpr std::size_t kWithin = 0;
inline constexpr std::size_t kCross = 1;

/// Deterministic map from base support {0..n_x-1} to codes {0..n_codes-1}.
struct DiscreteEncoder {
  std::vector<std::size_t> map;
  std::size_t n_codes = 0;

  DiscreteEncoder() = default;

  explicit DiscreteEncoder(std::vector<std::size_t> m, std::size_t codes = 0) : map(std::move(m)), n_codes(codes) {
    if (map.empty()) throw TheoryError("DiscreteEncoder: empty map");
    std::size_t top = 0;
    for (std::size_t z : map) top = std::max(top, z + 1);
    if (n_codes == 0) n_codes = top;
    if (top > n_codes) throw TheoryError("DiscreteEncoder: code exceeds n_codes");
  }

  std::size_t operator()(std::size_t x) const {
    if (x >= map.size()) throw TheoryError("DiscreteEncoder: input " + std::to_string(x) + " outside its domain");
    return map[x];
  }

  static DiscreteEncoder identity(std::size_t n) {
    std::vector<std::size_t> m(n);
    for (std::size_t i = 0; i < n; ++i) m[i] = i;
    return DiscreteEncoder(m, n);
  }

  /// All n_codes^n_x maps, in lexicographic order of (map[0], ..., map[n_x-1]).
  static std::vector<DiscreteEncoder> exhaustive(std::size_t n_x, std::size_t codes) {
    if (n_x == 0 || codes == 0) throw TheoryError("DiscreteEncoder::exhaustive: sizes must be positive");
    std::vector<DiscreteEncoder> out;
    std::vector<std::size_t> m(n_x, 0);
    while (true) {
      out.emplace_back(m, codes);
      std::size_t k = n_x;
      while (k > 0 && ++m[k - 1] == codes) m[--k] = 0;
      if (k == 0) break;
    }
    return out;
  }
};

inline void to_json(nlohmann::json& j, const DiscreteEncoder& e) { j = e.map; }

/// Which anchors take part in the cross/within mixture. Anchors outside the
/// scope always draw a within-group positive.
enum class CrossScope { favorable_only, all_classes };

inline std::string to_string(CrossScope s) { return s == CrossScope::favorable_only ? "favorable_only" : "all_classes"; }

inline CrossScope cross_scope_from_string(const std::string& s) {
  if (s == "favorable_only") return CrossScope::favorable_only;
  if (s == "all_classes") return CrossScope::all_classes;
  throw ConfigError("unknown cross scope '" + s + "' (expected favorable_only or all_classes)");
}

struct PairLawOptions {
  std::optional<double> pi;  ///< mixture weight; defaults to the data-driven value
  CrossScope scope = CrossScope::favorable_only;
  double feasibility_tol = 1e-12;
};

struct PairLaw {
  FiniteJoint joint;  ///< over (Z, Z+, Y, S, C)
  double pi = 0.0;    ///< cross weight for anchors inside the scope
  double cross_mass = 0.0;  ///< Pr[C = cross]
  CrossScope scope = CrossScope::favorable_only;
  std::optional<FiniteJoint> p_cross;   ///< law given C = cross
  std::optional<FiniteJoint> p_within;  ///< law given C = within
};

inline void check_base(const FiniteJoint& base) {
  base.validate();
  if (base.rank() != 3 || base.size(base_axis::y) != 2 || base.size(base_axis::s) != 2)
    throw TheoryError("base law must be over (X, Y, S) with binary Y and S");
}

/// Pr[S+ != S | Y = 1] under the sampler policy: every favorable privileged
/// anchor draws a cross positive, so this is Pr[S = 1 | Y = 1].
inline double data_pi(const FiniteJoint& base) {
  check_base(base);
  const double fav = base.probability(base_axis::y, 1);
  if (fav <= 0.0) throw TheoryError("data_pi: favorable class has zero probability");
  double fav_priv = 0.0;
  for (std::size_t x = 0; x < base.size(base_axis::x); ++x) fav_priv += base({x, 1, 1});
  return fav_priv / fav;
}

/// I(X;S | Y = y) on the base law.
inline double base_leakage_given(const FiniteJoint& base, std::size_t y) {
  return exact_mi(base.given(base_axis::y, y), {base_axis::x}, {base_axis::s});
}

/// Joint over (Z, Z+, Y, S, C). An anchor (x, y, s) draws C = cross with weight
/// pi when y is in scope; a cross positive comes from p(x | y, 1 - s), a within
/// positive from p(x | y, s). Cross pairs require X independent of S given Y on
/// every class in scope, otherwise Z and Z+ stay coupled through S.
inline PairLaw build_pair_law(const FiniteJoint& base, const DiscreteEncoder& enc, const PairLawOptions& opt = {}) {
  check_base(base);
  const std::size_t nx = base.size(base_axis::x);
  if (enc.map.size() != nx)
    throw TheoryError("build_pair_law: encoder domain has " + std::to_string(enc.map.size()) +
                      " points, base has " + std::to_string(nx));
  const double pi = opt.pi ? *opt.pi : data_pi(base);
  if (!(pi >= 0.0 && pi <= 1.0)) throw TheoryError("build_pair_law: pi must lie in [0, 1]");

  double p_ys[2][2] = {{0, 0}, {0, 0}};
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t y = 0; y < 2; ++y)
      for (std::size_t s = 0; s < 2; ++s) p_ys[y][s] += base({x, y, s});

  double pi_y[2] = {0.0, 0.0};
  for (std::size_t y = 0; y < 2; ++y) {
    const bool in_scope = y == 1 || opt.scope == CrossScope::all_classes;
    if (!in_scope || pi == 0.0 || p_ys[y][0] + p_ys[y][1] == 0.0) continue;
    if (p_ys[y][0] == 0.0 || p_ys[y][1] == 0.0)
      throw TheoryError("build_pair_law: cross pairs for y=" + std::to_string(y) +
                        " need both sensitive groups to have positive mass");
    const double leak = base_leakage_given(base, y);
    if (leak > opt.feasibility_tol)
      throw TheoryError("build_pair_law: pair-wise Markov assumption infeasible: cross pairs need X independent "
                        "of S given Y=" + std::to_string(y) + ", but I(X;S|Y=" + std::to_string(y) +
                        ") = " + std::to_string(leak) + " nats");
    pi_y[y] = pi;
  }

  const std::size_t nz = enc.n_codes;
  FiniteJoint j({nz, nz, 2, 2, 2}, {"Z", "Z+", "Y", "S", "C"});
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t y = 0; y < 2; ++y)
      for (std::size_t s = 0; s < 2; ++s) {
        const double p = base({x, y, s});
        if (p == 0.0) continue;
        const std::size_t z = enc(x);
        for (std::size_t xp = 0; xp < nx; ++xp) {
          const double w_within = (1.0 - pi_y[y]) * base({xp, y, s}) / p_ys[y][s];
          if (w_within > 0.0) j.add({z, enc(xp), y, s, kWithin}, p * w_within);
          if (pi_y[y] > 0.0) {
            const double w_cross = pi_y[y] * base({xp, y, 1 - s}) / p_ys[y][1 - s];
            if (w_cross > 0.0) j.add({z, enc(xp), y, s, kCross}, p * w_cross);
          }
        }
      }
  j.validate();

  PairLaw law;
  law.joint = std::move(j);
  law.pi = pi;
  law.scope = opt.scope;
  law.cross_mass = law.joint.probability(pair_axis::c, kCross);
  if (law.cross_mass > 0.0) law.p_cross = law.joint.given(pair_axis::c, kCross);
  if (law.cross_mass < 1.0) law.p_within = law.joint.given(pair_axis::c, kWithin);
  return law;
}

struct Condition {
  std::string name;
  double value = 0.0;
  bool ok = true;
};

/// Checks the modelling assumptions and every identity the decomposition
/// argument relies on. Values are nats; gaps are absolute differences.
struct AssumptionReport {
  std::vector<Condition> conditions;
  bool holds = true;

  const Condition* find(const std::string& name) const {
    for (const auto& c : conditions)
      if (c.name == name) return &c;
    return nullptr;
  }

  std::vector<std::string> violated() const {
    std::vector<std::string> out;
    for (const auto& c : conditions)
      if (!c.ok) out.push_back(c.name);
    return out;
  }
};

inline AssumptionReport check_assumptions(const PairLaw& law, double tol = 1e-10) {
  using namespace pair_axis;
  AssumptionReport r;
  auto add = [&](std::string name, double v) {
    const bool ok = std::abs(v) <= tol;
    r.conditions.push_back({std::move(name), v, ok});
    r.holds = r.holds && ok;
  };
  const FiniteJoint& j = law.joint;
  const double mi_zy = exact_mi(j, {z}, {y});
  const double leak = exact_cmi(j, {z}, {s}, {y});

  if (law.p_cross) {
    const FiniteJoint& jc = *law.p_cross;
    add("markov_cross: I(Z;Z+|Y,C=cross)", exact_cmi(jc, {z}, {zp}, {y}));
    add("step_cross: I(Z;Z+|C=cross) - I(Z;Y|C=cross)", exact_mi(jc, {z}, {zp}) - exact_mi(jc, {z}, {y}));
    add("drop_c_cross: I(Z;Y|C=cross) - I(Z;Y)", exact_mi(jc, {z}, {y}) - mi_zy);
  }
  if (law.p_within) {
    const FiniteJoint& jw = *law.p_within;
    add("markov_within: I(Z;Z+|Y,S,C=within)", exact_cmi(jw, {z}, {zp}, {y, s}));
    add("step_within: I(Z;Z+|C=within) - I(Z;Y,S|C=within)", exact_mi(jw, {z}, {zp}) - exact_mi(jw, {z}, {y, s}));
    add("drop_c_within: I(Z;Y|C=within) - I(Z;Y)", exact_mi(jw, {z}, {y}) - mi_zy);
    add("drop_c_leakage: I(Z;S|Y,C=within) - I(Z;S|Y)", exact_cmi(jw, {z}, {s}, {y}) - leak);
  }
  add("c_independent: I(Z;C|Y,S)", exact_cmi(j, {z}, {c}, {y, s}));
  add("c_independent: I(Z+;C|Y,S)", exact_cmi(j, {zp}, {c}, {y, s}));
  add("c_uninformative: I(Z;C)", exact_mi(j, {z}, {c}));
  add("c_uninformative: I(Z;C|Z+)", exact_cmi(j, {z}, {c}, {zp}));
  return r;
}

/// |I(Z;Z+) - I(Z;Y) - (1 - pi) I(Z;S|Y)|.
inline double verify_decomposition(const PairLaw& law) {
  using namespace pair_axis;
  const double lhs = exact_mi(law.joint, {z}, {zp});
  const double rhs = exact_mi(law.joint, {z}, {y}) + (1.0 - law.pi) * exact_cmi(law.joint, {z}, {s}, {y});
  return std::abs(lhs - rhs);
}

inline void to_json(nlohmann::json& j, const AssumptionReport& r) {
  j = nlohmann::json{{"holds", r.holds}, {"conditions", nlohmann::json::array()}};
  for (const auto& c : r.conditions) j["conditions"].push_back({{"name", c.name}, {"value", c.value}, {"ok", c.ok}});
}

}  // namespace fairtab::theory
