#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairtab/core/rng.hpp"
#include "fairtab/error.hpp"
#include "fairtab/theory/checks.hpp"
#include "fairtab/theory/pair_law.hpp"
#include "fairtab/theory/random_laws.hpp"

namespace fairtab::theory {

// Declarative list of theory checks, read from JSON:
//
// {
//   "bases": { "name": {"builtin": "shipped"} | {"p": [[[p(x,y=0,s=0), p(x,0,1)], [p(x,1,0), p(x,1,1)]], ...]} },
//   "checks": [
//     {"name": ..., "type": "decomposition", "base": ..., "encoder": [..], "pi": 0.6, "scope": "all_classes"},
//     {"name": ..., "type": "random_decomposition", "count": 20, "seed": 0},
//     {"name": ..., "type": "bound", "base": ..., "encoder": [..], "K": [1, 4, 16], "samples": 100000,
//      "tau": 0.5, "seed": 0, "embeddings": [[..], ..]},
//     {"name": ..., "type": "ib_equivalence", "base": ..., "codes": 2 | "family": [[..], ..], "K": [..], "tau": 1.0}
//   ]
// }
//
// "pi" and "scope" are accepted by every check that builds a pair law; "pi"
// defaults to the data-driven value and "scope" to favorable_only.

struct CheckResult {
  std::string name;
  std::string type;
  bool pass = false;
  std::string diagnostic;
  nlohmann::json details;
};

struct PlanReport {
  std::vector<CheckResult> checks;
  bool all_pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return !checks.empty();
  }
};

inline constexpr double kResidualTol = 1e-10;

inline FiniteJoint base_from_json(const nlohmann::json& j) {
  if (j.contains("builtin")) {
    if (j["builtin"].get<std::string>() == "shipped") return shipped_base();
    throw ConfigError("unknown builtin base '" + j["builtin"].get<std::string>() + "'");
  }
  if (!j.contains("p")) throw ConfigError("base needs \"builtin\" or \"p\"");
  const auto& p = j["p"];
  if (!p.is_array() || p.empty()) throw ConfigError("base \"p\" must be a nonempty array over x");
  FiniteJoint b({p.size(), 2, 2}, {"X", "Y", "S"});
  for (std::size_t x = 0; x < p.size(); ++x)
    for (std::size_t y = 0; y < 2; ++y)
      for (std::size_t s = 0; s < 2; ++s) b.at({x, y, s}) = p.at(x).at(y).at(s).get<double>();
  b.validate();
  return b;
}

inline PairLawOptions law_options_from_json(const nlohmann::json& j) {
  PairLawOptions o;
  if (j.contains("pi")) o.pi = j["pi"].get<double>();
  if (j.contains("scope")) o.scope = cross_scope_from_string(j["scope"].get<std::string>());
  return o;
}

namespace detail {

inline std::vector<std::size_t> k_list(const nlohmann::json& c) {
  if (!c.contains("K")) return {1, 4, 16};
  if (c["K"].is_number()) return {c["K"].get<std::size_t>()};
  return c["K"].get<std::vector<std::size_t>>();
}

inline CheckResult run_decomposition(const nlohmann::json& c, const FiniteJoint& base) {
  CheckResult r;
  const DiscreteEncoder enc(c.at("encoder").get<std::vector<std::size_t>>());
  const PairLaw law = build_pair_law(base, enc, law_options_from_json(c));
  const auto report = check_assumptions(law);
  const double residual = verify_decomposition(law);
  r.details = {{"pi", law.pi}, {"cross_mass", law.cross_mass}, {"residual", residual}, {"assumptions", report}};
  r.pass = report.holds && residual < kResidualTol;
  if (!report.holds) {
    r.diagnostic = "assumption violated:";
    for (const auto& v : report.violated()) r.diagnostic += " [" + v + "]";
  } else if (!r.pass) {
    r.diagnostic = "residual " + std::to_string(residual) + " exceeds tolerance";
  }
  return r;
}

inline CheckResult run_random_decomposition(const nlohmann::json& c) {
  CheckResult r;
  const std::size_t count = c.value("count", std::size_t{20});
  Rng rng(c.value("seed", std::uint64_t{0}));
  double worst = 0.0;
  std::size_t valid = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const auto lc = random_valid_case(rng, i);
    const PairLaw law = build_pair_law(lc.base, lc.encoder, lc.options);
    if (check_assumptions(law).holds) ++valid;
    worst = std::max(worst, verify_decomposition(law));
  }
  r.details = {{"count", count}, {"valid", valid}, {"max_residual", worst}};
  r.pass = count > 0 && valid == count && worst < kResidualTol;
  if (!r.pass) r.diagnostic = std::to_string(valid) + "/" + std::to_string(count) + " laws valid, max residual " +
                              std::to_string(worst);
  return r;
}

inline CheckResult run_bound(const nlohmann::json& c, const FiniteJoint& base) {
  CheckResult r;
  const DiscreteEncoder enc(c.at("encoder").get<std::vector<std::size_t>>());
  const PairLaw law = build_pair_law(base, enc, law_options_from_json(c));
  const double tau = c.value("tau", 1.0);
  const Critic critic = c.contains("embeddings")
                            ? dot_critic(c["embeddings"].get<std::vector<std::vector<double>>>(), tau)
                            : onehot_critic(tau);
  Rng rng(c.value("seed", std::uint64_t{0}));
  const std::size_t samples = c.value("samples", std::size_t{100000});
  r.pass = true;
  r.details = nlohmann::json::array();
  for (std::size_t K : k_list(c)) {
    const BoundCheck b = infonce_bound_check(law, critic, K, samples, rng);
    r.details.push_back(b);
    if (!b.holds) {
      r.pass = false;
      r.diagnostic += "K=" + std::to_string(K) + ": lhs " + std::to_string(b.lhs) + " > rhs " + std::to_string(b.rhs) +
                      " + 3 se; ";
    }
  }
  return r;
}

inline CheckResult run_ib(const nlohmann::json& c, const FiniteJoint& base) {
  CheckResult r;
  std::vector<DiscreteEncoder> family;
  if (c.contains("family")) {
    for (const auto& m : c["family"]) family.emplace_back(m.get<std::vector<std::size_t>>());
  } else {
    family = DiscreteEncoder::exhaustive(base.size(base_axis::x), c.value("codes", std::size_t{2}));
  }
  const PairLawOptions opt = law_options_from_json(c);
  const double tau = c.value("tau", 1.0);
  r.pass = true;
  r.details = nlohmann::json::array();
  for (std::size_t K : k_list(c)) {
    const IbReport ib = ib_equivalence_check(base, family, K, tau, opt);
    r.details.push_back(ib);
    if (!ib.coincide) {
      r.pass = false;
      r.diagnostic += "K=" + std::to_string(K) + ": argmin of the InfoNCE loss differs from argmax of the "
                      "bottleneck objective; ";
    }
  }
  return r;
}

}  // namespace detail

/// Runs every check; a failing or infeasible entry is reported without
/// stopping the others.
inline PlanReport run_plan(const nlohmann::json& plan) {
  if (!plan.is_object() || !plan.contains("checks") || !plan["checks"].is_array())
    throw ConfigError("theory plan needs a \"checks\" array");
  std::map<std::string, nlohmann::json> bases;
  if (plan.contains("bases"))
    for (auto it = plan["bases"].begin(); it != plan["bases"].end(); ++it) bases[it.key()] = it.value();

  PlanReport out;
  std::size_t idx = 0;
  for (const auto& c : plan["checks"]) {
    CheckResult r;
    const std::string type = c.value("type", std::string());
    const std::string name = c.value("name", type + "#" + std::to_string(idx++));
    try {
      if (type == "random_decomposition") {
        r = detail::run_random_decomposition(c);
      } else {
        const std::string base_name = c.value("base", std::string("shipped"));
        const auto it = bases.find(base_name);
        const FiniteJoint base = it != bases.end() ? base_from_json(it->second)
                                 : base_name == "shipped" ? shipped_base()
                                                          : throw ConfigError("unknown base '" + base_name + "'");
        if (type == "decomposition") r = detail::run_decomposition(c, base);
        else if (type == "bound") r = detail::run_bound(c, base);
        else if (type == "ib_equivalence") r = detail::run_ib(c, base);
        else throw ConfigError("unknown check type '" + type + "'");
      }
    } catch (const TheoryError& e) {
      r.pass = false;
      r.diagnostic = e.what();
    } catch (const nlohmann::json::exception& e) {
      r.pass = false;
      r.diagnostic = std::string("malformed check: ") + e.what();
    } catch (const ConfigError& e) {
      r.pass = false;
      r.diagnostic = e.what();
    }
    r.name = name;
    r.type = type;
    out.checks.push_back(std::move(r));
  }
  return out;
}

inline nlohmann::json read_plan(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open theory plan '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("theory plan '" + path + "': " + e.what());
  }
}

inline void to_json(nlohmann::json& j, const CheckResult& r) {
  j = nlohmann::json{{"name", r.name}, {"type", r.type}, {"pass", r.pass}, {"details", r.details}};
  if (!r.diagnostic.empty()) j["diagnostic"] = r.diagnostic;
}

inline void to_json(nlohmann::json& j, const PlanReport& r) {
  j = nlohmann::json{{"all_pass", r.all_pass()}, {"checks", r.checks}};
}

}  // namespace fairtab::theory
