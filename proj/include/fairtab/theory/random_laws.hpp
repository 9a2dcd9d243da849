#pragma once

#include <cstddef>
#include <vector>

#include "fairtab/core/rng.hpp"
#include "fairtab/theory/pair_law.hpp"

namespace fairtab::theory {

struct LawCase {
  FiniteJoint base;
  DiscreteEncoder encoder;
  PairLawOptions options;
};

inline std::vector<double> random_simplex(std::size_t n, Rng& rng) {
  std::vector<double> p(n);
  double t = 0.0;
  for (auto& v : p) t += (v = rng.uniform(0.05, 1.0));
  for (auto& v : p) v /= t;
  return p;
}

// Cross pairs on both classes, pi in (0, 1]. X has disjoint support per y and
// X is independent of S given Y; the encoder never merges points across y.
inline LawCase random_mixed_case(Rng& rng) {
  const std::size_t n0 = 1 + rng.index(3), n1 = 1 + rng.index(3);
  FiniteJoint base({n0 + n1, 2, 2}, {"X", "Y", "S"});
  const double py1 = rng.uniform(0.2, 0.8);
  for (std::size_t y = 0; y < 2; ++y) {
    const std::size_t lo = y == 0 ? 0 : n0, n = y == 0 ? n0 : n1;
    const auto px = random_simplex(n, rng);
    const double ps1 = rng.uniform(0.1, 0.9);
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t s = 0; s < 2; ++s)
        base.at({lo + k, y, s}) = (y == 1 ? py1 : 1 - py1) * px[k] * (s == 1 ? ps1 : 1 - ps1);
  }
  const std::size_t k0 = 1 + rng.index(n0), k1 = 1 + rng.index(n1);
  std::vector<std::size_t> map(n0 + n1);
  for (std::size_t x = 0; x < n0; ++x) map[x] = rng.index(k0);
  for (std::size_t x = n0; x < n0 + n1; ++x) map[x] = k0 + rng.index(k1);
  PairLawOptions opt;
  opt.scope = CrossScope::all_classes;
  opt.pi = rng.uniform(0.05, 1.0);
  return {base, DiscreteEncoder(map, k0 + k1), opt};
}

// No cross pairs (pi = 0). X has disjoint support per (y, s) cell, so S is
// informative given Y; the encoder never merges points across cells.
inline LawCase random_within_case(Rng& rng) {
  std::size_t n[4], lo[4], total = 0;
  for (std::size_t c = 0; c < 4; ++c) {
    n[c] = 1 + rng.index(2);
    lo[c] = total;
    total += n[c];
  }
  FiniteJoint base({total, 2, 2}, {"X", "Y", "S"});
  const auto pcell = random_simplex(4, rng);
  std::vector<std::size_t> map(total);
  std::size_t next_code = 0;
  for (std::size_t c = 0; c < 4; ++c) {
    const auto px = random_simplex(n[c], rng);
    const std::size_t codes = 1 + rng.index(n[c]);
    for (std::size_t k = 0; k < n[c]; ++k) {
      base.at({lo[c] + k, c / 2, c % 2}) = pcell[c] * px[k];
      map[lo[c] + k] = next_code + rng.index(codes);
    }
    next_code += codes;
  }
  PairLawOptions opt;
  opt.scope = CrossScope::all_classes;
  opt.pi = 0.0;
  return {base, DiscreteEncoder(map, next_code), opt};
}

/// Alternates between the two valid families above.
inline LawCase random_valid_case(Rng& rng, std::size_t i) {
  return i % 2 == 0 ? random_mixed_case(rng) : random_within_case(rng);
}

}  // namespace fairtab::theory
