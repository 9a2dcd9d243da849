#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "fairtab/core/rng.hpp"
#include "fairtab/data/dataset.hpp"
#include "fairtab/error.hpp"

namespace fairtab {

using SplitFractions = std::array<double, 3>;

struct SplitIndices {
  std::vector<std::size_t> train, val, test;
};

namespace detail {

// Largest-remainder apportionment of `total` over cells proportional to `weights`,
// capped by `capacity`. Ties go to the lower cell index.
inline std::vector<std::size_t> apportion(std::size_t total, const std::vector<double>& weights,
                                          const std::vector<std::size_t>& capacity) {
  const std::size_t k = weights.size();
  const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<std::size_t> out(k, 0);
  if (total == 0 || wsum <= 0.0) return out;
  std::vector<double> frac(k, 0.0);
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < k; ++c) {
    const double q = static_cast<double>(total) * weights[c] / wsum;
    out[c] = std::min(static_cast<std::size_t>(std::floor(q)), capacity[c]);
    frac[c] = q - std::floor(q);
    assigned += out[c];
  }
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  while (assigned < total) {
    bool progressed = false;
    for (std::size_t c : order) {
      if (assigned == total) break;
      if (out[c] < capacity[c]) {
        ++out[c];
        ++assigned;
        progressed = true;
      }
    }
    if (!progressed) break;
  }
  return out;
}

}  // namespace detail

/// Stratified (by (y, s) cell) shuffled split of row indices. Split sizes are
/// round(f * n); when the fractions sum to 1 the last split takes the remainder.
inline SplitIndices split_indices(const std::vector<int>& y, const std::vector<int>& s, const SplitFractions& f,
                                  std::uint64_t seed) {
  for (double v : f)
    if (!(v >= 0.0)) throw ConfigError("split: fractions must be non-negative");
  if (!(f[0] > 0.0)) throw ConfigError("split: training fraction must be positive");
  const double fsum = f[0] + f[1] + f[2];
  if (fsum > 1.0 + 1e-9) throw ConfigError("split: fractions sum to more than 1");
  const std::size_t n = y.size();
  const auto cells = subgroup_index(y, s).cells;

  std::array<std::size_t, 3> totals{};
  totals[0] = static_cast<std::size_t>(std::llround(f[0] * static_cast<double>(n)));
  totals[1] = static_cast<std::size_t>(std::llround(f[1] * static_cast<double>(n)));
  totals[2] = std::abs(fsum - 1.0) <= 1e-9 ? n - std::min(n, totals[0] + totals[1])
                                           : static_cast<std::size_t>(std::llround(f[2] * static_cast<double>(n)));
  if (totals[0] + totals[1] + totals[2] > n) throw ConfigError("split: fractions exceed the sample count");

  std::vector<double> weights;
  std::vector<std::size_t> capacity;
  for (const auto& c : cells) {
    weights.push_back(static_cast<double>(c.size()));
    capacity.push_back(c.size());
  }
  std::array<std::vector<std::size_t>, 3> alloc;
  for (std::size_t k = 0; k < 3; ++k) {
    alloc[k] = detail::apportion(totals[k], weights, capacity);
    for (std::size_t c = 0; c < cells.size(); ++c) capacity[c] -= alloc[k][c];
  }

  Rng rng(seed);
  SplitIndices out;
  std::array<std::vector<std::size_t>*, 3> parts{&out.train, &out.val, &out.test};
  for (std::size_t c = 0; c < cells.size(); ++c) {
    auto members = cells[c];
    rng.shuffle(members.begin(), members.end());
    std::size_t at = 0;
    for (std::size_t k = 0; k < 3; ++k) {
      parts[k]->insert(parts[k]->end(), members.begin() + static_cast<std::ptrdiff_t>(at),
                       members.begin() + static_cast<std::ptrdiff_t>(at + alloc[k][c]));
      at += alloc[k][c];
    }
  }
  for (auto* p : parts) rng.shuffle(p->begin(), p->end());
  return out;
}

/// Throws unless all four (y, s) cells of the training rows are populated.
inline void require_all_subgroups(const std::vector<int>& y, const std::vector<int>& s, const std::string& what) {
  const auto idx = subgroup_index(y, s);
  for (int yy = 0; yy <= 1; ++yy)
    for (int ss = 0; ss <= 1; ++ss)
      if (idx(yy, ss).empty())
        throw DataError(what + ": subgroup (y=" + std::to_string(yy) + ", s=" + std::to_string(ss) + ") is empty");
}

struct Splits {
  Dataset train, val, test;
};

inline Splits split(const Dataset& d, const SplitFractions& f, std::uint64_t seed) {
  const auto idx = split_indices(d.y, d.s, f, seed);
  Splits out{subset(d, idx.train), subset(d, idx.val), subset(d, idx.test)};
  require_all_subgroups(out.train.y, out.train.s, "split: training split");
  return out;
}

}  // namespace fairtab
