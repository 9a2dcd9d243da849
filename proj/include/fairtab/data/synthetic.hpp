#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "fairtab/core/rng.hpp"
#include "fairtab/data/dataset.hpp"
#include "fairtab/data/split.hpp"
#include "fairtab/error.hpp"

namespace fairtab {

/// Biased synthetic population.
///
/// s ~ Bernoulli(0.5); y ~ Bernoulli(base_rate +/- bias_strength / 2) for s = 1 / 0.
/// The first d - 1 columns are Gaussian with unit variance and mean
/// a_j (2y - 1) + b_j (2s - 1), cycling through three column types:
/// label-only (a = 1, b = 0), mixed (a = 0.5, b = 0.5) and proxy (a = 0, b = 1).
/// The last column is the sensitive indicator s itself.
inline Dataset synth_biased(std::size_t n, std::size_t d, double bias_strength, double base_rate,
                            std::uint64_t seed) {
  if (n < 40) throw ConfigError("synth_biased: n must be at least 40");
  if (d < 2) throw ConfigError("synth_biased: d must be at least 2");
  if (bias_strength < 0.0 || bias_strength > 1.0) throw ConfigError("synth_biased: bias_strength must lie in [0, 1]");
  const double p1 = base_rate + bias_strength / 2.0;
  const double p0 = base_rate - bias_strength / 2.0;
  if (!(p0 > 0.0) || !(p1 < 1.0))
    throw DataError("synth_biased: infeasible rates P(y=1|s=0)=" + std::to_string(p0) +
                    ", P(y=1|s=1)=" + std::to_string(p1));

  Rng rng(seed);
  Dataset out;
  out.X.resize(static_cast<Index>(n), static_cast<Index>(d));
  out.y.resize(n);
  out.s.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int s = rng.bernoulli(0.5) ? 1 : 0;
    const int y = rng.bernoulli(s == 1 ? p1 : p0) ? 1 : 0;
    out.s[i] = s;
    out.y[i] = y;
    const double ys = 2.0 * y - 1.0;
    const double ss = 2.0 * s - 1.0;
    for (std::size_t j = 0; j + 1 < d; ++j) {
      double a = 1.0, b = 0.0;
      if (j % 3 == 1) a = 0.5, b = 0.5;
      else if (j % 3 == 2) a = 0.0, b = 1.0;
      out.X(static_cast<Index>(i), static_cast<Index>(j)) = a * ys + b * ss + rng.normal();
    }
    out.X(static_cast<Index>(i), static_cast<Index>(d - 1)) = s;
  }
  for (std::size_t j = 0; j + 1 < d; ++j) out.feature_names.push_back("x" + std::to_string(j));
  out.feature_names.push_back("s");
  out.sensitive.kind = SensitiveEncoding::Kind::indicator;
  out.sensitive.columns = {static_cast<Index>(d - 1)};
  out.sensitive.group_of_column = {1};
  out.provenance = "synth(n=" + std::to_string(n) + ",bias=" + std::to_string(bias_strength) +
                   ",seed=" + std::to_string(seed) + ")";
  require_all_subgroups(out.y, out.s, "synth_biased");
  out.validate();
  return out;
}

}  // namespace fairtab
