#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "fairtab/core/mlp.hpp"
#include "fairtab/core/rng.hpp"

namespace fairtab {

struct GradCheckReport {
  double max_relative = 0.0;  // max |a - n| / max(|a|, |n|, 1e-12)
  std::size_t checked = 0;
  std::string worst_block;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

/// Compares analytic gradients against central differences of `loss`.
///
/// `loss` is re-evaluated with each parameter perturbed by +h and -h in place;
/// parameters are restored exactly afterwards. At most `per_block` coordinates
/// per block are checked (chosen with `rng` when a block is larger). Never throws
/// on disagreement; the caller judges the report.
template <class Loss>
GradCheckReport gradient_check(std::span<const ParamBlock> params, std::span<const GradBlock> analytic, Loss&& loss,
                               double h, std::size_t per_block, Rng& rng) {
  GradCheckReport report;
  for (std::size_t b = 0; b < params.size() && b < analytic.size(); ++b) {
    auto values = params[b].values;
    std::vector<std::size_t> coords(values.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (coords.size() > per_block) {
      rng.shuffle(coords.begin(), coords.end());
      coords.resize(per_block);
    }
    for (std::size_t i : coords) {
      const double saved = values[i];
      values[i] = saved + h;
      const double up = loss();
      values[i] = saved - h;
      const double down = loss();
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[b].values[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-12});
      const double rel = std::abs(a - numeric) / denom;
      ++report.checked;
      if (rel > report.max_relative || report.checked == 1) {
        report.max_relative = rel;
        report.worst_block = params[b].name;
        report.worst_index = i;
        report.worst_analytic = a;
        report.worst_numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace fairtab
