#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "fairtab/core/rng.hpp"
#include "fairtab/data/dataset.hpp"
#include "fairtab/error.hpp"
#include "fairtab/log.hpp"

namespace fairtab {

/// fair: (y=1, s=1) anchors take positives from (y=1, s=0); all other anchors from
/// their own (y, s) cell. counterfactual: each anchor's positive is its own
/// sensitive-flipped twin. none: any other sample of the same class.
enum class PairMode { fair, counterfactual, none };

enum class PositiveSource { train, counterfactual_twin };

inline std::string_view to_string(PairMode m) {
  switch (m) {
    case PairMode::fair: return "fair";
    case PairMode::counterfactual: return "counterfactual";
    case PairMode::none: return "none";
  }
  return "fair";
}

inline PairMode pair_mode_from_string(std::string_view s) {
  if (s == "fair") return PairMode::fair;
  if (s == "counterfactual") return PairMode::counterfactual;
  if (s == "none") return PairMode::none;
  throw ConfigError("unknown sampler mode '" + std::string(s) + "'");
}

/// Anchor -> positive assignment for one epoch.
struct PairPlan {
  std::vector<std::size_t> positive_of;
  std::vector<int> anchor_y, anchor_s, pos_y, pos_s;
  std::uint64_t seed = 0;
  PairMode mode = PairMode::fair;
  PositiveSource source = PositiveSource::train;
  std::size_t fallbacks = 0;  // anchors paired by the singleton-cell fallback

  std::size_t size() const { return positive_of.size(); }
};

namespace detail {

// Uniform member of `pool` other than `self`, where `self` sits at `self_pos`
// in the pool (or self_pos == pool.size() when it is not a member).
inline std::size_t draw_other(const std::vector<std::size_t>& pool, std::size_t self_pos, Rng& rng) {
  if (self_pos >= pool.size()) return pool[rng.index(pool.size())];
  std::size_t r = rng.index(pool.size() - 1);
  if (r >= self_pos) ++r;
  return pool[r];
}

}  // namespace detail

inline PairPlan assign_positives(const Dataset& train, const SubgroupIndex& groups, PairMode mode, Rng& rng) {
  const std::size_t n = train.size();
  if (groups.total() != n) throw SamplerError("assign_positives: subgroup index does not match dataset");
  PairPlan plan;
  plan.seed = rng.seed();
  plan.mode = mode;
  plan.positive_of.resize(n);
  plan.anchor_y = train.y;
  plan.anchor_s = train.s;
  plan.pos_y.resize(n);
  plan.pos_s.resize(n);

  if (mode == PairMode::counterfactual) {
    if (!train.sensitive.binary())
      throw SamplerError("assign_positives: counterfactual pairing needs a binary sensitive encoding");
    plan.source = PositiveSource::counterfactual_twin;
    for (std::size_t i = 0; i < n; ++i) {
      plan.positive_of[i] = i;
      plan.pos_y[i] = train.y[i];
      plan.pos_s[i] = 1 - train.s[i];
    }
    return plan;
  }

  // Position of every sample within its own cell and within its class.
  std::vector<std::size_t> cell_pos(n), class_pos(n);
  std::array<std::vector<std::size_t>, 2> classes;
  for (const auto& cell : groups.cells)
    for (std::size_t k = 0; k < cell.size(); ++k) cell_pos[cell[k]] = k;
  for (std::size_t i = 0; i < n; ++i) {
    class_pos[i] = classes[static_cast<std::size_t>(train.y[i])].size();
    classes[static_cast<std::size_t>(train.y[i])].push_back(i);
  }

  auto same_class = [&](std::size_t i) {
    const auto& pool = classes[static_cast<std::size_t>(train.y[i])];
    if (pool.size() < 2)
      throw SamplerError("assign_positives: class y=" + std::to_string(train.y[i]) + " has a single member");
    return detail::draw_other(pool, class_pos[i], rng);
  };

  const auto& cross_pool = groups(1, 0);
  if (mode == PairMode::fair && !groups(1, 1).empty() && cross_pool.empty())
    throw SamplerError("assign_positives: subgroup (y=1, s=0) is empty but (y=1, s=1) anchors need it");

  for (std::size_t i = 0; i < n; ++i) {
    const int y = train.y[i];
    const int s = train.s[i];
    std::size_t pos = 0;
    if (mode == PairMode::none) {
      pos = same_class(i);
    } else if (y == 1 && s == 1) {
      pos = detail::draw_other(cross_pool, cross_pool.size(), rng);
    } else {
      const auto& cell = groups(y, s);
      if (cell.size() >= 2) {
        pos = detail::draw_other(cell, cell_pos[i], rng);
      } else {
        ++plan.fallbacks;
        pos = same_class(i);
      }
    }
    plan.positive_of[i] = pos;
    plan.pos_y[i] = train.y[pos];
    plan.pos_s[i] = train.s[pos];
  }
  if (plan.fallbacks > 0)
    log::warn("assign_positives: " + std::to_string(plan.fallbacks) +
              " anchor(s) in singleton subgroups paired with a same-class sample");
  return plan;
}

/// Fraction of favorable anchors that the fair policy pairs across groups:
/// |(y=1, s=1)| / |y=1|.
inline double estimate_pi(const Dataset& train, const SubgroupIndex& groups) {
  (void)train;
  const std::size_t favorable = groups(1, 1).size() + groups(1, 0).size();
  if (favorable == 0) throw SamplerError("estimate_pi: no favorable (y=1) samples");
  return static_cast<double>(groups(1, 1).size()) / static_cast<double>(favorable);
}

/// Plan rows in batch order. Embedding slot k < N is anchor k, slot N + k its positive.
struct Batch {
  std::vector<std::size_t> anchors;
  std::vector<std::size_t> positives;
  std::vector<int> y, s, pos_y, pos_s;
  PositiveSource source = PositiveSource::train;

  std::size_t size() const { return anchors.size(); }
};

/// Shuffles anchors and cuts them into batches of `batch_size`. A trailing batch of
/// a single anchor is merged into the previous batch, so every anchor appears in
/// exactly one batch.
inline std::vector<Batch> make_batches(const PairPlan& plan, std::size_t batch_size, Rng& rng) {
  if (batch_size < 2) throw ConfigError("make_batches: batch_size must be at least 2");
  const std::size_t n = plan.size();
  if (n < 2) throw SamplerError("make_batches: need at least two anchors");
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(order.begin(), order.end());

  std::vector<Batch> batches;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t end = std::min(n, start + batch_size);
    Batch* b = nullptr;
    if (end - start == 1 && !batches.empty()) {
      b = &batches.back();
    } else {
      batches.emplace_back();
      b = &batches.back();
      b->source = plan.source;
    }
    for (std::size_t k = start; k < end; ++k) {
      const std::size_t a = order[k];
      b->anchors.push_back(a);
      b->positives.push_back(plan.positive_of[a]);
      b->y.push_back(plan.anchor_y[a]);
      b->s.push_back(plan.anchor_s[a]);
      b->pos_y.push_back(plan.pos_y[a]);
      b->pos_s.push_back(plan.pos_s[a]);
    }
  }
  return batches;
}

enum class TrainingMode { supervised, self_supervised };

inline std::string_view to_string(TrainingMode m) {
  return m == TrainingMode::supervised ? "supervised" : "self-supervised";
}

inline TrainingMode training_mode_from_string(std::string_view s) {
  if (s == "supervised") return TrainingMode::supervised;
  if (s == "self-supervised" || s == "self_supervised" || s == "unsupervised") return TrainingMode::self_supervised;
  throw ConfigError("unknown training mode '" + std::string(s) + "'");
}

/// N x 2N; row i marks the negatives of anchor i among all batch embeddings.
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// self_supervised: every embedding except the anchor and its own positive.
/// supervised: every embedding whose label differs from the anchor's.
inline Mask negatives_mask(const Batch& batch, TrainingMode mode) {
  const auto n = static_cast<Eigen::Index>(batch.size());
  Mask mask = Mask::Constant(n, 2 * n, false);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < 2 * n; ++k) {
      if (mode == TrainingMode::self_supervised) {
        mask(i, k) = k != i && k != n + i;
      } else {
        const int yk = k < n ? batch.y[static_cast<std::size_t>(k)] : batch.pos_y[static_cast<std::size_t>(k - n)];
        mask(i, k) = yk != batch.y[static_cast<std::size_t>(i)];
      }
    }
  }
  return mask;
}

/// Audit export: anchor_index,positive_index,anchor_y,anchor_s,pos_y,pos_s.
inline void write_pair_plan_csv(const std::string& path, const PairPlan& plan) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << "anchor_index,positive_index,anchor_y,anchor_s,pos_y,pos_s\n";
  for (std::size_t i = 0; i < plan.size(); ++i)
    out << i << ',' << plan.positive_of[i] << ',' << plan.anchor_y[i] << ',' << plan.anchor_s[i] << ','
        << plan.pos_y[i] << ',' << plan.pos_s[i] << '\n';
}

}  // namespace fairtab
