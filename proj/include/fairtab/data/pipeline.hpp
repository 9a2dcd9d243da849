#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fairtab/data/preprocess.hpp"
#include "fairtab/data/schema.hpp"
#include "fairtab/data/split.hpp"

namespace fairtab {

struct PreparedData {
  Splits splits;
  FitStats stats;
  SplitIndices indices;  // rows of the loaded table
  std::size_t rows_read = 0;
  std::size_t rows_dropped = 0;
  std::vector<std::string> warnings;
};

/// Splits raw rows stratified by (y, s), fits preprocessing on the training rows
/// and applies it to all three splits.
inline PreparedData prepare(const RawTable& raw, const Schema& schema, const SplitFractions& fractions,
                            std::uint64_t seed) {
  PreparedData out;
  out.rows_read = raw.rows_read;
  out.rows_dropped = raw.rows_dropped;
  out.indices = split_indices(raw.y, raw.s, fractions, seed);
  auto train = preprocess(raw.subset(out.indices.train), schema);
  out.stats = train.stats;
  out.warnings = train.warnings;
  out.splits.train = std::move(train.data);
  out.splits.val = preprocess(raw.subset(out.indices.val), schema, out.stats).data;
  out.splits.test = preprocess(raw.subset(out.indices.test), schema, out.stats).data;
  require_all_subgroups(out.splits.train.y, out.splits.train.s, "prepare: training split");
  return out;
}

inline PreparedData prepare_csv(const std::string& csv_path, const Schema& schema,
                                const SplitFractions& fractions = {0.70, 0.15, 0.15}, std::uint64_t seed = 0) {
  return prepare(load_csv(csv_path, schema), schema, fractions, seed);
}

}  // namespace fairtab
