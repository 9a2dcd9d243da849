#pragma once

#include <array>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "fairtab/core/matrix.hpp"
#include "fairtab/core/rng.hpp"
#include "fairtab/data/dataset.hpp"

namespace testutil {

inline fairtab::Matrix random_matrix(fairtab::Index rows, fairtab::Index cols, fairtab::Rng& rng, double scale = 1.0) {
  fairtab::Matrix m(rows, cols);
  for (fairtab::Index r = 0; r < rows; ++r)
    for (fairtab::Index c = 0; c < cols; ++c) m(r, c) = rng.normal(0.0, scale);
  return m;
}

// Dataset with the given (y, s) labels and random features.
inline fairtab::Dataset labelled_dataset(const std::vector<int>& y, const std::vector<int>& s, fairtab::Index dim,
                                         std::uint64_t seed) {
  fairtab::Rng rng(seed);
  fairtab::Dataset d;
  d.X = random_matrix(static_cast<fairtab::Index>(y.size()), dim, rng);
  d.y = y;
  d.s = s;
  d.provenance = "test";
  return d;
}

// Dataset with `counts[slot]` rows in each (y, s) cell, slot = 2y + s.
inline fairtab::Dataset cell_dataset(const std::array<std::size_t, 4>& counts, fairtab::Index dim,
                                     std::uint64_t seed) {
  std::vector<int> y, s;
  for (int slot = 0; slot < 4; ++slot)
    for (std::size_t k = 0; k < counts[static_cast<std::size_t>(slot)]; ++k) {
      y.push_back(slot / 2);
      s.push_back(slot % 2);
    }
  return labelled_dataset(y, s, dim, seed);
}

inline std::string source_path(const std::string& rel) { return std::string(FAIRTAB_SOURCE_DIR) + "/" + rel; }

inline std::string data_dir() {
  if (const char* env = std::getenv("FAIRTAB_DATA_DIR")) return env;
  return source_path("data");
}

inline bool have_data(const std::string& file) { return std::filesystem::exists(data_dir() + "/" + file); }

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("fairtab_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testutil
