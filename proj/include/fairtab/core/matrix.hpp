#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string>

#include "fairtab/error.hpp"

namespace fairtab {

/// Row-major dense matrix; rows are samples throughout the library.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

inline void require_shape(const Matrix& m, Index rows, Index cols, const std::string& what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw ShapeError(what + ": expected " + std::to_string(rows) + "x" + std::to_string(cols) +
                     ", got " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
}

/// Gathers the given rows of `src` into a new matrix.
template <class Indices>
Matrix gather_rows(const Matrix& src, const Indices& rows) {
  Matrix out(static_cast<Index>(rows.size()), src.cols());
  Index r = 0;
  for (auto i : rows) out.row(r++) = src.row(static_cast<Index>(i));
  return out;
}

}  // namespace fairtab
