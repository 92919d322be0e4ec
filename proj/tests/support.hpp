#pragma once

#include "folomin/types.hpp"

#include <functional>

namespace test {

using folomin::Index;
using folomin::Matrix;

/// Central difference of f at x with step h.
inline double central_diff(const std::function<double(double)>& f, double x, double h = 1e-5) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

/// I_r repeated `copies` times down the rows.
inline Matrix stacked_identity(Index r, Index copies) {
  Matrix A = Matrix::Zero(r * copies, r);
  for (Index c = 0; c < copies; ++c) A.block(c * r, 0, r, r).setIdentity();
  return A;
}

/// Two simple blocks (q1 rows e_1, q2 rows e_2) plus a single mixed row nu.
/// Varimax does not have this matrix as a stationary point.
inline Matrix mixed_row_matrix(Index q1 = 3, Index q2 = 3, double nu1 = 0.5, double nu2 = 0.3) {
  Matrix A = Matrix::Zero(q1 + q2 + 1, 2);
  A.col(0).head(q1).setOnes();
  A.col(1).segment(q1, q2).setOnes();
  A(q1 + q2, 0) = nu1;
  A(q1 + q2, 1) = nu2;
  return A;
}

}  // namespace test
