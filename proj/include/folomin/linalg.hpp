#pragma once

#include "folomin/types.hpp"

namespace folomin::linalg {

/// ||M||_{2->inf}: the largest Euclidean row norm.
double two_to_inf(const Matrix& M);

/// Largest singular value.
double operator_norm(const Matrix& M);

/// sigma_max / sigma_min; +inf for a singular matrix.
double condition_number(const Matrix& M);

/// Orthogonal polar factor U V' of a square matrix (nearest orthogonal matrix
/// in Frobenius norm).
Matrix polar_factor(const Matrix& M);

/// S^{1/2} and S^{-1/2} of a symmetric positive definite matrix.
Matrix sqrt_spd(const Matrix& S);
Matrix inverse_sqrt_spd(const Matrix& S);

/// Rows whose norm exceeds `bound` are scaled back onto the ball. Returns the
/// number of rows touched.
Index clip_rows(Matrix& M, double bound);

/// (M + M') / 2
Matrix symmetrize(const Matrix& M);

/// Unit eigenvector of the symmetric matrix W for its smallest eigenvalue.
/// Within a (numerically) repeated smallest eigenvalue the representative
/// with the largest component along `preferred` is returned, with that
/// component made nonnegative.
Vector smallest_eigenvector(const Matrix& W, Index preferred);

/// Re-expresses (Z, A) so that n^{-1} Z'Z = I and A'A is diagonal (columns
/// ordered by decreasing squared norm) while leaving Z A' unchanged.
/// Throws NumericalError if Z is rank deficient.
void orthonormalize_pair(Matrix& Z, Matrix& A);

}  // namespace folomin::linalg
