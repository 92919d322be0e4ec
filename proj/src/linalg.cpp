#include "folomin/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace folomin::linalg {

double two_to_inf(const Matrix& M) {
  if (M.rows() == 0) return 0.0;
  return M.rowwise().norm().maxCoeff();
}

double operator_norm(const Matrix& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(M);
  return svd.singularValues()(0);
}

double condition_number(const Matrix& M) {
  Eigen::JacobiSVD<Matrix> svd(M);
  const Vector& s = svd.singularValues();
  const double smin = s(s.size() - 1);
  if (!(smin > 0.0)) return std::numeric_limits<double>::infinity();
  return s(0) / smin;
}

Matrix polar_factor(const Matrix& M) {
  Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

Matrix sqrt_spd(const Matrix& S) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(S));
  if (es.eigenvalues().minCoeff() <= 0.0) {
    throw NumericalError("sqrt_spd: matrix is not positive definite");
  }
  return es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() *
         es.eigenvectors().transpose();
}

Matrix inverse_sqrt_spd(const Matrix& S) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(S));
  if (es.eigenvalues().minCoeff() <= 0.0) {
    throw NumericalError("inverse_sqrt_spd: matrix is not positive definite");
  }
  return es.eigenvectors() *
         es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
         es.eigenvectors().transpose();
}

Index clip_rows(Matrix& M, double bound) {
  Index touched = 0;
  for (Index i = 0; i < M.rows(); ++i) {
    const double nrm = M.row(i).norm();
    if (nrm > bound) {
      M.row(i) *= bound / nrm;
      ++touched;
    }
  }
  return touched;
}

Matrix symmetrize(const Matrix& M) { return 0.5 * (M + M.transpose()); }

Vector smallest_eigenvector(const Matrix& W, Index preferred) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(W));
  const Vector& ev = es.eigenvalues();  // ascending
  const Matrix& V = es.eigenvectors();
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  const double tie = 1e-12 * scale;
  Index m = 1;
  while (m < ev.size() && ev(m) - ev(0) <= tie) ++m;

  Vector h;
  if (m == 1) {
    h = V.col(0);
  } else {
    // Project the preferred axis onto the minimal eigenspace.
    const Matrix B = V.leftCols(m);
    h = B * B.row(preferred).transpose();
    if (h.norm() < 1e-12) {
      h = V.col(0);
    } else {
      h.normalize();
    }
  }
  if (h(preferred) < 0.0) h = -h;
  return h;
}

void orthonormalize_pair(Matrix& Z, Matrix& A) {
  const double n = static_cast<double>(Z.rows());
  const Index r = Z.cols();
  Eigen::HouseholderQR<Matrix> qr(Z);
  Matrix R = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
  // R shares its singular values with Z.
  Eigen::JacobiSVD<Matrix> svd(R);
  if (!(svd.singularValues()(r - 1) > 1e-8 * std::sqrt(n))) {
    throw NumericalError("degenerate fit: latent score matrix lost column rank");
  }
  Matrix Q = qr.householderQ() * Matrix::Identity(Z.rows(), r);
  Matrix Zn = std::sqrt(n) * Q;
  Matrix An = A * R.transpose() / std::sqrt(n);

  Eigen::SelfAdjointEigenSolver<Matrix> es(An.transpose() * An);
  // Reverse so the columns come out by decreasing norm.
  Matrix V = es.eigenvectors().rowwise().reverse();
  // Deterministic orientation: largest-magnitude entry of each column of V
  // positive.
  for (Index k = 0; k < r; ++k) {
    Index imax = 0;
    V.col(k).cwiseAbs().maxCoeff(&imax);
    if (V(imax, k) < 0.0) V.col(k) *= -1.0;
  }
  Z = Zn * V;
  A = An * V;
}

}  // namespace folomin::linalg
