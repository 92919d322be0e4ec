#include "folomin/sparsity.hpp"

#include "folomin/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace folomin {

IndexSet cone_neighborhood(const Matrix& A, Index j, double epsilon) {
  if (j < 0 || j >= A.rows()) throw UsageError("cone_neighborhood: row index out of range");
  if (epsilon < 0.0 || epsilon > 2.0) {
    throw UsageError("cone_neighborhood: epsilon must lie in [0, 2]");
  }
  IndexSet out;
  const double nj = A.row(j).norm();
  if (nj == 0.0) return out;
  for (Index k = 0; k < A.rows(); ++k) {
    const double nk = A.row(k).norm();
    if (nk == 0.0) continue;
    const double c = std::clamp(A.row(j).dot(A.row(k)) / (nj * nk), -1.0, 1.0);
    if (std::abs(c) >= 1.0 - epsilon) out.push_back(k);
  }
  return out;
}

SparsityProfile detect_simple_rows(const Matrix& A, double zero_tol) {
  if (zero_tol < 0.0) throw UsageError("detect_simple_rows: zero_tol must be >= 0");
  const Index q = A.rows();
  const Index r = A.cols();
  if (r < 2) throw UsageError("detect_simple_rows: need r >= 2");

  SparsityProfile p;
  p.simple_sets.assign(static_cast<std::size_t>(r), {});
  double lam = std::numeric_limits<double>::infinity();
  for (Index j = 0; j < q; ++j) {
    Index support = 0;
    Index axis = -1;
    for (Index l = 0; l < r; ++l) {
      const double m = std::abs(A(j, l));
      if (m > zero_tol) {
        ++support;
        axis = l;
        lam = std::min(lam, m);
      }
    }
    if (support == 0) {
      p.zero_rows.push_back(j);
    } else if (support == 1) {
      p.simple_sets[static_cast<std::size_t>(axis)].push_back(j);
    } else {
      p.non_simple.push_back(j);
    }
  }
  if (std::isfinite(lam)) p.lambda_min = lam;
  p.row_norm_max = linalg::two_to_inf(A);

  double sq = std::numeric_limits<double>::infinity();
  for (Index l = 0; l < r; ++l) {
    Matrix gram = Matrix::Zero(r, r);
    for (Index j = 0; j < q; ++j) {
      if (std::abs(A(j, l)) <= zero_tol) gram += A.row(j).transpose() * A.row(j);
    }
    gram /= static_cast<double>(q);
    Eigen::SelfAdjointEigenSolver<Matrix> es(gram, Eigen::EigenvaluesOnly);
    // Ascending order: lambda_{r-1} (second largest) sits at index 1.
    const Vector& ev = es.eigenvalues();
    double second = ev(1);
    if (second <= 1e-12 * std::max(1.0, ev(r - 1))) second = 0.0;  // rank < r-1
    sq = std::min(sq, second);
  }
  p.sigma_q_inv = sq;

  Index total_simple = 0;
  for (const auto& s : p.simple_sets) total_simple += static_cast<Index>(s.size());
  if (total_simple > 0) {
    double best = std::numeric_limits<double>::infinity();
    for (Index l = 0; l < r; ++l) {
      double acc = 0.0;
      for (Index j : p.simple_sets[static_cast<std::size_t>(l)]) acc += A(j, l) * A(j, l);
      best = std::min(best, acc);
    }
    p.sigma_tilde_q_inv = best / static_cast<double>(total_simple);
  }
  return p;
}

SparsityCheck is_sparse(const Matrix& A, double lambda, double epsilon, double M,
                        double zero_tol) {
  if (!(lambda > 0.0) || !(epsilon > 0.0) || !(M > 0.0)) {
    throw UsageError("is_sparse: lambda, epsilon and M must be positive");
  }
  const SparsityProfile p = detect_simple_rows(A, zero_tol);
  SparsityCheck out;

  Index min_set = std::numeric_limits<Index>::max();
  for (const auto& s : p.simple_sets) min_set = std::min(min_set, static_cast<Index>(s.size()));
  out.min_simple_set = min_set;

  for (Index j = 0; j < A.rows(); ++j) {
    for (Index l = 0; l < A.cols(); ++l) {
      const double m = std::abs(A(j, l));
      if (m > zero_tol && m < lambda) {
        out.violated = SparsityClause::SignalStrength;
        out.row = j;
        return out;
      }
    }
  }

  // Cones are computed with entries below the tolerance snapped to zero so
  // that the definition's exact-zero semantics apply.
  Matrix snapped = A.unaryExpr([zero_tol](double v) { return std::abs(v) <= zero_tol ? 0.0 : v; });
  Index worst_row = -1;
  Index worst = 0;
  for (Index j : p.non_simple) {
    const Index c = static_cast<Index>(cone_neighborhood(snapped, j, epsilon).size());
    if (c > worst) {
      worst = c;
      worst_row = j;
    }
  }
  out.max_nonsimple_cone = worst;
  if (!(worst < min_set)) {
    out.violated = SparsityClause::AngularSeparation;
    if (worst_row >= 0) out.row = worst_row;
    return out;
  }

  for (Index j = 0; j < A.rows(); ++j) {
    if (A.row(j).norm() > M) {
      out.violated = SparsityClause::RowNorm;
      out.row = j;
      return out;
    }
  }
  out.sparse = true;
  return out;
}

}  // namespace folomin
