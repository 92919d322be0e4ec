#include "folomin/lqa.hpp"

#include "folomin/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace folomin {

void LqaConfig::validate() const {
  if (!(R > 0.0)) throw UsageError("lqa: R must be positive");
  if (!(eta > 0.0)) throw UsageError("lqa: eta must be positive");
  if (T < 0) throw UsageError("lqa: T must be nonnegative");
}

Matrix lqa_weights(const Matrix& A, const FoldedLoss& loss, double eta) {
  if (!(eta > 0.0)) throw UsageError("lqa_weights: eta must be positive");
  Matrix W(A.rows(), A.cols());
  for (Index l = 0; l < A.cols(); ++l) {
    for (Index j = 0; j < A.rows(); ++j) {
      const double a = std::abs(A(j, l));
      const double d = a == 0.0 ? loss.d1_at_zero_plus() : loss.d1(a);
      W(j, l) = d / std::sqrt(a * a + eta * eta);
    }
  }
  return W;
}

namespace {

Matrix normalize_columns(const Matrix& H) {
  Matrix out = H;
  for (Index l = 0; l < H.cols(); ++l) out.col(l).normalize();
  return out;
}

}  // namespace

SubproblemResult lqa_subproblem_detail(const Matrix& A, const Matrix& weights, double R) {
  if (!(R > 0.0)) throw UsageError("lqa_subproblem: R must be positive");
  if (weights.rows() != A.rows() || weights.cols() != A.cols()) {
    throw UsageError("lqa_subproblem: weights must match A");
  }
  if (weights.minCoeff() < 0.0) throw UsageError("lqa_subproblem: weights must be nonnegative");
  const Index r = A.cols();
  Matrix H(r, r);
  for (Index l = 0; l < r; ++l) {
    const Matrix Wl = A.transpose() * weights.col(l).asDiagonal() * A;
    H.col(l) = linalg::smallest_eigenvector(Wl, l);
  }

  SubproblemResult out;
  const Matrix I = Matrix::Identity(r, r);
  if (linalg::operator_norm(H - I) > R) {
    // The blended, renormalized matrix is continuous in s and feasible at
    // s = 0; bisect for the largest feasible s.
    double lo = 0.0, hi = 1.0;
    for (int k = 0; k < 100; ++k) {
      const double mid = 0.5 * (lo + hi);
      const Matrix cand = normalize_columns(I + mid * (H - I));
      if (linalg::operator_norm(cand - I) <= R) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    out.blend = lo;
    H = normalize_columns(I + lo * (H - I));
  }

  if (!(linalg::condition_number(H) <= 1e8)) {
    throw NumericalError("degenerate LQA subproblem: selected columns are nearly identical");
  }
  out.H = std::move(H);
  return out;
}

Matrix lqa_subproblem(const Matrix& A, const Matrix& weights, double R) {
  return lqa_subproblem_detail(A, weights, R).H;
}

namespace {

double surrogate(const Matrix& A, const Matrix& W, const Matrix& H) {
  return (W.array() * (A * H).array().square()).sum();
}

}  // namespace

LqaResult lqa_run(const ParamPair& start, const LqaConfig& config) {
  config.validate();
  const Index r = start.r();
  const double n = static_cast<double>(start.n());

  LqaResult out;
  out.params = start;
  out.G_total = Matrix::Identity(r, r);
  out.trace.initial_criterion = criterion_folomin(start.A, config.loss);

  for (int t = 0; t < config.T; ++t) {
    ParamPair& p = out.params;
    LqaIteration rec;
    const Matrix W = lqa_weights(p.A, config.loss, config.eta);
    rec.weight_mean = W.mean();
    rec.weight_max = W.maxCoeff();
    rec.weight_nonzero = (W.array() > 0.0).count();

    const SubproblemResult sub = lqa_subproblem_detail(p.A, W, config.R);
    const Matrix& H = sub.H;
    rec.blend = sub.blend;
    rec.step_norm = linalg::operator_norm(H - Matrix::Identity(r, r));
    rec.surrogate_at_identity = surrogate(p.A, W, Matrix::Identity(r, r));
    rec.surrogate_at_solution = surrogate(p.A, W, H);

    const Matrix H_inv = H.inverse();
    Matrix G, G_inv;
    if (config.mode == RotationMode::Orthogonal) {
      G = linalg::polar_factor(H_inv);
      G_inv = G.transpose();
    } else {
      const Matrix S = p.Z.transpose() * p.Z / n;
      const Vector d = (H_inv * S * H_inv.transpose()).diagonal();
      G = d.cwiseSqrt().cwiseInverse().asDiagonal() * H_inv;
      G_inv = H * d.cwiseSqrt().asDiagonal();
    }
    p.Z = p.Z * G.transpose();
    p.A = p.A * G_inv;
    out.G_total = G * out.G_total;

    rec.criterion = criterion_folomin(p.A, config.loss);
    if (!std::isfinite(rec.criterion)) {
      throw NumericalError("LQA: criterion became non-finite");
    }
    const Vector diag = (p.Z.transpose() * p.Z / n).diagonal();
    rec.diag_residual = (diag.array() - 1.0).abs().maxCoeff();
    out.trace.iterations.push_back(rec);
  }
  return out;
}

double default_gamma(const Matrix& A, const Matrix& standard_errors, double a3) {
  if (standard_errors.rows() != A.rows() || standard_errors.cols() != A.cols()) {
    throw UsageError("default_gamma: standard errors must match A");
  }
  double lam = std::numeric_limits<double>::infinity();
  double smallest_nonzero = std::numeric_limits<double>::infinity();
  for (Index l = 0; l < A.cols(); ++l) {
    for (Index j = 0; j < A.rows(); ++j) {
      const double a = std::abs(A(j, l));
      if (a > 0.0) smallest_nonzero = std::min(smallest_nonzero, a);
      if (a > 3.0 * standard_errors(j, l)) lam = std::min(lam, a);
    }
  }
  if (!std::isfinite(lam)) lam = smallest_nonzero;
  if (!std::isfinite(lam)) throw NumericalError("default_gamma: A has no nonzero entries");
  return 0.5 * lam / (a3 + 1.0);
}

}  // namespace folomin
