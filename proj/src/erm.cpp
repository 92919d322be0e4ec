#include "folomin/erm.hpp"

#include "folomin/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace folomin {

StepRule StepRule::backtracking(double shrink, double c) {
  StepRule s;
  s.kind = Kind::Backtracking;
  s.shrink = shrink;
  s.c = c;
  return s;
}

StepRule StepRule::fixed(double step) {
  StepRule s;
  s.kind = Kind::Fixed;
  s.step = step;
  return s;
}

void FitConfig::validate() const {
  if (max_iters < 1) throw UsageError("fit: max_iters must be positive");
  if (!(tol > 0.0)) throw UsageError("fit: tol must be positive");
  if (step_rule.kind == StepRule::Kind::Backtracking) {
    if (!(step_rule.shrink > 0.0 && step_rule.shrink < 1.0)) {
      throw UsageError("fit: backtracking shrink must lie in (0, 1)");
    }
    if (!(step_rule.c > 0.0 && step_rule.c < 1.0)) {
      throw UsageError("fit: Armijo constant must lie in (0, 1)");
    }
  }
  if (!(step_rule.step > 0.0)) throw UsageError("fit: step must be positive");
}

namespace {

/// Mean risk of one row problem: m^{-1} sum_i l(x_i' b; y_i).
struct RowProblem {
  FamilyKind kind;
  const Matrix& X;  // m x r
  const double* y;  // m contiguous responses

  double value(const Vector& b) const {
    const Vector t = X * b;
    double s = 0.0;
    for (Index i = 0; i < t.size(); ++i) s += detail::risk(kind, t(i), y[i]);
    return s / static_cast<double>(X.rows());
  }

  // Mean gradient and Hessian at b; returns the mean risk.
  double derivatives(const Vector& b, Vector& g, Matrix& H) const {
    const Index m = X.rows();
    const Vector t = X * b;
    Vector d1(m), d2(m);
    double s = 0.0;
    for (Index i = 0; i < m; ++i) {
      s += detail::risk(kind, t(i), y[i]);
      d1(i) = detail::risk_d1(kind, t(i), y[i]);
      d2(i) = detail::risk_d2(kind, t(i), y[i]);
    }
    const double inv = 1.0 / static_cast<double>(m);
    g = inv * (X.transpose() * d1);
    H = inv * (X.transpose() * d2.asDiagonal() * X);
    return s * inv;
  }
};

Vector project_ball(const Vector& b, double M) {
  const double nrm = b.norm();
  if (std::isfinite(M) && nrm > M) return b * (M / nrm);
  return b;
}

Vector newton_direction(const Vector& g, const Matrix& H) {
  const Index r = g.size();
  const double ridge = 1e-12 * std::max(1.0, H.diagonal().cwiseAbs().maxCoeff());
  Eigen::LLT<Matrix> llt(H + ridge * Matrix::Identity(r, r));
  if (llt.info() != Eigen::Success) return -g;
  return -llt.solve(g);
}

/// One projected step with line search. Returns the accepted point (equal to
/// b when no decrease was found).
Vector row_step(const RowProblem& prob, const Vector& b, Direction dir, const StepRule& rule,
                double M) {
  Vector g;
  Matrix H;
  const double f0 = prob.derivatives(b, g, H);
  const Vector d = dir == Direction::Newton ? newton_direction(g, H) : Vector(-g);
  if (rule.kind == StepRule::Kind::Fixed) {
    return project_ball(b + rule.step * d, M);
  }
  double s = dir == Direction::Newton ? 1.0 : rule.step;
  for (int k = 0; k < 60; ++k) {
    const Vector cand = project_ball(b + s * d, M);
    const double f = prob.value(cand);
    if (std::isfinite(f) && f <= f0 + rule.c * g.dot(cand - b)) return cand;
    s *= rule.shrink;
  }
  return b;
}

Matrix logit_clip(const Matrix& P, double lo, double hi) {
  return P.unaryExpr([lo, hi](double p) {
    const double c = std::clamp(p, lo, hi);
    return std::log(c / (1.0 - c));
  });
}

Matrix rank_r(const Matrix& T, Index r) {
  Eigen::BDCSVD<Matrix> svd(T, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return svd.matrixU().leftCols(r) * svd.singularValues().head(r).asDiagonal() *
         svd.matrixV().leftCols(r).transpose();
}

}  // namespace

ParamPair spectral_start(const ResponseMatrix& data, Index r) {
  const Index n = data.n();
  const Index q = data.q();
  if (r < 1 || n < r || q < r) throw UsageError("fit: need n, q >= r >= 1");
  Matrix T;
  switch (data.family().kind()) {
    case FamilyKind::Gaussian:
      T = data.values();
      break;
    case FamilyKind::Bernoulli:
      T = logit_clip(rank_r(data.values(), r), 0.01, 0.99);
      break;
    case FamilyKind::Poisson:
      T = rank_r(data.values(), r).unaryExpr([](double m) { return std::log(std::max(m, 0.1)); });
      break;
  }
  Eigen::BDCSVD<Matrix> svd(T, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double sn = std::sqrt(static_cast<double>(n));
  ParamPair p;
  p.Z = sn * svd.matrixU().leftCols(r);
  p.A = svd.matrixV().leftCols(r) * svd.singularValues().head(r).asDiagonal() / sn;
  linalg::orthonormalize_pair(p.Z, p.A);
  return p;
}

FitResult erm_fit(const ResponseMatrix& data, Index r, const FitConfig& config,
                  const std::optional<ParamPair>& warm_start) {
  config.validate();
  const Index n = data.n();
  const Index q = data.q();
  if (r < 1 || n < r || q < r) {
    std::ostringstream os;
    os << "fit: need n, q >= r (got n = " << n << ", q = " << q << ", r = " << r << ")";
    throw UsageError(os.str());
  }

  FitResult res;
  ParamPair p;
  if (warm_start) {
    if (warm_start->Z.rows() != n || warm_start->A.rows() != q || warm_start->Z.cols() != r ||
        warm_start->A.cols() != r) {
      throw UsageError("fit: warm start has the wrong shape");
    }
    p = *warm_start;
    linalg::orthonormalize_pair(p.Z, p.A);
  } else {
    p = spectral_start(data, r);
  }
  const double M =
      config.M > 0.0 ? config.M : 2.0 * std::max(linalg::two_to_inf(p.Z), linalg::two_to_inf(p.A));
  res.M = M;
  res.clipped_rows += linalg::clip_rows(p.Z, M) + linalg::clip_rows(p.A, M);

  const FamilyKind kind = data.family().kind();
  const Matrix& Y = data.values();
  const Matrix Yt = Y.transpose();  // rows of Y as contiguous columns

  double f = data.total_risk(p.theta());
  res.objective.push_back(f);

  for (int it = 1; it <= config.max_iters; ++it) {
    // A block: row j regresses column j of Y on Z.
    {
      RowProblem prob{kind, p.Z, nullptr};
      for (Index j = 0; j < q; ++j) {
        prob.y = Y.col(j).data();
        p.A.row(j) = row_step(prob, p.A.row(j).transpose(), config.direction, config.step_rule, M)
                         .transpose();
      }
    }
    // Z block: row i regresses row i of Y on A.
    {
      RowProblem prob{kind, p.A, nullptr};
      for (Index i = 0; i < n; ++i) {
        prob.y = Yt.col(i).data();
        p.Z.row(i) = row_step(prob, p.Z.row(i).transpose(), config.direction, config.step_rule, M)
                         .transpose();
      }
    }
    linalg::orthonormalize_pair(p.Z, p.A);
    res.clipped_rows += linalg::clip_rows(p.Z, M) + linalg::clip_rows(p.A, M);

    const double f_new = data.total_risk(p.theta());
    if (!std::isfinite(f_new)) throw NumericalError("fit: objective became non-finite");
    res.objective.push_back(f_new);
    res.iterations = it;
    const double change = std::abs(f - f_new);
    f = f_new;
    if (change <= config.tol * std::max(1.0, std::abs(f))) {
      res.status = FitStatus::Converged;
      break;
    }
  }
  if (res.status != FitStatus::Converged) {
    std::ostringstream os;
    os << "fit did not converge within " << config.max_iters << " iterations";
    res.warning = os.str();
  }
  res.params = std::move(p);
  return res;
}

namespace {

constexpr double kOracleGradTol = 1e-10;

// Exact line search along d by bisection on the directional derivative.
double bisect_step(const RowProblem& prob, const Vector& b, const Vector& d) {
  auto slope = [&](double s) {
    Vector g;
    Matrix H;
    prob.derivatives(b + s * d, g, H);
    return g.dot(d);
  };
  double lo = 0.0, hi = 1.0;
  int expand = 0;
  while (slope(hi) < 0.0 && expand++ < 60) hi *= 2.0;
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    if (slope(mid) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

Vector solve_row(const RowProblem& prob, Index r, Index row_id, const char* what) {
  Vector b = Vector::Zero(r);
  Vector g;
  Matrix H;
  auto converged = [&](const Vector& at) {
    prob.derivatives(at, g, H);
    return g.norm() <= kOracleGradTol;
  };

  bool ok = false;
  const StepRule rule = StepRule::backtracking();
  for (int k = 0; k < 100 && !(ok = converged(b)); ++k) {
    const Vector next = row_step(prob, b, Direction::Newton, rule, std::numeric_limits<double>::infinity());
    if (next == b) break;
    b = next;
  }
  if (!ok) {
    for (int k = 0; k < 500 && !(ok = converged(b)); ++k) {
      const Vector d = newton_direction(g, H);
      b += bisect_step(prob, b, d) * d;
    }
  }
  if (!ok) {
    std::ostringstream os;
    os << what << ": row " << row_id + 1 << " did not converge (gradient norm " << g.norm() << ")";
    throw NumericalError(os.str());
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(H, Eigen::EigenvaluesOnly);
  if (!(es.eigenvalues()(0) > 1e-8)) {
    std::ostringstream os;
    os << what << ": row " << row_id + 1
       << " has a degenerate Hessian at the solution (separable or collinear data)";
    throw NumericalError(os.str());
  }
  return b;
}

}  // namespace

Matrix oracle_fit_A(const ResponseMatrix& data, const Matrix& Z_star) {
  if (Z_star.rows() != data.n()) throw UsageError("oracle_fit_A: Z has the wrong number of rows");
  const Index r = Z_star.cols();
  Eigen::JacobiSVD<Matrix> svd(Z_star);
  if (!(svd.singularValues()(r - 1) > 1e-10 * svd.singularValues()(0))) {
    throw NumericalError("oracle_fit_A: Z is not of full column rank");
  }
  Matrix A(data.q(), r);
  RowProblem prob{data.family().kind(), Z_star, nullptr};
  for (Index j = 0; j < data.q(); ++j) {
    prob.y = data.values().col(j).data();
    A.row(j) = solve_row(prob, r, j, "oracle_fit_A").transpose();
  }
  return A;
}

Matrix oracle_fit_Z(const ResponseMatrix& data, const Matrix& A_star) {
  if (A_star.rows() != data.q()) throw UsageError("oracle_fit_Z: A has the wrong number of rows");
  const Index r = A_star.cols();
  Eigen::JacobiSVD<Matrix> svd(A_star);
  if (!(svd.singularValues()(r - 1) > 1e-10 * svd.singularValues()(0))) {
    throw NumericalError("oracle_fit_Z: A is not of full column rank");
  }
  const Matrix Yt = data.values().transpose();
  Matrix Z(data.n(), r);
  RowProblem prob{data.family().kind(), A_star, nullptr};
  for (Index i = 0; i < data.n(); ++i) {
    prob.y = Yt.col(i).data();
    Z.row(i) = solve_row(prob, r, i, "oracle_fit_Z").transpose();
  }
  return Z;
}

}  // namespace folomin
