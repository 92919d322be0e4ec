#include "folomin/vintage.hpp"

#include "folomin/criteria.hpp"
#include "folomin/linalg.hpp"
#include "folomin/parallel.hpp"
#include "folomin/rng.hpp"

#include <cmath>
#include <vector>

namespace folomin {

void VintageConfig::validate() const {
  if (power < 2) throw UsageError("promax power must be >= 2");
  if (max_iters < 1) throw UsageError("vintage: max_iters must be positive");
  if (!(tol > 0.0)) throw UsageError("vintage: tol must be positive");
  if (restarts < 0) throw UsageError("vintage: restarts must be nonnegative");
}

Matrix random_orthogonal(Index r, Rng& rng) {
  Matrix X(r, r);
  for (Index i = 0; i < r; ++i) {
    for (Index j = 0; j < r; ++j) X(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Matrix> qr(X);
  Matrix Q = qr.householderQ() * Matrix::Identity(r, r);
  const Matrix R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < r; ++j) {
    if (R(j, j) < 0.0) Q.col(j) *= -1.0;
  }
  return Q;
}

namespace {

struct Ascent {
  Matrix G;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Gradient projection ascent on the orthogonal group with a polar retraction
// and an adaptive step.
Ascent varimax_ascent(const Matrix& A, Matrix G, int max_iters, double tol) {
  Ascent out;
  double f = criterion_varimax(A * G);
  double alpha = 1.0;
  for (int it = 0; it < max_iters; ++it) {
    const Matrix grad = A.transpose() * criterion_varimax_gradient(A * G);
    const Matrix M = G.transpose() * grad;
    const Matrix proj = grad - G * (0.5 * (M + M.transpose()));
    const double pnorm = proj.norm();
    out.iterations = it;
    if (pnorm < tol) {
      out.converged = true;
      break;
    }
    alpha *= 2.0;
    bool improved = false;
    for (int k = 0; k < 60; ++k) {
      const Matrix cand = linalg::polar_factor(G + alpha * proj);
      const double fc = criterion_varimax(A * cand);
      if (fc >= f + 1e-4 * alpha * pnorm * pnorm || (k > 40 && fc >= f)) {
        G = cand;
        f = fc;
        improved = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!improved) {
      // No ascent possible at machine precision: stationary for practical purposes.
      out.converged = pnorm < std::sqrt(tol);
      break;
    }
  }
  // Re-orthogonalize exactly.
  out.G = linalg::polar_factor(G);
  out.value = criterion_varimax(A * out.G);
  return out;
}

Vector kaiser_weights(const Matrix& A) {
  Vector h = A.rowwise().norm();
  for (Index j = 0; j < h.size(); ++j) {
    if (h(j) == 0.0) h(j) = 1.0;
  }
  return h;
}

void orient_columns(Matrix& G, const Matrix& A) {
  const Matrix AR = A * G;
  for (Index l = 0; l < G.cols(); ++l) {
    if (AR.col(l).sum() < 0.0) G.col(l) *= -1.0;
  }
}

}  // namespace

VintageResult varimax_rotate(const Matrix& A, const VintageConfig& config) {
  config.validate();
  const Index r = A.cols();
  if (r < 1 || A.rows() < r) throw UsageError("varimax_rotate: need q >= r >= 1");
  if (linalg::condition_number(A) > 1e12) {
    throw NumericalError("varimax_rotate: A is not of full column rank");
  }

  const Vector h = config.kaiser ? kaiser_weights(A) : Vector::Ones(A.rows());
  const Matrix An = h.cwiseInverse().asDiagonal() * A;

  const std::size_t starts = static_cast<std::size_t>(config.restarts) + 1;
  std::vector<Ascent> runs(starts);
  const Rng master(config.seed);
  parallel_for(starts, [&](std::size_t s) {
    Matrix G0 = Matrix::Identity(r, r);
    if (s > 0) {
      Rng rng = master.split(s);
      G0 = random_orthogonal(r, rng);
    }
    runs[s] = varimax_ascent(An, G0, config.max_iters, config.tol);
  });

  // Identity start wins ties so fixed points are returned unchanged.
  std::size_t best = 0;
  for (std::size_t s = 1; s < starts; ++s) {
    if (runs[s].value > runs[best].value + 1e-12 * std::max(1.0, std::abs(runs[best].value))) {
      best = s;
    }
  }

  VintageResult out;
  out.G = runs[best].G;
  orient_columns(out.G, A);
  out.A_rot = A * out.G;
  out.factor_correlation = Matrix::Identity(r, r);
  out.criterion = criterion_varimax(An * out.G);
  out.iterations = runs[best].iterations;
  out.converged = runs[best].converged;
  if (!out.converged) {
    out.warning = "varimax did not converge within " + std::to_string(config.max_iters) +
                  " iterations";
  }
  return out;
}

VintageResult promax_rotate(const Matrix& A, int power, const VintageConfig& config) {
  VintageConfig vc = config;
  vc.power = power;
  vc.validate();

  const Vector h = vc.promax_kaiser ? kaiser_weights(A) : Vector::Ones(A.rows());
  const Matrix An = h.cwiseInverse().asDiagonal() * A;
  vc.kaiser = false;
  const VintageResult vm = varimax_rotate(An, vc);
  const Matrix& L = vm.A_rot;

  const Matrix P = (L.array() * L.array().abs().pow(power - 1)).matrix();
  const Matrix LtL = L.transpose() * L;
  if (linalg::condition_number(LtL) > 1e12) {
    throw NumericalError("promax: degenerate target (singular normal matrix)");
  }
  Matrix U = LtL.ldlt().solve(L.transpose() * P);
  const Matrix UtU = U.transpose() * U;
  if (linalg::condition_number(UtU) > 1e12) {
    throw NumericalError("promax: degenerate target (singular transformation)");
  }
  const Vector d = UtU.inverse().diagonal();
  if (d.minCoeff() <= 0.0) throw NumericalError("promax: degenerate target");
  U = U * d.cwiseSqrt().asDiagonal();

  VintageResult out;
  out.G = vm.G * U;
  out.A_rot = A * out.G;
  out.factor_correlation = linalg::symmetrize((U.transpose() * U).inverse());
  out.factor_correlation.diagonal().setOnes();
  out.criterion = vm.criterion;
  out.iterations = vm.iterations;
  out.converged = vm.converged;
  out.warning = vm.warning;
  return out;
}

VintageResult vintage_rotate(const Matrix& A, const VintageConfig& config) {
  return config.method == VintageMethod::Varimax ? varimax_rotate(A, config)
                                                 : promax_rotate(A, config.power, config);
}

}  // namespace folomin
