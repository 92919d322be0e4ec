#include "folomin/erm.hpp"
#include "folomin/linalg.hpp"
#include "folomin/sim.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace folomin;

namespace {

Matrix gaussian_matrix(Index rows, Index cols, Rng& rng) {
  Matrix M(rows, cols);
  for (Index i = 0; i < M.size(); ++i) M.data()[i] = rng.normal();
  return M;
}

Matrix truncated_svd(const Matrix& Y, Index r) {
  Eigen::JacobiSVD<Matrix> svd(Y, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return svd.matrixU().leftCols(r) * svd.singularValues().head(r).asDiagonal() *
         svd.matrixV().leftCols(r).transpose();
}

void check_constraints(const FitResult& f) {
  const Matrix& Z = f.params.Z;
  const Matrix& A = f.params.A;
  const double n = static_cast<double>(Z.rows()), q = static_cast<double>(A.rows());
  CHECK((Z.transpose() * Z / n - Matrix::Identity(Z.cols(), Z.cols())).norm() <= 1e-8);
  Matrix off = A.transpose() * A / q;
  off.diagonal().setZero();
  CHECK(off.cwiseAbs().maxCoeff() <= 1e-8);
  CHECK(linalg::two_to_inf(Z) <= f.M + 1e-12);
  CHECK(linalg::two_to_inf(A) <= f.M + 1e-12);
}

}  // namespace

TEST_SUITE("erm") {

TEST_CASE("noiseless Gaussian data is reproduced exactly") {
  Rng rng(1);
  const Matrix Z = gaussian_matrix(60, 3, rng), A = gaussian_matrix(40, 3, rng);
  const Matrix Y = Z * A.transpose();
  const FitResult f = erm_fit(ResponseMatrix(Y, ResponseFamily::gaussian()), 3);
  const Matrix P = f.params.theta();
  CHECK((P - Y).norm() / Y.norm() <= 1e-6);
  check_constraints(f);
}

TEST_CASE("rank one Gaussian fit is the dominant singular triplet") {
  Rng rng(2);
  const Matrix Y = gaussian_matrix(30, 20, rng);
  const FitResult f = erm_fit(ResponseMatrix(Y, ResponseFamily::gaussian()), 1);
  CHECK((f.params.theta() - truncated_svd(Y, 1)).norm() / Y.norm() <= 1e-6);
}

TEST_CASE("noisy Gaussian fit matches the truncated SVD and satisfies the constraints") {
  Rng rng(3);
  const Matrix Z = gaussian_matrix(80, 3, rng), A = gaussian_matrix(50, 3, rng);
  const Matrix Y = Z * A.transpose() + 0.5 * gaussian_matrix(80, 50, rng);
  const FitResult f = erm_fit(ResponseMatrix(Y, ResponseFamily::gaussian()), 3);
  CHECK(f.status == FitStatus::Converged);
  CHECK(f.clipped_rows == 0);
  CHECK((f.params.theta() - truncated_svd(Y, 3)).norm() / truncated_svd(Y, 3).norm() <= 1e-6);
  check_constraints(f);
  for (std::size_t k = 1; k < f.objective.size(); ++k) CHECK(f.objective[k] <= f.objective[k - 1] + 1e-9);
}

TEST_CASE("Bernoulli fit recovers the natural parameters") {
  SimDesign d;
  d.n = d.q = 200;
  d.r = 2;
  d.tau = 0.0;
  Rng rng(4);
  const Matrix A = gen_A(d, rng), Z = gen_Z(d, rng);
  const Matrix theta = Z * A.transpose();
  const ResponseMatrix Y = sample_responses(ResponseFamily::bernoulli(), theta, rng);
  FitConfig c;
  c.M = 1.5 * std::max(linalg::two_to_inf(Z), linalg::two_to_inf(A));
  const FitResult f = erm_fit(Y, 2, c);
  // The truth is feasible, so the minimizer cannot have larger empirical risk.
  CHECK(Y.total_risk(f.params.theta()) <= Y.total_risk(theta));
  CHECK((f.params.theta() - theta).norm() / theta.norm() <= 0.5);
  check_constraints(f);
  for (std::size_t k = 1; k < f.objective.size(); ++k) CHECK(f.objective[k] <= f.objective[k - 1] + 1e-9);
}

TEST_CASE("row cap binds when requested") {
  Rng rng(5);
  const Matrix Y = 3.0 * gaussian_matrix(40, 30, rng);
  FitConfig c;
  c.M = 1.5;
  c.max_iters = 50;
  const FitResult f = erm_fit(ResponseMatrix(Y, ResponseFamily::gaussian()), 2, c);
  CHECK(linalg::two_to_inf(f.params.A) <= 1.5 + 1e-12);
  CHECK(linalg::two_to_inf(f.params.Z) <= 1.5 + 1e-12);
}

TEST_CASE("fit argument checks") {
  const ResponseMatrix Y(Matrix::Ones(2, 2), ResponseFamily::gaussian());
  CHECK_THROWS_AS(erm_fit(Y, 3), UsageError);
  FitConfig c;
  c.tol = 0.0;
  CHECK_THROWS_AS(erm_fit(Y, 1, c), UsageError);
}

TEST_CASE("Gaussian oracle is least squares") {
  Rng rng(6);
  const Matrix Z = gaussian_matrix(25, 2, rng);
  const Matrix Y = gaussian_matrix(25, 4, rng);
  const Matrix A = oracle_fit_A(ResponseMatrix(Y, ResponseFamily::gaussian()), Z);
  const Matrix ls = (Z.transpose() * Z).ldlt().solve(Z.transpose() * Y).transpose();
  CHECK((A - ls).norm() <= 1e-10);
  const Matrix Zo = oracle_fit_Z(ResponseMatrix(Y, ResponseFamily::gaussian()), A);
  const Matrix ls_z = (A.transpose() * A).ldlt().solve(A.transpose() * Y.transpose()).transpose();
  CHECK((Zo - ls_z).norm() / ls_z.norm() <= 1e-9);
}

TEST_CASE("Bernoulli oracle: symmetric data gives zero, separable data fails") {
  Matrix z(4, 1);
  z << 1, 1, -1, -1;
  Matrix y(4, 1);
  y << 1, 0, 0, 1;
  const Matrix a = oracle_fit_A(ResponseMatrix(y, ResponseFamily::bernoulli()), z);
  CHECK(std::abs(a(0, 0)) <= 1e-12);
  Matrix sep(4, 1);
  sep << 1, 1, 0, 0;
  CHECK_THROWS_AS(oracle_fit_A(ResponseMatrix(sep, ResponseFamily::bernoulli()), z), NumericalError);
}

TEST_CASE("Poisson oracle stationarity") {
  Matrix z(2, 1);
  z << 1, 1;
  Matrix y(2, 1);
  y << 2, 4;
  const Matrix a = oracle_fit_A(ResponseMatrix(y, ResponseFamily::poisson()), z);
  CHECK(a(0, 0) == doctest::Approx(std::log(3.0)).epsilon(1e-12));
}

TEST_CASE("oracle row gradients vanish") {
  Rng rng(8);
  SimDesign d;
  d.n = 150;
  d.q = 30;
  d.r = 2;
  const Matrix A = gen_A(d, rng), Z = gen_Z(d, rng);
  const ResponseMatrix Y = sample_responses(ResponseFamily::bernoulli(), Z * A.transpose(), rng);
  const Matrix Ah = oracle_fit_A(Y, Z);
  const Matrix theta = Z * Ah.transpose();
  for (Index j = 0; j < Ah.rows(); ++j) {
    Vector g = Vector::Zero(2);
    for (Index i = 0; i < Z.rows(); ++i) g += detail::risk_d1(FamilyKind::Bernoulli, theta(i, j), Y(i, j)) * Z.row(i).transpose();
    CHECK(g.norm() / static_cast<double>(Z.rows()) <= 1e-10);
  }
}

TEST_CASE("spectral start satisfies the constraints") {
  Rng rng(10);
  const Matrix Y = gaussian_matrix(30, 12, rng);
  const ParamPair p = spectral_start(ResponseMatrix(Y, ResponseFamily::gaussian()), 3);
  CHECK((p.Z.transpose() * p.Z / 30.0 - Matrix::Identity(3, 3)).norm() <= 1e-10);
  Matrix off = p.A.transpose() * p.A;
  off.diagonal().setZero();
  CHECK(off.cwiseAbs().maxCoeff() <= 1e-10);
}

}  // TEST_SUITE
