#include "folomin/inference.hpp"
#include "folomin/sim.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace folomin;

namespace {

/// Phi(x) by its Taylor series, an oracle independent of std::erfc.
double normal_cdf_series(double x) {
  double term = x, sum = x;
  for (int k = 1; k < 200; ++k) {
    term *= -x * x / (2.0 * k);
    sum += term / (2.0 * k + 1.0);
  }
  return 0.5 + sum / std::sqrt(2.0 * M_PI);
}

/// Signed permutation minimizing the Frobenius distance, by enumeration.
double brute_force_residual(const Matrix& est, const Matrix& truth) {
  const Index r = truth.cols();
  std::vector<Index> perm(static_cast<std::size_t>(r));
  std::iota(perm.begin(), perm.end(), 0);
  double best = INFINITY;
  do {
    for (int mask = 0; mask < (1 << r); ++mask) {
      Matrix M(truth.rows(), r);
      for (Index l = 0; l < r; ++l) {
        const double s = (mask >> l) & 1 ? -1.0 : 1.0;
        M.col(l) = s * est.col(perm[static_cast<std::size_t>(l)]);
      }
      best = std::min(best, (M - truth).norm());
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace

TEST_SUITE("inference") {

TEST_CASE("Gaussian sandwich matches the closed form") {
  SimDesign d;
  d.n = 2000;
  d.q = 60;
  d.r = 2;
  d.tau = 0.0;
  Rng rng(1);
  const Matrix A = gen_A(d, rng), Z = gen_Z(d, rng);
  const double sigma2 = 0.7;
  const ResponseMatrix Y = sample_responses(ResponseFamily::gaussian(sigma2), Z * A.transpose(), rng);
  const ParamPair truth{Z, A};
  // bread = 2 S_Z = 2 I and meat ~ 4 sigma^2 I, so every row targets sigma^2 I.
  // One row carries about 7% sampling noise at this n; the average over
  // items isolates the systematic part.
  const Matrix target = sigma2 * Matrix::Identity(2, 2);
  Matrix pooled = Matrix::Zero(2, 2);
  for (const RowCovariance& c : plugin_covariances_A(Y, truth)) {
    CHECK((c.bread - 2.0 * Matrix::Identity(2, 2)).norm() <= 1e-10);
    CHECK((c.sandwich - target).norm() / target.norm() <= 0.3);
    CHECK(c.scale == 2000.0);
    pooled += c.sandwich / 60.0;
  }
  CHECK((pooled - target).norm() / target.norm() <= 0.05);
}

TEST_CASE("scalar mean interval") {
  const Index n = 400;
  Matrix y(n, 1);
  for (Index i = 0; i < n; ++i) y(i, 0) = i % 2 == 0 ? 1.0 : -1.0;
  const ResponseMatrix Y(y, ResponseFamily::gaussian());
  const ParamPair p{Matrix::Ones(n, 1), Matrix::Zero(1, 1)};
  const std::vector<RowCovariance> rows = plugin_covariances_A(Y, p);
  CHECK(rows[0].sandwich(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
  const WaldTable w = wald_intervals(p.A, rows, 0.95);
  const double half = normal_quantile(0.975) / std::sqrt(static_cast<double>(n));
  CHECK(w.upper(0, 0) == doctest::Approx(half).epsilon(1e-12));
  CHECK(w.lower(0, 0) == doctest::Approx(-half).epsilon(1e-12));
  CHECK(w.p(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("sandwich pieces are symmetric positive semidefinite") {
  SimDesign d;
  d.n = 200;
  d.q = 40;
  d.r = 3;
  Rng rng(2);
  const Matrix A = gen_A(d, rng), Z = gen_Z(d, rng);
  const ResponseMatrix Y = sample_responses(ResponseFamily::bernoulli(), Z * A.transpose(), rng);
  const ParamPair p{Z, A};
  for (const RowCovariance& c : plugin_covariances_A(Y, p)) {
    CHECK((c.sandwich - c.sandwich.transpose()).norm() <= 1e-12 * c.sandwich.norm());
    CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(c.meat).eigenvalues().minCoeff() >= -1e-12);
    CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(c.sandwich).eigenvalues().minCoeff() > 0.0);
  }
  const RowCovariance cz = plugin_covariance_Z(Y, p, 3);
  CHECK(cz.scale == 40.0);
  CHECK_THROWS_AS(plugin_covariance_A(Y, p, 40), UsageError);
}

TEST_CASE("normal quantile and cdf") {
  CHECK(std::abs(normal_quantile(0.975) - 1.959964) <= 1e-5);
  for (double p : {1e-10, 0.001, 0.2, 0.5, 0.8, 0.999}) {
    CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-12));
  }
  for (double x = -4.0; x <= 4.0; x += 0.25) CHECK(std::abs(normal_cdf(x) - normal_cdf_series(x)) <= 1e-7);
  CHECK(two_sided_p(0.0) == 1.0);
  CHECK(two_sided_p(-1.959963984540054) == doctest::Approx(0.05).epsilon(1e-12));
  CHECK_THROWS_AS(normal_quantile(1.5), UsageError);
}

TEST_CASE("Benjamini-Hochberg hand examples") {
  const BhResult all = bh_adjust({0.005, 0.01, 0.03, 0.04}, 0.05);
  CHECK(std::all_of(all.rejected.begin(), all.rejected.end(), [](bool b) { return b; }));
  const std::vector<double> expect = {0.02, 0.02, 0.04, 0.04};
  for (std::size_t k = 0; k < 4; ++k) CHECK(all.adjusted[k] == doctest::Approx(expect[k]).epsilon(1e-14));

  const BhResult none = bh_adjust({1.0, 1.0, 1.0}, 0.05);
  CHECK(std::none_of(none.rejected.begin(), none.rejected.end(), [](bool b) { return b; }));
  CHECK(none.adjusted == std::vector<double>{1.0, 1.0, 1.0});

  const BhResult one = bh_adjust({0.04}, 0.05);
  CHECK(one.rejected[0]);
  CHECK(one.adjusted[0] == 0.04);

  // Order of the input does not matter.
  const BhResult shuffled = bh_adjust({0.03, 0.005, 0.04, 0.01}, 0.05);
  CHECK(shuffled.adjusted[1] == doctest::Approx(0.02));
  CHECK(shuffled.adjusted[2] == doctest::Approx(0.04));
  CHECK_THROWS_AS(bh_adjust({0.5, 1.2}, 0.05), UsageError);
}

TEST_CASE("BH rejection set is the step-up set") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> p(30);
    for (double& v : p) v = std::pow(rng.uniform(), 3.0);
    const BhResult res = bh_adjust(p, 0.1);
    std::vector<double> sorted = p;
    std::sort(sorted.begin(), sorted.end());
    std::size_t k_star = 0;
    for (std::size_t k = 1; k <= sorted.size(); ++k) {
      if (sorted[k - 1] <= 0.1 * static_cast<double>(k) / 30.0) k_star = k;
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
      const bool expect = k_star > 0 && p[i] <= sorted[k_star - 1];
      CHECK(res.rejected[i] == expect);
      CHECK(res.adjusted[i] >= p[i]);
    }
  }
}

TEST_CASE("Bonferroni") {
  const std::vector<double> b = bonferroni({0.001, 0.2, 0.5});
  CHECK(b[0] == doctest::Approx(0.003));
  CHECK(b[1] == doctest::Approx(0.6));
  CHECK(b[2] == 1.0);
}

TEST_CASE("alignment on a swapped and negated estimate") {
  Matrix truth(3, 2);
  truth << 1, 0, 0, 2, 0.5, 0.5;
  Matrix est(3, 2);
  est.col(0) = -truth.col(1);
  est.col(1) = truth.col(0);
  const Alignment al = align(est, truth);
  CHECK(al.perm == std::vector<Index>{1, 0});
  CHECK(al.signs == std::vector<int>{1, -1});
  CHECK((al.aligned - truth).norm() == 0.0);
  CHECK(apply_alignment(est, al) == al.aligned);
  CHECK(apply_permutation(est, al.perm).col(0) == est.col(1));
  CHECK_THROWS_AS(align(est, Matrix::Zero(2, 2)), UsageError);
}

TEST_CASE("alignment agrees with enumeration") {
  Rng rng(4);
  for (Index r : {2, 3, 4}) {
    for (int trial = 0; trial < 10; ++trial) {
      Matrix truth(12, r), est(12, r);
      for (Index i = 0; i < truth.size(); ++i) truth.data()[i] = rng.normal();
      for (Index i = 0; i < est.size(); ++i) est.data()[i] = rng.normal();
      const Alignment al = align(est, truth);
      CHECK(al.residual == doctest::Approx(brute_force_residual(est, truth)).epsilon(1e-12));
    }
  }
}

TEST_CASE("large r alignment recovers a planted signed permutation") {
  Rng rng(5);
  const Index r = 10;
  Matrix truth(40, r);
  for (Index i = 0; i < truth.size(); ++i) truth.data()[i] = rng.normal();
  std::vector<Index> perm(r);
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  std::swap(perm[2], perm[7]);
  Matrix est(40, r);
  for (Index l = 0; l < r; ++l) est.col(perm[static_cast<std::size_t>(l)]) = (l % 3 == 0 ? -1.0 : 1.0) * truth.col(l);
  est += 0.01 * Matrix::Ones(40, r);
  const Alignment al = align(est, truth);
  CHECK((al.aligned - truth).cwiseAbs().maxCoeff() <= 0.0100001);
}

TEST_CASE("degenerate variance is rejected") {
  const Matrix est = Matrix::Ones(2, 2);
  Matrix se = Matrix::Constant(2, 2, 0.1);
  se(1, 0) = 0.0;
  CHECK_THROWS_AS(wald_from_se(est, se, 0.95), NumericalError);
  CHECK_THROWS_AS(wald_from_se(est, Matrix::Ones(2, 2), 1.0), UsageError);
}

TEST_CASE("inference report") {
  SimDesign d;
  d.n = 300;
  d.q = 30;
  d.r = 2;
  Rng rng(6);
  const Matrix A = gen_A(d, rng), Z = gen_Z(d, rng);
  const ResponseMatrix Y = sample_responses(ResponseFamily::bernoulli(), Z * A.transpose(), rng);
  const InferenceReport rep = build_inference_report(Y, ParamPair{Z, A}, 0.9, 0.05, true);
  CHECK(rep.wald_A.estimate == A);
  CHECK(rep.wald_Z.estimate.rows() == 300);
  CHECK(rep.p_bh.rows() == 30);
  for (Index l = 0; l < 2; ++l) {
    for (Index j = 0; j < 30; ++j) {
      CHECK(rep.p_bonferroni(j, l) == doctest::Approx(std::min(1.0, 30.0 * rep.wald_A.p(j, l))));
      CHECK(rep.p_bh(j, l) >= rep.wald_A.p(j, l));
    }
  }
  const InferenceReport noz = build_inference_report(Y, ParamPair{Z, A}, 0.9, 0.05, false, false);
  CHECK(noz.cov_Z.empty());
  CHECK(noz.p_bonferroni(0, 0) == doctest::Approx(std::min(1.0, 60.0 * noz.wald_A.p(0, 0))));
}

}  // TEST_SUITE
