#include "folomin/inference.hpp"
#include "folomin/sim.hpp"
#include "folomin/vintage.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace folomin;

TEST_SUITE("sim") {

TEST_CASE("simple-row budget and magnitudes") {
  SimDesign d;
  d.q = 100;
  d.r = 5;
  CHECK(d.simple_per_dim() == 2);
  Rng rng(1);
  const Matrix A = gen_A(d, rng);
  for (Index l = 0; l < 5; ++l) {
    for (Index j = 2 * l; j < 2 * l + 2; ++j) {
      CHECK(A(j, l) >= 1.0);
      CHECK(A(j, l) < 2.0);
      CHECK((A.row(j).array() != 0.0).count() == 1);
    }
  }
  for (Index j = 10; j < 100; ++j) {
    for (Index l = 0; l < 5; ++l) {
      const double v = std::abs(A(j, l));
      CHECK((v == 0.0 || (v >= d.lambda_signal && v <= 2.5)));
    }
  }
}

TEST_CASE("zero fraction of the truncated block") {
  SimDesign d;
  d.q = 2000;
  d.r = 3;
  d.lambda_signal = 0.1;
  Rng rng(2);
  const Matrix A = gen_A(d, rng);
  const Matrix rest = A.bottomRows(2000 - 3 * d.simple_per_dim());
  const double zeros = static_cast<double>((rest.array() == 0.0).count()) / static_cast<double>(rest.size());
  // P(|N(0,1)| < 0.1) = 0.0797
  CHECK(std::abs(zeros - 0.0797) <= 0.02);
  CHECK(truncate_signal(-3.0, 0.1, 2.5) == -2.5);
  CHECK(truncate_signal(0.05, 0.1, 2.5) == 0.0);
  CHECK(truncate_signal(0.7, 0.1, 2.5) == 0.7);
}

TEST_CASE("latent scores") {
  SimDesign d;
  d.n = 300;
  d.r = 3;
  Rng rng(3);
  const Matrix Z = gen_Z(d, rng);
  const Matrix S = Z.transpose() * Z / 300.0;
  CHECK((S.diagonal().array() - 1.0).abs().maxCoeff() <= 1e-12);
  d.tau = 0.0;
  const Matrix W = gen_Z(d, rng);
  CHECK((W.transpose() * W / 300.0 - Matrix::Identity(3, 3)).norm() <= 1e-12);
  const Matrix st = sigma_tau(3, 0.5);
  CHECK(st(0, 2) == 0.25);
  CHECK(st(1, 0) == 0.5);
  CHECK(st(2, 2) == 1.0);
}

TEST_CASE("design validation") {
  SimDesign d;
  d.tau = 1.0;
  CHECK_THROWS_AS(d.validate(), UsageError);
  d = SimDesign{};
  d.q = 20;
  d.r = 3;
  d.simple_fraction = 0.1;
  CHECK_THROWS_AS(d.validate(), UsageError);
  SimOptions o;
  o.n_reps = 0;
  CHECK_THROWS_AS(o.validate(), UsageError);
  CHECK(parse_sim_method(to_string(SimMethod::VarimaxDebiased)) == SimMethod::VarimaxDebiased);
  CHECK_THROWS_AS(parse_sim_method("quartimax"), UsageError);
}

TEST_CASE("varimax debiasing") {
  // A perfectly simple truth is its own varimax solution: no offset.
  const Matrix S = 1.4 * test::stacked_identity(3, 5);
  CHECK(varimax_bias(S, Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-6);
  CHECK((infeasible_debias_varimax(S, S) - S).cwiseAbs().maxCoeff() <= 1e-6);

  // Debiasing the varimax rotation of the truth returns the truth.
  SimDesign d;
  d.q = 150;
  Rng rng(4);
  const Matrix A = gen_A(d, rng);
  for (bool kaiser : {false, true}) {
    VintageConfig c;
    c.kaiser = kaiser;
    const Matrix vm = align(varimax_rotate(A, c).A_rot, A).aligned;
    CHECK((infeasible_debias_varimax(A, vm, Matrix::Identity(3, 3), kaiser) - A).norm() <= 1e-8);
  }
}

TEST_CASE("running statistics and quantiles") {
  Rng rng(5);
  std::vector<double> xs(1000);
  RunningStats rs;
  for (double& x : xs) {
    x = 1e3 + rng.normal();
    rs.push(x);
  }
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= 1000.0;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  CHECK(std::abs(rs.mean() - mean) <= 1e-10);
  CHECK(std::abs(rs.variance() - ss / 999.0) <= 1e-10);
  CHECK(RunningStats{}.variance() == 0.0);
  CHECK(quantile({3.0, 1.0, 2.0, 4.0}, 0.5) == 2.5);
  CHECK(quantile({3.0, 1.0, 2.0, 4.0}, 0.0) == 1.0);
  CHECK(quantile({3.0, 1.0, 2.0, 4.0}, 1.0) == 4.0);
  CHECK(std::isnan(quantile({}, 0.5)));
}

TEST_CASE("replications are deterministic and complete") {
  SimDesign d;
  d.n = 120;
  d.q = 90;
  d.r = 2;
  SimOptions o;
  o.n_reps = 2;
  o.keep_rows = 3;
  const SimResult a = run_replications(d, o);
  const SimResult b = run_replications(d, o);
  std::ostringstream sa, sb;
  write_replications_csv(a, sa);
  write_replications_csv(b, sb);
  CHECK(sa.str() == sb.str());
  CHECK(a.methods.size() == all_sim_methods().size());
  for (const MethodSummary& m : a.methods) {
    INFO(to_string(m.method));
    CHECK(m.successes + m.failures == 2);
    CHECK(m.A.coverage.rows() == 90);
    CHECK(m.kept_errors.size() == 2);
  }
  const MethodSummary* oracle = a.find(SimMethod::Oracle);
  REQUIRE(oracle != nullptr);
  CHECK(oracle->successes == 2);
  CHECK(summary_json(a, 1.0).find("\"oracle\"") != std::string::npos);
  CHECK(sa.str().rfind("method,matrix,rep,row,col,metric,value", 0) == 0);
}

}  // TEST_SUITE
