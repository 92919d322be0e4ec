#include "folomin/criteria.hpp"
#include "folomin/linalg.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace folomin;

namespace {

std::vector<FoldedLoss> all_losses(double gamma) {
  return {FoldedLoss::scad(gamma), FoldedLoss::mcp(gamma), FoldedLoss::truncated_l1(gamma)};
}

}  // namespace

TEST_SUITE("criteria") {

TEST_CASE("MCP hand values") {
  const FoldedLoss f = FoldedLoss::mcp(0.2, 3.0);
  CHECK(f.eval(0.0) == 0.0);
  CHECK(f.eval(0.1) == doctest::Approx(0.2 * 0.1 - 0.01 / 6.0).epsilon(1e-14));
  CHECK(f.eval(1.0) == doctest::Approx(0.06).epsilon(1e-14));
  CHECK(f.d1(0.7) == 0.0);
  CHECK(f.d1_at_zero_plus() == 0.2);
}

TEST_CASE("SCAD and TL1 hand values") {
  const FoldedLoss s = FoldedLoss::scad(0.2, 3.7);
  CHECK(s.eval(0.1) == doctest::Approx(0.02));
  // Plateau (a + 1) gamma^2 / 2.
  CHECK(s.eval(5.0) == doctest::Approx(4.7 * 0.04 / 2.0));
  CHECK(s.d1(0.5) == doctest::Approx((0.74 - 0.5) / 2.7));
  const FoldedLoss t = FoldedLoss::truncated_l1(0.2);
  CHECK(t.eval(0.1) == doctest::Approx(0.02));
  CHECK(t.eval(-3.0) == doctest::Approx(0.04));
  CHECK(t.a3() == 1.0);
}

TEST_CASE("loss constructors reject bad parameters") {
  CHECK_THROWS_AS(FoldedLoss::mcp(0.0), UsageError);
  CHECK_THROWS_AS(FoldedLoss::mcp(0.1, 1.0), UsageError);
  CHECK_THROWS_AS(FoldedLoss::scad(0.1, 2.0), UsageError);
  CHECK_THROWS_AS(FoldedLoss::truncated_l1(-1.0), UsageError);
  CHECK_THROWS_AS(FoldedLoss::parse("lasso", 0.1), UsageError);
  CHECK(FoldedLoss::parse("SCAD", 0.1).kind() == LossKind::SCAD);
}

TEST_CASE("folded-loss properties on a grid") {
  for (double gamma : {0.05, 0.2, 1.0}) {
    for (const FoldedLoss& f : all_losses(gamma)) {
      INFO(f.name(), " gamma=", gamma);
      const double top = 2.0 * f.a3() * gamma + 1.0;
      double prev = 0.0;
      for (int k = 0; k <= 2000; ++k) {
        const double t = top * k / 2000.0;
        CHECK(f.eval(t) == f.eval(-t));
        CHECK(f.eval(t) >= prev - 1e-15);
        prev = f.eval(t);
        if (t >= f.a3() * gamma) CHECK(f.d1(t) == 0.0);
      }
      // Concavity via random triples on (0, top).
      Rng rng(3);
      for (int k = 0; k < 500; ++k) {
        const double a = rng.uniform(1e-6, top), b = rng.uniform(1e-6, top), w = rng.uniform();
        CHECK(f.eval(w * a + (1 - w) * b) >= w * f.eval(a) + (1 - w) * f.eval(b) - 1e-14);
      }
      const double slope = f.eval(1e-9 * gamma) / (1e-9 * gamma);
      CHECK(std::abs(slope - gamma) <= 1e-7 * gamma);
      CHECK(f.d1_at_zero_plus() == gamma);
    }
  }
}

TEST_CASE("derivative agrees with finite differences away from kinks") {
  for (const FoldedLoss& f : all_losses(0.3)) {
    for (double t = 0.013; t < 2.0; t += 0.037) {
      const double kink1 = f.gamma(), kink2 = f.a3() * f.gamma();
      if (std::abs(t - kink1) < 1e-3 || std::abs(t - kink2) < 1e-3) continue;
      const double fd = test::central_diff([&](double x) { return f.eval(x); }, t, 1e-7);
      INFO(f.name(), " t=", t);
      CHECK(f.d1(t) == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("folomin criterion") {
  const FoldedLoss f = FoldedLoss::mcp(0.2, 3.0);
  CHECK(criterion_folomin(Matrix::Zero(3, 2), f) == 0.0);
  CHECK(criterion_folomin(Matrix::Identity(2, 2), f) == doctest::Approx(0.12));
  CHECK(criterion_folomin(10.0 * Matrix::Identity(2, 2), f) == doctest::Approx(0.12));
}

TEST_CASE("varimax criterion") {
  CHECK(criterion_varimax(Matrix::Constant(5, 3, 0.7)) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(criterion_varimax(Matrix::Identity(2, 2)) == doctest::Approx(0.5));
  Matrix A(3, 2);
  A << 1, 0, 0, 0, 0.5, 0;
  // Column 2 is zero and contributes nothing.
  const double col1 = (1.0 + 0.0625 - 3.0 * std::pow(1.25 / 3.0, 2)) / 3.0;
  CHECK(criterion_varimax(A) == doctest::Approx(col1));
}

TEST_CASE("varimax gradient matches finite differences") {
  Rng rng(9);
  Matrix A(7, 3);
  for (Index i = 0; i < A.size(); ++i) A.data()[i] = rng.normal();
  const Matrix G = criterion_varimax_gradient(A);
  for (Index i = 0; i < A.rows(); ++i) {
    for (Index j = 0; j < A.cols(); ++j) {
      auto f = [&](double x) {
        Matrix B = A;
        B(i, j) = x;
        return criterion_varimax(B);
      };
      CHECK(G(i, j) == doctest::Approx(test::central_diff(f, A(i, j), 1e-6)).epsilon(1e-6));
    }
  }
}

TEST_CASE("feasible projection") {
  const FeasibleSet s = FeasibleSet::around_identity(0.5, Matrix::Identity(2, 2));
  CHECK(feasible_project(s, Matrix::Identity(2, 2)).isApprox(Matrix::Identity(2, 2)));
  CHECK(feasible_project(s, 2.0 * Matrix::Identity(2, 2)).isApprox(Matrix::Identity(2, 2)));
  Matrix G(2, 2);
  G << 1, 1, 0, 1;
  Matrix expect(2, 2);
  expect << 1 / std::sqrt(2.0), 1 / std::sqrt(2.0), 0, 1;
  CHECK((feasible_project(s, G) - expect).norm() < 1e-15);

  Matrix singular = Matrix::Identity(2, 2);
  singular.row(1).setZero();
  CHECK_THROWS_AS(feasible_project(s, singular), NumericalError);

  const FeasibleSet o = FeasibleSet::around_identity(0.5, Matrix::Identity(3, 3), RotationMode::Orthogonal);
  Matrix M = Matrix::Identity(3, 3);
  M(0, 1) = 0.2;
  const Matrix P = feasible_project(o, M);
  CHECK((P.transpose() * P - Matrix::Identity(3, 3)).norm() < 1e-14);
}

TEST_CASE("feasible sampling respects the constraint and the radius") {
  Matrix gram(3, 3);
  gram << 1, 0.5, 0.25, 0.5, 1, 0.5, 0.25, 0.5, 1;
  Rng rng(77);
  CHECK(sample_feasible(FeasibleSet::around_identity(0.0, gram), rng) == Matrix::Identity(3, 3));
  const double c = 0.1;
  const FeasibleSet s = FeasibleSet::around_identity(c, gram);
  double worst = 0.0;
  for (int k = 0; k < 10000; ++k) {
    const Matrix G = sample_feasible(s, rng);
    const Matrix D = G * gram * G.transpose();
    CHECK((D.diagonal().array() - 1.0).abs().maxCoeff() <= 1e-12);
    worst = std::max(worst, linalg::operator_norm(G - Matrix::Identity(3, 3)));
  }
  CHECK(worst <= 2 * c);
}

TEST_CASE("rotation mode names round-trip") {
  CHECK(parse_rotation_mode(to_string(RotationMode::Oblique)) == RotationMode::Oblique);
  CHECK(parse_rotation_mode(to_string(RotationMode::Orthogonal)) == RotationMode::Orthogonal);
  CHECK_THROWS_AS(parse_rotation_mode("sideways"), UsageError);
}

}  // TEST_SUITE
