#include "folomin/model.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace folomin;

TEST_SUITE("model") {

TEST_CASE("risk values at hand-computed points") {
  CHECK(risk(ResponseFamily::gaussian(), 0.0, 0.0) == 0.0);
  CHECK(risk(ResponseFamily::bernoulli(), 0.0, 1.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(risk(ResponseFamily::poisson(), 0.0, 2.0) == doctest::Approx(1.0));
}

TEST_CASE("derivatives at hand-computed points") {
  const auto g = ResponseFamily::gaussian();
  CHECK(risk_d1(g, 1.0, 0.0) == 2.0);
  CHECK(risk_d2(g, 1.0, 0.0) == 2.0);
  CHECK(risk_d3(g, 1.0, 0.0) == 0.0);

  const auto b = ResponseFamily::bernoulli();
  CHECK(risk_d1(b, 0.0, 0.0) == doctest::Approx(0.5));
  CHECK(risk_d2(b, 0.0, 0.0) == doctest::Approx(0.25));
  CHECK(std::abs(risk_d3(b, 0.0, 0.0)) < 1e-15);

  const auto p = ResponseFamily::poisson();
  CHECK(risk_d1(p, 0.0, 3.0) == doctest::Approx(-2.0));
  CHECK(risk_d2(p, 0.0, 3.0) == doctest::Approx(1.0));
}

TEST_CASE("finite-difference agreement on a grid") {
  struct Case {
    ResponseFamily family;
    std::vector<double> ys;
  };
  const std::vector<Case> cases = {{ResponseFamily::gaussian(2.0), {-1.5, 0.0, 2.0}},
                                   {ResponseFamily::bernoulli(), {0.0, 1.0}},
                                   {ResponseFamily::poisson(), {0.0, 1.0, 4.0}}};
  for (const auto& c : cases) {
    for (double y : c.ys) {
      for (double t = -4.0; t <= 4.0; t += 0.25) {
        const double d1 = risk_d1(c.family, t, y);
        const double d2 = risk_d2(c.family, t, y);
        const double d3 = risk_d3(c.family, t, y);
        const double fd1 = test::central_diff([&](double x) { return risk(c.family, x, y); }, t);
        const double fd2 = test::central_diff([&](double x) { return risk_d1(c.family, x, y); }, t);
        const double fd3 = test::central_diff([&](double x) { return risk_d2(c.family, x, y); }, t);
        INFO(c.family.name(), " t=", t, " y=", y);
        CHECK(std::abs(d1 - fd1) <= 1e-6 * (1.0 + std::abs(d1)));
        CHECK(std::abs(d2 - fd2) <= 1e-6 * (1.0 + std::abs(d2)));
        CHECK(std::abs(d3 - fd3) <= 1e-6 * (1.0 + std::abs(d3)));
      }
    }
  }
}

TEST_CASE("curvature is positive on a compact interval and the risk is midpoint convex") {
  Rng rng(11);
  for (const auto& f : {ResponseFamily::gaussian(), ResponseFamily::bernoulli(), ResponseFamily::poisson()}) {
    for (double t = -9.0; t <= 9.0; t += 0.5) CHECK(risk_d2(f, t, 1.0) > 0.0);
    for (int k = 0; k < 200; ++k) {
      const double a = rng.uniform(-6.0, 6.0), b = rng.uniform(-6.0, 6.0);
      const double y = 1.0;
      CHECK(risk(f, 0.5 * (a + b), y) <= 0.5 * (risk(f, a, y) + risk(f, b, y)) + 1e-12);
    }
  }
}

TEST_CASE("domain violations are data errors") {
  CHECK_THROWS_AS(risk(ResponseFamily::bernoulli(), 0.0, 0.5), DataError);
  CHECK_THROWS_AS(risk(ResponseFamily::poisson(), 0.0, -1.0), DataError);
  CHECK_THROWS_AS(risk(ResponseFamily::poisson(), 0.0, 1.5), DataError);
  CHECK_THROWS_AS(ResponseFamily::gaussian(0.0), UsageError);
  CHECK_THROWS_AS(ResponseFamily::parse("cauchy"), UsageError);

  Matrix Y(2, 2);
  Y << 0, 1, 1, 2;
  CHECK_THROWS_WITH_AS(ResponseMatrix(Y, ResponseFamily::bernoulli()),
                       doctest::Contains("(2, 2)"), DataError);
}

TEST_CASE("softplus is stable for large arguments") {
  CHECK(softplus(800.0) == doctest::Approx(800.0));
  CHECK(softplus(-800.0) >= 0.0);
  CHECK(std::isfinite(risk(ResponseFamily::bernoulli(), 700.0, 0.0)));
}

TEST_CASE("sampling") {
  Rng rng(2024);
  int ones = 0;
  for (int k = 0; k < 1000; ++k) ones += sample_response(ResponseFamily::bernoulli(), 50.0, rng) == 1.0;
  CHECK(ones == 1000);

  const int N = 100000;
  double sg = 0.0, sp = 0.0;
  for (int k = 0; k < N; ++k) {
    sg += sample_response(ResponseFamily::gaussian(1.0), 0.0, rng);
    sp += sample_response(ResponseFamily::poisson(), 0.0, rng);
  }
  CHECK(std::abs(sg / N) <= 0.02);
  CHECK(sp / N >= 0.97);
  CHECK(sp / N <= 1.03);
}

TEST_CASE("sample_responses matches theta shape and is reproducible") {
  Matrix theta = Matrix::Constant(4, 3, 0.3);
  Rng a(5), b(5);
  const ResponseMatrix Ya = sample_responses(ResponseFamily::bernoulli(), theta, a);
  const ResponseMatrix Yb = sample_responses(ResponseFamily::bernoulli(), theta, b);
  CHECK(Ya.n() == 4);
  CHECK(Ya.q() == 3);
  CHECK(Ya.values() == Yb.values());
}

}  // TEST_SUITE
