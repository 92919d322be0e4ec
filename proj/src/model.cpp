#include "folomin/model.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace folomin {

ResponseFamily ResponseFamily::gaussian(double variance) {
  if (!(variance > 0.0) || !std::isfinite(variance)) {
    throw UsageError("Gaussian variance must be strictly positive");
  }
  return ResponseFamily(FamilyKind::Gaussian, variance);
}

ResponseFamily ResponseFamily::parse(const std::string& name, double variance) {
  std::string s = name;
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (s == "gaussian") return gaussian(variance);
  if (s == "bernoulli") return bernoulli();
  if (s == "poisson") return poisson();
  throw UsageError("unknown response family '" + name + "'");
}

std::string ResponseFamily::name() const {
  switch (kind_) {
    case FamilyKind::Gaussian: return "gaussian";
    case FamilyKind::Bernoulli: return "bernoulli";
    case FamilyKind::Poisson: return "poisson";
  }
  return "unknown";
}

bool ResponseFamily::in_domain(double y) const {
  if (!std::isfinite(y)) return false;
  switch (kind_) {
    case FamilyKind::Gaussian: return true;
    case FamilyKind::Bernoulli: return y == 0.0 || y == 1.0;
    case FamilyKind::Poisson: return y >= 0.0 && std::floor(y) == y;
  }
  return false;
}

void ResponseFamily::check_domain(double y) const {
  if (!in_domain(y)) {
    std::ostringstream os;
    os << "response value " << y << " is outside the " << name() << " support";
    throw DataError(os.str());
  }
}

namespace {

void check_args(const ResponseFamily& family, double theta, double y) {
  if (!std::isfinite(theta)) throw DataError("natural parameter theta is not finite");
  family.check_domain(y);
}

}  // namespace

double risk(const ResponseFamily& family, double theta, double y) {
  check_args(family, theta, y);
  return detail::risk(family.kind(), theta, y);
}

double risk_d1(const ResponseFamily& family, double theta, double y) {
  check_args(family, theta, y);
  return detail::risk_d1(family.kind(), theta, y);
}

double risk_d2(const ResponseFamily& family, double theta, double y) {
  check_args(family, theta, y);
  return detail::risk_d2(family.kind(), theta, y);
}

double risk_d3(const ResponseFamily& family, double theta, double y) {
  check_args(family, theta, y);
  return detail::risk_d3(family.kind(), theta, y);
}

namespace {

// Inversion by sequential search for small means; for large means the
// transformed rejection method of Hormann (PTRS).
double sample_poisson(double mean, Rng& rng) {
  if (mean < 10.0) {
    double p = std::exp(-mean);
    double cdf = p;
    const double u = rng.uniform();
    double k = 0.0;
    while (u > cdf && k < 1000.0) {
      k += 1.0;
      p *= mean / k;
      cdf += p;
    }
    return k;
  }
  const double slam = std::sqrt(mean);
  const double loglam = std::log(mean);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = rng.uniform() - 0.5;
    const double v = rng.uniform();
    const double us = 0.5 - std::abs(u);
    const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= vr) return k;
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b) <=
        -mean + k * loglam - std::lgamma(k + 1.0)) {
      return k;
    }
  }
}

}  // namespace

double sample_response(const ResponseFamily& family, double theta, Rng& rng) {
  if (!std::isfinite(theta)) throw DataError("natural parameter theta is not finite");
  switch (family.kind()) {
    case FamilyKind::Gaussian:
      return theta + std::sqrt(family.variance()) * rng.normal();
    case FamilyKind::Bernoulli:
      return rng.uniform() < logistic(theta) ? 1.0 : 0.0;
    case FamilyKind::Poisson:
      return sample_poisson(std::exp(theta), rng);
  }
  return 0.0;
}

ResponseMatrix::ResponseMatrix(Matrix values, ResponseFamily family)
    : values_(std::move(values)), family_(family) {
  if (values_.rows() == 0 || values_.cols() == 0) {
    throw DataError("response matrix is empty");
  }
  for (Index j = 0; j < values_.cols(); ++j) {
    for (Index i = 0; i < values_.rows(); ++i) {
      if (!family_.in_domain(values_(i, j))) {
        std::ostringstream os;
        os << "response (" << i + 1 << ", " << j + 1 << ") = " << values_(i, j)
           << " is outside the " << family_.name() << " support";
        throw DataError(os.str());
      }
    }
  }
}

double ResponseMatrix::total_risk(const Matrix& theta) const {
  const FamilyKind k = family_.kind();
  double s = 0.0;
  for (Index j = 0; j < q(); ++j) {
    for (Index i = 0; i < n(); ++i) s += detail::risk(k, theta(i, j), values_(i, j));
  }
  return s;
}

ResponseMatrix sample_responses(const ResponseFamily& family, const Matrix& theta,
                                Rng& rng) {
  Matrix y(theta.rows(), theta.cols());
  // Row-major draw order so the stream consumption is layout independent.
  for (Index i = 0; i < theta.rows(); ++i) {
    for (Index j = 0; j < theta.cols(); ++j) y(i, j) = sample_response(family, theta(i, j), rng);
  }
  return ResponseMatrix(std::move(y), family);
}

}  // namespace folomin
