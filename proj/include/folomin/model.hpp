#pragma once

#include "folomin/rng.hpp"
#include "folomin/types.hpp"

#include <cmath>
#include <string>

namespace folomin {

enum class FamilyKind { Gaussian, Bernoulli, Poisson };

/// Response distribution P_theta together with its risk l(theta; y).
///
///   Gaussian   l = (theta - y)^2,             y = theta + N(0, variance)
///   Bernoulli  l = -y theta + log(1 + e^theta), P(y = 1) = e^theta / (1 + e^theta)
///   Poisson    l = -y theta + e^theta,          y ~ Poisson(e^theta)
///
/// All three risks are convex in theta with analytic derivatives up to third
/// order.
class ResponseFamily {
 public:
  static ResponseFamily gaussian(double variance = 1.0);
  static ResponseFamily bernoulli() { return ResponseFamily(FamilyKind::Bernoulli, 1.0); }
  static ResponseFamily poisson() { return ResponseFamily(FamilyKind::Poisson, 1.0); }
  /// Accepts "gaussian", "bernoulli", "poisson" (case-insensitive).
  static ResponseFamily parse(const std::string& name, double variance = 1.0);

  FamilyKind kind() const { return kind_; }
  /// Noise variance; meaningful for Gaussian only.
  double variance() const { return variance_; }
  std::string name() const;

  /// Whether y lies in the support of the family.
  bool in_domain(double y) const;
  /// Throws DataError when y is outside the support.
  void check_domain(double y) const;

 private:
  ResponseFamily(FamilyKind kind, double variance) : kind_(kind), variance_(variance) {}
  FamilyKind kind_;
  double variance_;
};

/// log(1 + e^t) without overflow.
inline double softplus(double t) {
  return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t)));
}

/// e^t / (1 + e^t) without overflow.
inline double logistic(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

// Checked entry points: reject non-finite theta and out-of-domain y.
double risk(const ResponseFamily& family, double theta, double y);
double risk_d1(const ResponseFamily& family, double theta, double y);
double risk_d2(const ResponseFamily& family, double theta, double y);
double risk_d3(const ResponseFamily& family, double theta, double y);

/// A draw from P_theta.
double sample_response(const ResponseFamily& family, double theta, Rng& rng);

namespace detail {

// Unchecked kernels for the fitting loops. Inputs are validated once on
// ingestion of the ResponseMatrix.
inline double risk(FamilyKind k, double t, double y) {
  switch (k) {
    case FamilyKind::Gaussian: return (t - y) * (t - y);
    case FamilyKind::Bernoulli: return -y * t + softplus(t);
    case FamilyKind::Poisson: return -y * t + std::exp(t);
  }
  return 0.0;
}

inline double risk_d1(FamilyKind k, double t, double y) {
  switch (k) {
    case FamilyKind::Gaussian: return 2.0 * (t - y);
    case FamilyKind::Bernoulli: return logistic(t) - y;
    case FamilyKind::Poisson: return std::exp(t) - y;
  }
  return 0.0;
}

inline double risk_d2(FamilyKind k, double t, double /*y*/) {
  switch (k) {
    case FamilyKind::Gaussian: return 2.0;
    case FamilyKind::Bernoulli: {
      const double p = logistic(t);
      return p * (1.0 - p);
    }
    case FamilyKind::Poisson: return std::exp(t);
  }
  return 0.0;
}

inline double risk_d3(FamilyKind k, double t, double /*y*/) {
  switch (k) {
    case FamilyKind::Gaussian: return 0.0;
    case FamilyKind::Bernoulli: {
      const double p = logistic(t);
      return p * (1.0 - p) * (1.0 - 2.0 * p);
    }
    case FamilyKind::Poisson: return std::exp(t);
  }
  return 0.0;
}

}  // namespace detail

/// Observed n x q responses tagged with their family. Entries are checked
/// against the family support on construction.
class ResponseMatrix {
 public:
  ResponseMatrix(Matrix values, ResponseFamily family);

  const Matrix& values() const { return values_; }
  const ResponseFamily& family() const { return family_; }
  Index n() const { return values_.rows(); }
  Index q() const { return values_.cols(); }
  double operator()(Index i, Index j) const { return values_(i, j); }

  /// Total empirical risk sum_ij l(theta_ij; y_ij).
  double total_risk(const Matrix& theta) const;

 private:
  Matrix values_;
  ResponseFamily family_;
};

/// Draws a full response matrix with natural parameters `theta`.
ResponseMatrix sample_responses(const ResponseFamily& family, const Matrix& theta,
                                Rng& rng);

}  // namespace folomin
