#pragma once

#include "folomin/model.hpp"
#include "folomin/types.hpp"

#include <vector>

namespace folomin {

/// Plug-in asymptotic covariance of one row of A (scale n) or Z (scale q):
/// sandwich = bread^{-1} meat bread^{-1}.
struct RowCovariance {
  Index index = 0;
  Matrix bread;
  Matrix meat;
  Matrix sandwich;
  double scale = 1.0;
};

/// bread = n^{-1} sum_i l''(theta_ij) z_i z_i',  meat = n^{-1} sum_i l'(theta_ij)^2 z_i z_i'.
RowCovariance plugin_covariance_A(const ResponseMatrix& data, const ParamPair& params, Index j);
/// bread = q^{-1} sum_j l''(theta_ij) a_j a_j',  meat = q^{-1} sum_j l'(theta_ij)^2 a_j a_j'.
RowCovariance plugin_covariance_Z(const ResponseMatrix& data, const ParamPair& params, Index i);

/// All rows, computed in parallel.
std::vector<RowCovariance> plugin_covariances_A(const ResponseMatrix& data, const ParamPair& params);
std::vector<RowCovariance> plugin_covariances_Z(const ResponseMatrix& data, const ParamPair& params);

double normal_cdf(double x);
/// Inverse of normal_cdf on (0, 1).
double normal_quantile(double p);
/// Two-sided p-value 2 (1 - Phi(|z|)).
double two_sided_p(double z);

/// Entrywise Wald quantities for a matrix of estimates whose row k has
/// covariance rows[k].
struct WaldTable {
  double level = 0.95;
  Matrix estimate;
  Matrix se;
  Matrix z;
  Matrix p;
  Matrix lower;
  Matrix upper;
};

/// estimate_kl +- Phi^{-1}((1 + level)/2) sqrt(sandwich_ll / scale).
WaldTable wald_intervals(const Matrix& estimate, const std::vector<RowCovariance>& rows,
                         double level);
/// Same from a matrix of standard errors.
WaldTable wald_from_se(const Matrix& estimate, const Matrix& se, double level);

struct BhResult {
  std::vector<double> adjusted;
  std::vector<bool> rejected;
};

/// Benjamini-Hochberg step-up adjustment with monotone adjusted p-values.
BhResult bh_adjust(const std::vector<double>& p_values, double alpha);
/// min(1, m p).
std::vector<double> bonferroni(const std::vector<double>& p_values);

struct Alignment {
  /// aligned.col(l) = signs[l] * estimate.col(perm[l]).
  std::vector<Index> perm;
  std::vector<int> signs;
  Matrix aligned;
  double residual = 0.0;
};

/// Signed column permutation of `estimate` closest to `truth` in Frobenius
/// norm. Exhaustive over permutations for r <= 8, Hungarian assignment on
/// absolute column inner products otherwise (both exact).
Alignment align(const Matrix& estimate, const Matrix& truth);
/// Applies perm (without signs) to another matrix with the same columns,
/// e.g. standard errors.
Matrix apply_permutation(const Matrix& M, const std::vector<Index>& perm);
/// Applies perm and signs.
Matrix apply_alignment(const Matrix& M, const Alignment& alignment);

enum class Adjustment { BH, Bonferroni };

struct InferenceReport {
  ParamPair estimates;
  std::vector<RowCovariance> cov_A;
  std::vector<RowCovariance> cov_Z;
  WaldTable wald_A;
  WaldTable wald_Z;
  /// BH-adjusted p-values of A (per column when per_column is set).
  Matrix p_bh;
  Matrix p_bonferroni;
  Matrix rejected_bh;
};

/// Sandwich covariances, Wald intervals and multiplicity-adjusted p-values
/// for every entry of A, and Wald intervals for Z. When include_Z is false
/// cov_Z and wald_Z are left empty.
InferenceReport build_inference_report(const ResponseMatrix& data, const ParamPair& params,
                                       double level, double alpha = 0.05,
                                       bool per_column = true, bool include_Z = true);

}  // namespace folomin
