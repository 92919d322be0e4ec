#pragma once

#include "folomin/model.hpp"
#include "folomin/types.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace folomin {

struct StepRule {
  enum class Kind { Backtracking, Fixed };
  Kind kind = Kind::Backtracking;
  double shrink = 0.5;  // Backtracking
  double c = 1e-4;      // Armijo constant
  double step = 1.0;    // initial (Backtracking) or constant (Fixed) step

  static StepRule backtracking(double shrink = 0.5, double c = 1e-4);
  static StepRule fixed(double step);
};

/// Search direction used for each row block update.
enum class Direction {
  Newton,   // per-row damped Newton (default)
  Gradient  // per-row gradient of the mean row risk
};

struct FitConfig {
  /// Row-norm cap for both Z and A; <= 0 selects 2 x the spectral start's
  /// largest row norm.
  double M = 0.0;
  int max_iters = 1000;
  StepRule step_rule;
  /// Convergence when the relative objective change drops below tol.
  double tol = 1e-9;
  std::uint64_t seed = 0;
  Direction direction = Direction::Newton;

  void validate() const;
};

enum class FitStatus { Converged, MaxIterations };

struct FitResult {
  ParamPair params;
  FitStatus status = FitStatus::MaxIterations;
  int iterations = 0;
  /// Objective after each sweep; entry 0 is the starting point.
  std::vector<double> objective;
  /// Cap actually used.
  double M = 0.0;
  /// Rows rescaled onto the cap over the whole run.
  Index clipped_rows = 0;
  std::string warning;
};

/// Constrained empirical risk minimization
///
///   min sum_ij l(a_j' z_i; y_ij)
///   s.t. n^{-1} Z'Z = I, A'A diagonal, ||Z||_{2->inf} <= M, ||A||_{2->inf} <= M.
///
/// Alternating row-block descent: every row of A, then every row of Z, takes
/// one projected step with an Armijo line search; after each sweep the pair is
/// re-expressed (product unchanged) to restore the orthonormality and
/// diagonality constraints exactly, and rows are capped at M.
FitResult erm_fit(const ResponseMatrix& data, Index r, const FitConfig& config = {},
                  const std::optional<ParamPair>& warm_start = std::nullopt);

/// Rank-r SVD of a family-specific transform of Y (identity, logit of the
/// clipped rank-r smoother, log of the clipped rank-r smoother), scaled so
/// that n^{-1} Z'Z = I and A'A is diagonal.
ParamPair spectral_start(const ResponseMatrix& data, Index r);

/// Row-separable oracle fits: row j of the result minimizes
/// sum_i l(a' z*_i; y_ij) (resp. sum_j l(a*_j' z; y_ij) for Z).
/// Each row is solved by damped Newton until the gradient of the mean row risk
/// is below 1e-10, with a bisection line-search fallback. Throws
/// NumericalError when a row does not converge or its Hessian degenerates at
/// the solution (e.g. separable binary data).
Matrix oracle_fit_A(const ResponseMatrix& data, const Matrix& Z_star);
Matrix oracle_fit_Z(const ResponseMatrix& data, const Matrix& A_star);

}  // namespace folomin
