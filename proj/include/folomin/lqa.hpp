#pragma once

#include "folomin/criteria.hpp"
#include "folomin/types.hpp"

namespace folomin {

struct LqaConfig {
  FoldedLoss loss = FoldedLoss::mcp(0.05);
  /// Radius of the relaxed region ||H - I|| <= R.
  double R = 1.0;
  /// Weight regularizer; keeps weights finite at zero entries.
  double eta = 0.05;
  int T = 3;
  RotationMode mode = RotationMode::Oblique;

  void validate() const;
};

struct LqaIteration {
  double criterion = 0.0;       // Q_rho(A^(t+1))
  double step_norm = 0.0;       // ||H^(t+1) - I||
  double weight_mean = 0.0;
  double weight_max = 0.0;
  Index weight_nonzero = 0;
  double surrogate_at_identity = 0.0;
  double surrogate_at_solution = 0.0;
  double blend = 1.0;           // s of the feasibility blend (1 = unblended)
  double diag_residual = 0.0;   // max_l |(n^{-1} Z'Z)_ll - 1| after the update
};

struct LqaTrace {
  double initial_criterion = 0.0;
  std::vector<LqaIteration> iterations;
};

struct LqaResult {
  /// G_T ... G_1: (Z_T, A_T) = (Z_0 G_total', A_0 G_total^{-1}).
  Matrix G_total;
  ParamPair params;
  LqaTrace trace;
};

/// w_jl = (a_jl^2 + eta^2)^{-1/2} rho'(|a_jl|), with rho'(0) := rho'(0+).
Matrix lqa_weights(const Matrix& A, const FoldedLoss& loss, double eta);

struct SubproblemResult {
  Matrix H;
  double blend = 1.0;
};

/// argmin over diag(H'H) = I, ||H - I|| <= R of
/// sum_l sum_j w_jl (a_j' h_l)^2, solved per column as the smallest
/// eigenvector of W_l = sum_j w_jl a_j a_j' (l-th coordinate nonnegative,
/// ties resolved towards e_l). If the assembled H leaves the ball it is blended
/// towards I with the largest feasible s in (0, 1] (columns renormalized).
SubproblemResult lqa_subproblem_detail(const Matrix& A, const Matrix& weights, double R);
Matrix lqa_subproblem(const Matrix& A, const Matrix& weights, double R);

/// T iterations of weights -> subproblem -> normalise -> update:
///   G = diag(H^{-1} S H^{-T})^{-1/2} H^{-1},  S = n^{-1} Z'Z
///   (Z, A) <- (Z G', A G^{-1}).
/// In Orthogonal mode G is the polar factor of H^{-1}.
LqaResult lqa_run(const ParamPair& start, const LqaConfig& config);

/// gamma = 0.5 * lambda_hat / (a3 + 1), with lambda_hat the smallest |a_jl|
/// exceeding 3 standard errors. Falls back to the smallest nonzero |a_jl|
/// when no entry is significant.
double default_gamma(const Matrix& A, const Matrix& standard_errors, double a3);

}  // namespace folomin
