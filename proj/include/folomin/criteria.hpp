#pragma once

#include "folomin/rng.hpp"
#include "folomin/types.hpp"

#include <string>

namespace folomin {

enum class LossKind { SCAD, MCP, TruncatedL1 };

/// Folded concave loss rho_gamma: even, rho(0) = 0, rho'(0+) = gamma,
/// concave and nondecreasing on (0, inf), flat on [a3 * gamma, inf).
///
///   MCP(a > 1)   rho(t) = gamma|t| - t^2 / (2a)              for |t| <= a gamma
///                       = a gamma^2 / 2                        otherwise
///   SCAD(a > 2)  rho'(t) = gamma on (0, gamma],
///                        = (a gamma - t)_+ / (a - 1)          beyond gamma
///   TL1          rho(t) = gamma min(|t|, gamma)
class FoldedLoss {
 public:
  static FoldedLoss scad(double gamma, double a = 3.7);
  static FoldedLoss mcp(double gamma, double a = 3.0);
  static FoldedLoss truncated_l1(double gamma);
  /// "scad" | "mcp" | "tl1" with the default shape constants.
  static FoldedLoss parse(const std::string& name, double gamma);

  LossKind kind() const { return kind_; }
  double gamma() const { return gamma_; }
  /// Shape parameter a (unused, reported as 1, for TL1).
  double shape() const { return a_; }
  std::string name() const;

  /// Constants of the folded-loss conditions: rho'(0+) = a0 gamma; rho' is
  /// (a2 gamma)-Lipschitz on (0, a1 gamma]; rho' = 0 on [a3 gamma, inf).
  double a0() const { return 1.0; }
  double a1() const;
  double a2() const;
  double a3() const;

  double eval(double t) const;
  /// Derivative for t > 0; 0 at points of non-differentiability.
  double d1(double t) const;
  double d1_at_zero_plus() const { return gamma_; }

 private:
  FoldedLoss(LossKind kind, double gamma, double a);
  LossKind kind_;
  double gamma_;
  double a_;
};

double folded_eval(const FoldedLoss& loss, double t);
double folded_d1(const FoldedLoss& loss, double t);
double folded_d1_at_zero_plus(const FoldedLoss& loss);

/// Q_rho(A) = sum_jl rho_gamma(a_jl).
double criterion_folomin(const Matrix& A, const FoldedLoss& loss);

/// Q_varimax(A) = q^{-1} sum_l sum_j { a_jl^4 - (q^{-1} sum_t a_tl^2)^2 }.
double criterion_varimax(const Matrix& A);

/// Gradient of criterion_varimax with respect to A.
Matrix criterion_varimax_gradient(const Matrix& A);

enum class RotationMode { Oblique, Orthogonal };

std::string to_string(RotationMode mode);
RotationMode parse_rotation_mode(const std::string& s);

/// Local feasible set Xi(c, Z) = { G : ||G - center|| <= c,
/// diag(G gram G') = I }. In Orthogonal mode gram is taken as I and the
/// constraint is G G' = I.
struct FeasibleSet {
  Matrix center;
  double radius = 0.0;
  Matrix gram;
  RotationMode mode = RotationMode::Oblique;

  static FeasibleSet around_identity(double radius, const Matrix& gram,
                                     RotationMode mode = RotationMode::Oblique);
  Index dim() const { return gram.rows(); }
};

/// Oblique: D^{-1/2} G with D = diag(G gram G'). Orthogonal: polar factor.
Matrix feasible_project(const FeasibleSet& set, const Matrix& G);

/// Random member of the set: center + E with ||E|| <= radius, projected back
/// onto the constraint surface. Draws with ||G - center|| > 2 radius after the
/// projection are rejected and redrawn.
Matrix sample_feasible(const FeasibleSet& set, Rng& rng);

}  // namespace folomin
