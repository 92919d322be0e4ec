#pragma once

#include "folomin/types.hpp"

#include <optional>

namespace folomin {

/// Simple-row structure of a representation matrix and the sparsity-strength
/// diagnostics derived from it.
struct SparsityProfile {
  /// simple_sets[l]: rows proportional to e_l.
  std::vector<IndexSet> simple_sets;
  /// Nonzero rows that load on two or more dimensions.
  IndexSet non_simple;
  IndexSet zero_rows;
  /// Smallest entry magnitude above the zero tolerance; empty when A == 0.
  std::optional<double> lambda_min;
  /// ||A||_{2->inf}
  double row_norm_max = 0.0;
  /// min_l lambda_{r-1}(q^{-1} A_{T_l}' A_{T_l}), T_l = {j : |a_jl| <= tol}.
  double sigma_q_inv = 0.0;
  /// |S|^{-1} min_l sum_{j in S_l} a_jl^2 (0 when there are no simple rows).
  double sigma_tilde_q_inv = 0.0;
};

/// Indices j' with a_j' != 0 and |cos(a_j, a_j')| >= 1 - epsilon. Empty when
/// a_j == 0.
IndexSet cone_neighborhood(const Matrix& A, Index j, double epsilon);

/// Classifies rows of A as simple / non-simple / zero, treating magnitudes at
/// or below `zero_tol` as zero. Requires r >= 2.
SparsityProfile detect_simple_rows(const Matrix& A, double zero_tol = 1e-10);

enum class SparsityClause { None, SignalStrength, AngularSeparation, RowNorm };

struct SparsityCheck {
  bool sparse = false;
  /// First violated clause (None when sparse).
  SparsityClause violated = SparsityClause::None;
  /// Offending row for SignalStrength / AngularSeparation / RowNorm.
  std::optional<Index> row;
  /// Largest epsilon-cone among non-simple rows and the smallest simple set.
  Index max_nonsimple_cone = 0;
  Index min_simple_set = 0;
};

/// (lambda, epsilon)-sparsity with row-norm bound M:
///   (i)  every nonzero |a_jl| >= lambda,
///   (ii) max_{j not simple} |C_eps(a_j)| < min_l |S_l(A)|,
///   (iii) ||A||_{2->inf} <= M.
SparsityCheck is_sparse(const Matrix& A, double lambda, double epsilon, double M,
                        double zero_tol = 1e-10);

}  // namespace folomin
