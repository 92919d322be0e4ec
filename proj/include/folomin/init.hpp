#pragma once

#include "folomin/types.hpp"

#include <optional>

namespace folomin {

struct InitConfig {
  /// Norm-product floor: pairs with n^{-1} ||Z a_j1|| ||Z a_j2|| <= delta get
  /// similarity 0.
  double delta = 0.01;
  /// Cosine slack: j' joins I_j when similarity(j, j') > 1 - delta_prime.
  double delta_prime = 0.01;
  /// Candidate sets smaller than this are never selected.
  Index min_set_size = 2;

  void validate() const;
};

/// delta = 0.05 * lambda_gen^2 * lambda_min(n^{-1} Z'Z) when a generator
/// signal bound is known, else 0.01; delta' keeps the InitConfig default.
InitConfig default_init_config(const ParamPair& params,
                               std::optional<double> lambda_gen = std::nullopt);

struct SimilaritySummary {
  /// Sizes of all candidate sets I_j, indexed by anchor row.
  std::vector<Index> candidate_sizes;
  /// Anchor row of each selected set.
  std::vector<Index> anchors;
  /// Ordered pairs (j, j'), j != j', above the cosine threshold.
  Index pairs_above_threshold = 0;
  double rotation_condition = 0.0;
};

struct InitResult {
  ParamPair params;
  /// G0 with (Z_init, A_init) = (Z0 G0', A0 G0^{-1}).
  Matrix rotation;
  /// selected_sets[k] is the estimated simple set of column k of A_init.
  std::vector<IndexSet> selected_sets;
  SimilaritySummary similarity_used;
};

/// Rotation-invariant similarity of rows j1, j2: cos(Z a_j1, Z a_j2) when
/// n^{-1} ||Z a_j1|| ||Z a_j2|| > delta, else 0.
double similarity(const ParamPair& params, Index j1, Index j2, double delta);

struct SelectedSets {
  std::vector<IndexSet> sets;
  SimilaritySummary summary;
};

/// Steps 1-2: candidate sets I_j and greedy selection (size descending, ties
/// by smaller anchor) of up to max_sets pairwise-disjoint sets with at least
/// min_set_size rows.
SelectedSets select_disjoint_sets(const ParamPair& params, const InitConfig& config,
                                  Index max_sets);

/// Steps 3-4 for a given assignment of r sets to the r columns.
InitResult init_from_sets(const ParamPair& params, const std::vector<IndexSet>& sets);

/// Simple-row detection and initial rotation.
///
/// 1. I_j = { j' : similarity(j, j') > 1 - delta' } for every row j.
/// 2. Greedy selection of the r largest pairwise-disjoint I_j (size
///    descending, ties by smaller anchor) with at least min_set_size rows.
/// 3. v_k = right singular vector of A0 restricted to the union of the other
///    selected sets, for its smallest singular value.
/// 4. G~ = (v_1 .. v_r), G0 = diag(G~^{-1} S G~^{-T})^{-1/2} G~^{-1} with
///    S = n^{-1} Z0'Z0 (S = I for an erm_fit output).
///
/// Each v_k is oriented so that column k of A_init sums to a nonnegative
/// value over its selected set. Throws NumericalError when fewer than r sets
/// qualify or G~ is numerically collinear.
InitResult init_rotation(const ParamPair& params, const InitConfig& config = {});

}  // namespace folomin
