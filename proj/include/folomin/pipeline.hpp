#pragma once

#include "folomin/criteria.hpp"
#include "folomin/init.hpp"
#include "folomin/lqa.hpp"
#include "folomin/model.hpp"

#include <optional>
#include <string>
#include <vector>

namespace folomin {

/// Settings for the rotation stage that follows erm_fit.
struct FolominOptions {
  LossKind loss = LossKind::MCP;
  /// <= 0 selects default_gamma from plug-in standard errors at the start.
  double gamma = 0.0;
  double R = 1.0;
  double eta = 0.05;
  int T = 3;
  RotationMode mode = RotationMode::Oblique;
  /// Norm floor of the similarity; unset uses default_init_config.
  std::optional<double> delta;
  /// Signal bound used by default_init_config when delta is unset.
  std::optional<double> lambda_gen;
  /// Cosine slacks tried for the initial rotation. Every candidate is
  /// rotated by LQA with a common gamma and the smallest final criterion wins
  /// (ties to the earlier entry).
  std::vector<double> delta_primes = {0.01, 0.005, 0.02, 0.05};
  Index min_set_size = 2;
  /// Disjoint sets kept beyond the r largest; every r-subset of the kept
  /// sets is tried (capped at max_combinations per delta_prime).
  Index extra_sets = 3;
  Index max_combinations = 500;

  void validate() const;
};

struct FolominCandidate {
  double delta_prime = 0.0;
  /// Positions of the chosen sets in the greedy disjoint list (0 = largest).
  std::vector<Index> combination;
  bool ok = false;
  std::string error;
  double criterion = 0.0;
  bool duplicate = false;
};

struct FolominFit {
  InitResult init;
  LqaResult lqa;
  double gamma = 0.0;
  double delta_prime = 0.0;
  FoldedLoss loss = FoldedLoss::mcp(1.0);
  std::vector<FolominCandidate> candidates;
  /// Final (Z, A) and the total rotation from the ERM pair:
  /// (Z, A) = (Z0 G', A0 G^{-1}).
  ParamPair params;
  Matrix rotation;
};

/// Initial rotation and LQA refinement of an ERM fit. For each delta_prime
/// the greedy disjoint sets are computed; the r largest give the reference
/// start (and gamma, as the median over delta_primes when not fixed). Every
/// r-subset of the kept sets is then rotated by LQA and the candidate with
/// the smallest final criterion is returned. Throws the last candidate error
/// when every candidate fails.
FolominFit folomin_rotate(const ResponseMatrix& data, const ParamPair& erm,
                          const FolominOptions& options);

FoldedLoss make_loss(LossKind kind, double gamma);

}  // namespace folomin
