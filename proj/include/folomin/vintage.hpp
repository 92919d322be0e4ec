#pragma once

#include "folomin/rng.hpp"
#include "folomin/types.hpp"

#include <cstdint>
#include <string>

namespace folomin {

enum class VintageMethod { Varimax, Promax };

struct VintageConfig {
  VintageMethod method = VintageMethod::Varimax;
  /// Promax exponent (>= 2).
  int power = 4;
  int max_iters = 5000;
  /// Stop when the projected gradient norm falls below tol.
  double tol = 1e-11;
  /// Random orthogonal starts in addition to the identity start.
  int restarts = 10;
  /// Row (Kaiser) normalization before varimax; false gives the raw
  /// criterion. Promax normalizes according to promax_kaiser instead.
  bool kaiser = true;
  bool promax_kaiser = true;
  std::uint64_t seed = 20240101;

  void validate() const;
};

/// A_rot = A G. For varimax G is orthogonal; for promax it is an oblique
/// transformation and factor_correlation = (G'G)^{-1} has unit diagonal.
struct VintageResult {
  Matrix G;
  Matrix A_rot;
  Matrix factor_correlation;
  double criterion = 0.0;
  int iterations = 0;
  bool converged = true;
  std::string warning;
};

VintageResult varimax_rotate(const Matrix& A, const VintageConfig& config = {});
VintageResult promax_rotate(const Matrix& A, int power = 4, const VintageConfig& config = {});

/// Dispatches on config.method.
VintageResult vintage_rotate(const Matrix& A, const VintageConfig& config);

/// Random orthogonal r x r matrix (Haar, via QR of a Gaussian matrix).
Matrix random_orthogonal(Index r, Rng& rng);

}  // namespace folomin
