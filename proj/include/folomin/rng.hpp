#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace folomin {

/// Seeded, splittable random source.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. Child streams are seeded by passing (seed, stream id) through
/// SplitMix64, so stream k of a master seed never depends on how many draws
/// other streams consumed. Uniform and normal variates are produced here
/// (53-bit mantissa fill, Marsaglia polar method) rather than through the
/// implementation-defined std distributions.
class Rng {
 public:
  static constexpr std::string_view kName = "mt19937_64/splitmix64-streams";

  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }

  /// Independent child stream identified by `stream`.
  Rng split(std::uint64_t stream) const;

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1).
  double uniform();
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();

  static std::uint64_t splitmix64(std::uint64_t x);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace folomin
