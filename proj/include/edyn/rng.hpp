#pragma once

#include <cstdint>
#include <optional>
#include <random>

namespace edyn {

/// Portable seeded generator. The engine is std::mt19937_64, whose output
/// sequence is fixed by the C++ standard. Uniforms take the top 53 bits of
/// each draw; normals use the Box-Muller transform with the second variate of
/// each pair cached. No std::*_distribution is involved, so a given seed
/// yields the same stream on every conforming platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal();

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

/// SplitMix64 finaliser of seed + stream * golden gamma; used to derive
/// independent sub-seeds (data matrix, ground truth, noise, init) from one
/// user seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

}  // namespace edyn
