#pragma once

// Test problems. Random entries come from a counter-based SplitMix64 stream:
// entry i of stream s under seed k is
//   u = mix(mix(k ^ (s << 56)) + i * 0x9E3779B97F4A7C15) >> 11, scaled by 2^-53,
// so every entry is reproducible on its own and independent of call order.

#include <cstdint>
#include <optional>

#include "mlti/mor.hpp"

namespace mlti {

class SplitMix64 {
 public:
  // One SplitMix64 step on state z: add the golden gamma, then finalize.
  static std::uint64_t mix(std::uint64_t z);

  SplitMix64(std::uint64_t seed, std::uint64_t stream);
  // Uniform in [0, 1).
  double uniform(std::uint64_t counter) const;

 private:
  std::uint64_t key_;
};

// Streams used by the generators.
enum : std::uint64_t { kStreamBPattern = 1, kStreamBValues = 2, kStreamC = 3, kStreamBFallback = 4 };

// A: N^2 x N^2 lower bidiagonal (-2 on the diagonal, 1 below), dims (N,N,N,N).
// B: density 0.05 with values in [0,1); a column left empty gets one entry.
// C: dense in [0,1), dims (K1,K2,N,N).
MLTISystem gen_spdiags(int N, int K1, int K2, std::uint64_t seed);

struct HeatParams {
  double c = 1.0;
  std::optional<double> dt;  // default h^2
  std::optional<double> h;   // default pi/(N+1)
};

// A = (c^2 dt / h^2) (T (x) I + I (x) T), T = tridiag(1,-2,1) of size N; B
// and C dense in [0,1).
MLTISystem gen_heat2d(int N, int K1, int K2, const HeatParams& params, std::uint64_t seed);

}  // namespace mlti
