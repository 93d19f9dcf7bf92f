#include "mlti/generators.hpp"

#include <cmath>
#include <numbers>

namespace mlti {

std::uint64_t SplitMix64::mix(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

SplitMix64::SplitMix64(std::uint64_t seed, std::uint64_t stream)
    : key_(mix(seed ^ (stream << 56))) {}

double SplitMix64::uniform(std::uint64_t counter) const {
  const std::uint64_t z = mix(key_ + counter * 0x9E3779B97F4A7C15ULL);
  return static_cast<double>(z >> 11) * 0x1.0p-53;
}

namespace {

void check_dims(int N, int K1, int K2) {
  if (N < 2) throw ConfigError("N must be at least 2");
  if (K1 < 1 || K2 < 1) throw ConfigError("K1 and K2 must be positive");
  if (static_cast<long long>(K1) * K2 > static_cast<long long>(N) * N)
    throw ConfigError("K1*K2 exceeds N^2");
}

MatD dense_uniform(Index rows, Index cols, const SplitMix64& g) {
  MatD m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i)
      m(i, j) = g.uniform(static_cast<std::uint64_t>(i + j * rows));
  return m;
}

}  // namespace

MLTISystem gen_spdiags(int N, int K1, int K2, std::uint64_t seed) {
  check_dims(N, K1, K2);
  const Index n = static_cast<Index>(N) * N;
  const Index p = static_cast<Index>(K1) * K2;
  MatD A = MatD::Zero(n, n);
  A.diagonal().setConstant(-2.0);
  A.diagonal(-1).setConstant(1.0);

  const SplitMix64 pattern(seed, kStreamBPattern), values(seed, kStreamBValues),
      fallback(seed, kStreamBFallback);
  MatD B = MatD::Zero(n, p);
  for (Index j = 0; j < p; ++j) {
    bool any = false;
    for (Index i = 0; i < n; ++i) {
      const auto k = static_cast<std::uint64_t>(i + j * n);
      if (pattern.uniform(k) < 0.05) {
        B(i, j) = values.uniform(k);
        any = true;
      }
    }
    if (!any) {
      const auto i = std::min<Index>(n - 1, static_cast<Index>(fallback.uniform(j) * n));
      B(i, j) = values.uniform(static_cast<std::uint64_t>(i + j * n));
    }
  }
  const MatD C = dense_uniform(p, n, SplitMix64(seed, kStreamC));
  return {fold(A, Dims4{N, N, N, N}), fold(B, Dims4{N, N, K1, K2}),
          fold(C, Dims4{K1, K2, N, N})};
}

MLTISystem gen_heat2d(int N, int K1, int K2, const HeatParams& params, std::uint64_t seed) {
  check_dims(N, K1, K2);
  const double h = params.h.value_or(std::numbers::pi / (N + 1));
  const double dt = params.dt.value_or(h * h);
  if (!(params.c > 0) || !(h > 0) || !(dt > 0)) throw ConfigError("c, dt and h must be positive");
  const double scale = params.c * params.c * dt / (h * h);
  MatD T = MatD::Zero(N, N);
  T.diagonal().setConstant(-2.0);
  T.diagonal(1).setConstant(1.0);
  T.diagonal(-1).setConstant(1.0);
  const Index n = static_cast<Index>(N) * N;
  const Index p = static_cast<Index>(K1) * K2;
  MatD A = MatD::Zero(n, n);
  // Row index j1 + N*j2 (0-based): T acts on j1 within a block, on j2 across blocks.
  for (Index j2 = 0; j2 < N; ++j2)
    for (Index j1 = 0; j1 < N; ++j1)
      for (Index k = 0; k < N; ++k) {
        A(j1 + N * j2, k + N * j2) += T(j1, k);
        A(j1 + N * j2, j1 + N * k) += T(j2, k);
      }
  A *= scale;
  const MatD B = dense_uniform(n, p, SplitMix64(seed, kStreamBValues));
  const MatD C = dense_uniform(p, n, SplitMix64(seed, kStreamC));
  return {fold(A, Dims4{N, N, N, N}), fold(B, Dims4{N, N, K1, K2}),
          fold(C, Dims4{K1, K2, N, N})};
}

}  // namespace mlti
