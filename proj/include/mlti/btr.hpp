#pragma once

// Balanced truncation from low-rank Gramian factors P = U U^T, Q = L L^T.
// The reduced state lives in dims (1,r,1,r).

#include <optional>
#include <string>
#include <vector>

#include "mlti/lyapunov.hpp"

namespace mlti {

struct BTOptions {
  std::optional<int> r;    // retained order; otherwise chosen by sigma_tol
  double sigma_tol = 1e-8; // relative to the largest Hankel value
  LyapunovOptions lyap;
};

struct BalancedReduction {
  Tensor4d A_r, B_r, C_r;
  Tensor4d V_r, W_r;  // (J1,J2,1,r)
  std::vector<double> hankel_values;
  int r = 0;
  bool gramians_converged = false;
  std::vector<std::string> warnings;

  MLTISystem system() const { return {A_r, B_r, C_r}; }
};

// Symmetric factor Z with V X V^T ~ Z Z^T from the eigendecomposition of the
// projected solution X; eigenvalues below dtol are dropped.
MatD gramian_factor(const MatD& V, const MatD& X, double dtol);

BalancedReduction balanced_truncate(const MLTISystem& sys, const BTOptions& opts = {});
std::vector<double> hankel_values(const MLTISystem& sys, const LyapunovOptions& lyap = {});

// Reduced system from precomputed factors.
BalancedReduction balance_from_factors(const MLTISystem& sys, const MatD& U,
                                       const MatD& L, const BTOptions& opts);

}  // namespace mlti
