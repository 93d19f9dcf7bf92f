#pragma once

// Galerkin solvers for A * X + X * A^T + B * B^T = 0 on block Lanczos bases.
// The projected equation T Y + Y T^T + B_m B_m^T = 0 is solved densely and
// X_m = V_m Y V_m^T is returned in factored form.

#include <functional>
#include <utility>
#include <vector>

#include "mlti/mor.hpp"

namespace mlti {

struct LowRankSolution {
  Tensor4d Z1, Z2;  // (J1,J2,1,r), X ~ Z1 * Z2^T
  int rank = 0;
  double dtol = 0;
  double residual_bound = 0;  // relative to ||B B^T||

  Tensor4d dense() const;
};

struct LyapunovOptions {
  double eps = 1e-8;   // relative to ||B B^T||
  double dtol = 1e-12;
  int m_max = 30;
  std::pair<double, double> shift_interval{1e-2, 1e4};
};

// Passed to the observer once per iteration, before the convergence test.
struct LyapunovIterate {
  int m;
  const MatD& V;  // n x mp
  const MatD& W;
  const MatD& Y;  // mp x mp
  double bound;   // absolute 2 ||Gamma Y V^T||
};
using LyapunovObserver = std::function<void(const LyapunovIterate&)>;

struct LyapunovResult {
  LowRankSolution solution;
  int iterations = 0;
  std::vector<double> shifts;
  std::vector<double> bounds;  // relative, one per iteration
  bool converged = false;      // bound <= eps; a deflated basis stops early without it
  MatD V, W, Y;  // final basis blocks and projected solution
};

// T Y + Y T^T + Q = 0 by complex Schur (Bartels-Stewart). Throws
// SingularPencilError when lambda_i + conj(lambda_j) vanishes.
MatD dense_lyap_solve(const MatD& T, const MatD& Q);
Tensor4d dense_lyap_solve(const Tensor4d& T, const Tensor4d& Q);

LyapunovResult solve_lyapunov_rational(const Tensor4d& A, const Tensor4d& B,
                                       const Tensor4d& C,
                                       const LyapunovOptions& opts = {},
                                       const LyapunovObserver& observer = {});

LyapunovResult solve_lyapunov_classic(const Tensor4d& A, const Tensor4d& B,
                                      const Tensor4d& C,
                                      const LyapunovOptions& opts = {},
                                      const LyapunovObserver& observer = {});

// 2 ||Gamma_{m,A} * Y * V_m^T|| with Gamma = left * right, without forming
// the n x n product.
double gamma_bound(const MatD& left, const MatD& right, const MatD& Y, const MatD& Vm);
double residual_norm_bound(const LanczosResult& basis, const Tensor4d& Y,
                           const Tensor4d& A);

// ||A X + X A^T + B B^T|| for a dense X; small problems only.
double lyapunov_residual(const MatD& A, const MatD& X, const MatD& BBt);

// Keeps singular values of Y that are >= dtol.
LowRankSolution truncate_lowrank(const Tensor4d& Y, const Tensor4d& V, double dtol);

struct CoupledResult {
  LowRankSolution P, Q;
  int iterations = 0;
  std::vector<double> shifts;
  bool converged = false;
  MatD V, W;  // leading m blocks
  MatD X, Y;  // projected solutions: P ~ V X V^T, Q ~ W Y W^T
};

// A P + P A^T + B B^T = 0 and A^T Q + Q A + C^T C = 0 on one TRBL basis.
CoupledResult solve_coupled(const Tensor4d& A, const Tensor4d& B, const Tensor4d& C,
                            const LyapunovOptions& opts = {});

}  // namespace mlti
