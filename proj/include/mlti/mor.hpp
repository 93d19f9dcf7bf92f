#pragma once

// Projection-based model order reduction for MLTI systems
//   dX/dt = A * X + B * U,   Y = C * X
// with transfer function F(s) = C * (sI - A)^{-1} * B.

#include <optional>
#include <utility>
#include <vector>

#include "mlti/krylov.hpp"

namespace mlti {

struct MLTISystem {
  Tensor4d A;  // (J1,J2,J1,J2)
  Tensor4d B;  // (J1,J2,K1,K2)
  Tensor4d C;  // (Q1,Q2,J1,J2), usually Q = K

  void validate() const;
  Index n() const { return A.dims().rows(); }
  Index inputs() const { return B.dims().cols(); }
  Index outputs() const { return C.dims().rows(); }
};

struct ReducedSystem {
  Tensor4d A_m;  // (K1,mK2,K1,mK2)
  Tensor4d B_m;  // (K1,mK2,K1,K2)
  Tensor4d C_m;  // (Q1,Q2,K1,mK2)
  Tensor4d V;    // leading m blocks of the primal basis
  std::optional<Tensor4d> W;
  int m = 0;

  bool two_sided() const { return W.has_value(); }
  MLTISystem system() const { return {A_m, B_m, C_m}; }
};

struct FrequencySample {
  double omega = 0;
  double norm_full = 0;
  double norm_reduced = 0;
  double error = 0;
};

// (sI - M)^{-1} X for many s after one Hessenberg reduction M = Q H Q^T; each
// solve is O(n^2) per column.
class Resolvent {
 public:
  explicit Resolvent(const MatD& M, bool with_transpose = true);
  Index size() const { return H_.rows(); }
  MatC solve(cd s, const MatD& X) const;
  MatC solve_transposed(cd s, const MatD& X) const;
  // C (sI - M)^{-1} B with C and B already known.
  MatC sandwich(cd s, const MatD& C, const MatD& B) const;

 private:
  MatC solve_hessenberg(cd s, const MatD& H, MatC rhs) const;
  MatD H_, Q_, Ht_, Qt_;
  double scale_;
};

Tensor4c eval_transfer(const MLTISystem& sys, cd s);
Tensor4c eval_transfer(const ReducedSystem& red, cd s);

ReducedSystem project(const MLTISystem& sys, const ArnoldiResult& basis);
ReducedSystem project(const MLTISystem& sys, const LanczosResult& basis);

// Residual terms of the system projected onto the leading m blocks of
// `basis`; block m+1 supplies the correction. B must lie in range(V_m) and C^T
// in range(W_m), which holds for the default starts. `sys` must outlive the
// model.
//
// Two-sided bases give all six estimator kinds; one-sided bases take
// Ctilde := C and support kinds 1, 3 and 4.
class ResidualModel {
 public:
  ResidualModel(const MLTISystem& sys, const ArnoldiResult& basis);
  ResidualModel(const MLTISystem& sys, const LanczosResult& basis);

  bool two_sided() const { return two_sided_; }
  int m() const { return red_.m; }
  const ReducedSystem& reduced() const { return red_; }

  const MatD& b_tilde() const { return Bt_; }  // n x p
  const MatD& c_tilde() const { return Ct_; }  // q x n
  MatC rb_tilde(cd s) const;                   // p x p
  MatC rc_tilde(cd s) const;                   // p x q, two-sided only
  // Reduced surrogate of Htilde(s) = Ctilde (sI - A)^{-1} Btilde from one
  // extra block of the basis.
  MatC h_tilde_m(cd s) const;
  // Htilde(s) itself; costs a full-order solve.
  MatC h_tilde(cd s) const;

  // Frobenius norm of estimator `kind` (1..6). `h` replaces the surrogate.
  double estimate(int kind, cd s, const MatC* h = nullptr) const;
  // Objective for the next shift: ||Rtilde_C^T Rtilde_B|| two-sided,
  // ||Rtilde_B|| one-sided.
  double shift_objective(cd s) const;

  // Gamma_A = b_tilde() * b_prefactor() and Gamma_{A^T} = c_tilde()^T *
  // c_prefactor(), so that A V_m = V_m A_m + Gamma_A.
  const MatD& b_prefactor() const { return LB_; }
  const MatD& c_prefactor() const { return LC_; }

  // Primal correction factor (A - sigma_m I) v_{m+1}, unprojected.
  const MatD& last_direction() const { return y_; }

 private:
  void finish(const MatD& V1, const MatD& W1, double last_shift);

  const MLTISystem* sys_;
  ReducedSystem red_;
  bool two_sided_ = false;
  Index p_ = 0, q_ = 0;
  Resolvent res_m_;
  std::optional<Resolvent> res_m1_;
  MatD LB_, LC_;    // Rtilde_B(s) = LB (sI - A_m)^{-1} B_m, likewise for C
  MatD Bt_, Ct_;
  MatD y_;
  MatD CtV1_, W1Bt_;
};

// Tensor forms of (Btilde, Rtilde_B(s), Ctilde, Rtilde_C(s)).
struct ResidualFactors {
  Tensor4d B_tilde;
  Tensor4c R_B_tilde;
  Tensor4d C_tilde;
  Tensor4c R_C_tilde;
};
ResidualFactors residual_factors(const MLTISystem& sys, const LanczosResult& basis,
                                 cd s);

// R_B(s) = B - (sI - A) V_m (sI - A_m)^{-1} B_m and its dual, straight from
// the definition.
Tensor4c residual_b(const MLTISystem& sys, const ReducedSystem& red, cd s);
Tensor4c residual_c(const MLTISystem& sys, const ReducedSystem& red, cd s);

// R_C(s)^T (sI - A)^{-1} R_B(s), evaluated directly.
Tensor4c exact_error_identity(const MLTISystem& sys, const ReducedSystem& red, cd s);

double error_estimate(int kind, const ResidualModel& model, cd s);

// ||C (sI-A)^{-1}|| * ||(A - sigma_m I) v_{m+1} Rtilde_B(s)||. A rigorous
// bound for one-sided projection; for two-sided bases only a heuristic.
double error_bound(const MLTISystem& sys, const ResidualModel& model, cd s);
double error_bound_arnoldi(const MLTISystem& sys, const ArnoldiResult& basis, cd s);

// 50 log-spaced positive points between the smallest and largest eigenvalue
// magnitudes of A_m (mirrored into the right half-plane).
inline constexpr int kCandidateCount = 50;
std::vector<double> candidate_shifts(const MatD& A_m);
std::vector<double> log_space(double a, double b, int count);

enum class ShiftMethod { Arnoldi, Lanczos };

// Argmax of the shift objective over `candidates`, real part retained.
// Candidates where sI - A_m is singular are skipped.
double next_shift(const ResidualModel& model, const std::vector<cd>& candidates);

enum class ReduceMethod { TRBA, TRBL };

struct AdaptiveOptions {
  int m_max = 20;
  double tol = 1e-6;
  ReduceMethod method = ReduceMethod::TRBL;
  int estimator = 0;  // 0: kind 6 for TRBL, 3 for TRBA
  std::pair<double, double> shift_interval{1e-2, 1e4};
};

struct AdaptiveStep {
  int m = 0;
  double estimate = 0;     // max estimator over the test frequencies
  double next_shift = 0;   // NaN on the last step
};

struct AdaptiveResult {
  ReducedSystem reduced;
  std::vector<AdaptiveStep> history;
  std::vector<double> shifts;
  bool converged = false;  // estimate <= tol; deflation alone does not count
};

AdaptiveResult adaptive_reduce(const MLTISystem& sys, const AdaptiveOptions& opts);

enum class Stability { AsymptoticallyStable, Stable, Unstable };
Stability check_stability(const Tensor4d& A);
const char* to_string(Stability s);

// Spectral norms of F, F_m and F - F_m at s = j*omega.
std::vector<FrequencySample> freq_sweep(const MLTISystem& sys,
                                        const ReducedSystem& red,
                                        const std::vector<double>& omegas);

}  // namespace mlti
