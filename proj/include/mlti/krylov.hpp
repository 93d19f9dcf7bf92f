#pragma once

// Block Krylov bases under the Einstein product: classic and rational block
// Arnoldi (TBA/TRBA) and block Lanczos (TBL/TRBL).
//
// Bases are 2-mode row block tensors, so the unfolding of V_{m+1} is the
// n x (m+1)p matrix [V_1 ... V_{m+1}] with n = J1*J2 and p = K1*K2, and the
// block Hessenberg tensors unfold to ordinary (m+1)p x mp block matrices.

#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "mlti/tensor.hpp"

namespace mlti {

// R-diagonal ratio below which a new block counts as rank deficient.
inline constexpr double kDeflationTol = 1e-12;
// Smallest/largest singular value ratio of W^T V below which Lanczos aborts.
inline constexpr double kBreakdownTol = 1e-12;
inline constexpr double kInfiniteShift = std::numeric_limits<double>::infinity();

struct ArnoldiResult {
  Tensor4d V;      // (J1,J2,K1,(m+1)K2)
  Tensor4d H_bar;  // (K1,(m+1)K2,K1,mK2)
  Tensor4d K_bar;  // rational runs only
  std::vector<double> shifts;
  int m = 0;
  bool rational = false;
  bool deflated = false;
};

struct LanczosResult {
  Tensor4d V, W;          // (J1,J2,K1,(m+1)K2), W^T V = I
  Tensor4d H_bar, G_bar;  // (K1,(m+1)K2,K1,mK2)
  Tensor4d K_bar, L_bar;  // rational runs with all shifts finite
  Tensor4d T_m;           // (K1,mK2,K1,mK2)
  std::vector<double> shifts;
  int m = 0;
  bool rational = false;
  bool deflated = false;
  // False when H_m or G_m was too ill-conditioned to form T_m from the pencil;
  // T_m then holds W_m^T A V_m and Gamma is unavailable.
  bool pencil_ok = true;
};

// Block Arnoldi with either A (sigma = inf, classic) or (A - sigma I)^{-1} as
// the expansion operator. Two Gram-Schmidt passes per step.
class BlockArnoldi {
 public:
  BlockArnoldi(const Tensor4d& A, const Tensor4d& B);

  void extend(double sigma);
  int steps() const { return static_cast<int>(shifts_.size()); }
  bool deflated() const { return deflated_; }
  ArnoldiResult result() const;
  // The current result extended by one more step with `sigma`, leaving this
  // object unchanged. The shift factorization stays cached.
  ArnoldiResult closed(double sigma = 0.0);

 private:
  struct Step {
    MatD v_next;
    MatD h;  // (k+1)p x p coefficient column
    bool deflated = false;
  };
  Step compute(double sigma);
  void commit(Step step, double sigma);
  ArnoldiResult assemble(const MatD& V, const MatD& H,
                         const std::vector<double>& shifts, bool deflated) const;

  ShiftedSolver<double> solver_;
  Dims4 bdims_;  // dims of one block: (J1,J2,K1,K2)
  Index p_;
  MatD V_;
  MatD H_;
  std::vector<double> shifts_;
  bool deflated_ = false;
};

// Rational block Lanczos with full two-sided Gram-Schmidt against all previous
// blocks (two passes) and SVD-based bi-normalization of each new pair.
class RationalLanczos {
 public:
  // Without an initial pole the start blocks are B and C^T themselves, which
  // keeps B in range(V) and C^T in range(W).
  RationalLanczos(const Tensor4d& A, const Tensor4d& B, const Tensor4d& C,
                  std::optional<double> initial_pole = std::nullopt);

  void extend(double sigma);
  int steps() const { return static_cast<int>(shifts_.size()); }
  bool deflated() const { return deflated_; }
  LanczosResult result() const;
  LanczosResult closed(double sigma = 0.0);

  const MatD& op() const { return solver_.op(); }

 private:
  struct Step {
    MatD v_next, w_next;
    MatD h, g;
    bool deflated = false;
  };
  Step compute(double sigma);
  void commit(Step step, double sigma);
  LanczosResult assemble(const MatD& V, const MatD& W, const MatD& H,
                         const MatD& G, const std::vector<double>& shifts,
                         bool deflated) const;

  ShiftedSolver<double> solver_;
  Dims4 bdims_;
  Index p_;
  MatD V_, W_, H_, G_;
  std::vector<double> shifts_;
  bool deflated_ = false;
};

// Three-term nonsymmetric block Lanczos. With `reorthogonalize` each new pair
// is also projected against all previous blocks; the extra coefficients are
// kept in H_bar and G_bar, which are then no longer tridiagonal, so both
// recurrences still hold exactly.
class ClassicLanczos {
 public:
  ClassicLanczos(const Tensor4d& A, const Tensor4d& B, const Tensor4d& C,
                 bool reorthogonalize = false);

  void extend();
  int steps() const { return static_cast<int>(alpha_.size()); }
  bool deflated() const { return deflated_; }
  LanczosResult result() const;

 private:
  MatD A_;
  Dims4 bdims_;
  Index p_;
  MatD V_, W_;  // committed blocks V_1..V_{k+1}
  MatD v_tilde_, w_tilde_;
  std::vector<MatD> alpha_, beta_, delta_;  // beta_[j], delta_[j] couple blocks j+1, j+2
  std::vector<MatD> hx_, gx_;  // reorthogonalization coefficients, (j+1)p x p
  bool reorth_;
  bool deflated_ = false;
};

ArnoldiResult tba(const Tensor4d& A, const Tensor4d& B, int m);
LanczosResult tbl(const Tensor4d& A, const Tensor4d& B, const Tensor4d& C, int m);

ArnoldiResult trba(const Tensor4d& A, const Tensor4d& B,
                   const std::vector<double>& shifts, int m);
ArnoldiResult trba(const Tensor4d& A, const Tensor4d& B,
                   const std::function<double(const ArnoldiResult&)>& next_shift,
                   int m);

LanczosResult trbl(const Tensor4d& A, const Tensor4d& B, const Tensor4d& C,
                   const std::vector<double>& shifts, int m,
                   std::optional<double> initial_pole = std::nullopt);
LanczosResult trbl(const Tensor4d& A, const Tensor4d& B, const Tensor4d& C,
                   const std::function<double(const LanczosResult&)>& next_shift,
                   int m, std::optional<double> initial_pole = std::nullopt);

enum class Side { Primal, Dual };

// Gamma = left * right with left of size n x p and right of size p x mp. For a
// rational basis whose last shift is finite,
//   left  = (V_m W_m^T - I)(A - sigma_m I) V_{m+1},  right = H_{m+1,m} E_m^T H_m^{-1},
// so at sigma_m = 0 the correction is (V_m W_m^T - I) A V_{m+1} H_{m+1,m}
// E_m^T H_m^{-1}. An infinite last shift and the classic recurrences give
// left = V_{m+1}.
struct GammaFactors {
  MatD left;
  MatD right;
  MatD full() const { return left * right; }
};

GammaFactors gamma_factors(const ArnoldiResult& basis, const MatD& A);
GammaFactors gamma_factors(const LanczosResult& basis, const MatD& A,
                           Side side = Side::Primal);

Tensor4d gamma_correction(const ArnoldiResult& basis, const Tensor4d& A);
Tensor4d gamma_correction(const LanczosResult& basis, const Tensor4d& A,
                          Side side = Side::Primal);

// Leading m blocks of a basis tensor, as an n x mp matrix.
MatD leading_blocks(const Tensor4d& basis, int m, Index p);

}  // namespace mlti
