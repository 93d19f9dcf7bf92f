#pragma once

// Seeded generators and reference algorithms on plain matrices. The
// references are deliberately naive (vector recurrences, explicit loops,
// Kronecker solves) so they share as little as possible with the library.

#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "mlti/mor.hpp"

namespace tst {

using mlti::cd;
using mlti::Dims4;
using mlti::Index;
using mlti::MatC;
using mlti::MatD;
using mlti::Tensor4d;

// xorshift64*; fixed across platforms, unlike the std distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : s_(seed * 0x9E3779B97F4A7C15ull + 0x1234567ull) {
    if (s_ == 0) s_ = 1;
  }
  std::uint64_t next() {
    s_ ^= s_ >> 12;
    s_ ^= s_ << 25;
    s_ ^= s_ >> 27;
    return s_ * 0x2545F4914F6CDD1Dull;
  }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  int integer(int lo, int hi) {  // inclusive
    return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1));
  }
  MatD matrix(Index r, Index c) {
    MatD m(r, c);
    for (Index j = 0; j < c; ++j)
      for (Index i = 0; i < r; ++i) m(i, j) = uniform(-1, 1);
    return m;
  }
  Tensor4d tensor(const Dims4& d) { return mlti::fold(matrix(d.rows(), d.cols()), d); }

 private:
  std::uint64_t s_;
};

// Nonnormal A with spectrum in Re z <= -1: R - (||R||_2 + 1) I.
inline MatD stable_matrix(Rng& g, Index n) {
  MatD R = g.matrix(n, n);
  const double nr = Eigen::JacobiSVD<MatD>(R).singularValues()(0);
  return R - (nr + 1.0) * MatD::Identity(n, n);
}

inline mlti::MLTISystem random_system(Rng& g, Index N1, Index N2, Index K1, Index K2) {
  const Index n = N1 * N2;
  mlti::MLTISystem s;
  s.A = mlti::fold(stable_matrix(g, n), Dims4{N1, N2, N1, N2});
  s.B = g.tensor(Dims4{N1, N2, K1, K2});
  s.C = g.tensor(Dims4{K1, K2, N1, N2});
  return s;
}

inline double rel(const MatD& a, const MatD& b) {
  const double d = std::max(b.norm(), 1e-300);
  return (a - b).norm() / d;
}
inline double rel(const MatC& a, const MatC& b) {
  const double d = std::max(b.norm(), 1e-300);
  return (a - b).norm() / d;
}

// Triple-loop product.
inline MatD naive_product(const MatD& a, const MatD& b) {
  MatD c = MatD::Zero(a.rows(), b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < b.cols(); ++j) {
      double s = 0;
      for (Index k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

// Modified Gram-Schmidt with reorthogonalization; R has a positive diagonal.
inline void mgs_qr(const MatD& a, MatD& q, MatD& r) {
  const Index n = a.rows(), p = a.cols();
  q = a;
  r = MatD::Zero(p, p);
  for (Index j = 0; j < p; ++j) {
    for (int pass = 0; pass < 2; ++pass)
      for (Index i = 0; i < j; ++i) {
        const double h = q.col(i).dot(q.col(j));
        q.col(j) -= h * q.col(i);
        r(i, j) += h;
      }
    r(j, j) = q.col(j).norm();
    q.col(j) /= r(j, j);
  }
  (void)n;
}

// y = (A - sigma I)^{-1} x by Gaussian elimination with full pivoting, or A x
// for sigma = inf.
inline Eigen::VectorXd apply_op(const MatD& A, double sigma, const Eigen::VectorXd& x,
                                bool transposed = false) {
  const MatD M = transposed ? MatD(A.transpose()) : A;
  if (!std::isfinite(sigma)) return M * x;
  MatD S = M - sigma * MatD::Identity(A.rows(), A.cols());
  return Eigen::FullPivLU<MatD>(S).solve(x);
}

// Vector Arnoldi (p = 1). Classic when all shifts are inf, rational
// otherwise; V_1 = b/||b||. Returns V (n x m+1), H ((m+1) x m) with
// op_j(v_j) = V h_j, and K with A V H = V K.
struct ArnoldiRef {
  MatD V, H, K;
};
inline ArnoldiRef arnoldi_ref(const MatD& A, const Eigen::VectorXd& b,
                              const std::vector<double>& shifts) {
  const Index n = A.rows();
  const Index m = static_cast<Index>(shifts.size());
  ArnoldiRef r;
  r.V = MatD::Zero(n, m + 1);
  r.H = MatD::Zero(m + 1, m);
  r.V.col(0) = b / b.norm();
  for (Index j = 0; j < m; ++j) {
    Eigen::VectorXd w = apply_op(A, shifts[j], r.V.col(j));
    for (int pass = 0; pass < 2; ++pass)
      for (Index i = 0; i <= j; ++i) {
        const double h = r.V.col(i).dot(w);
        w -= h * r.V.col(i);
        r.H(i, j) += h;
      }
    r.H(j + 1, j) = w.norm();
    r.V.col(j + 1) = w / r.H(j + 1, j);
  }
  r.K = MatD::Zero(m + 1, m);
  for (Index j = 0; j < m; ++j) {
    if (std::isfinite(shifts[j])) {
      r.K.col(j) = shifts[j] * r.H.col(j);
      r.K(j, j) += 1.0;
    }
  }
  return r;
}

// Two-sided vector Lanczos (p = 1) with full bi-orthogonalization. Each new
// pair is scaled to ||v|| = ||w|| and w^T v = 1. Returns V, W (n x m) and
// T = W^T A V.
struct LanczosRef {
  MatD V, W, T;
};
inline LanczosRef lanczos_ref(const MatD& A, const Eigen::VectorXd& b,
                              const Eigen::VectorXd& c, const std::vector<double>& shifts) {
  const Index n = A.rows();
  const Index m = static_cast<Index>(shifts.size());
  LanczosRef r;
  r.V = MatD::Zero(n, m + 1);
  r.W = MatD::Zero(n, m + 1);
  auto normalize = [&](Eigen::VectorXd v, Eigen::VectorXd w, Index k) {
    v /= v.norm();
    w /= w.norm();
    const double d = w.dot(v);
    r.V.col(k) = v / std::sqrt(std::abs(d));
    r.W.col(k) = w / (std::sqrt(std::abs(d)) * (d < 0 ? -1.0 : 1.0));
  };
  normalize(b, c, 0);
  for (Index j = 0; j < m; ++j) {
    Eigen::VectorXd v = apply_op(A, shifts[j], r.V.col(j));
    Eigen::VectorXd w = apply_op(A, shifts[j], r.W.col(j), true);
    for (int pass = 0; pass < 2; ++pass)
      for (Index i = 0; i <= j; ++i) {
        v -= r.W.col(i).dot(v) * r.V.col(i);
        w -= r.V.col(i).dot(w) * r.W.col(i);
      }
    normalize(v, w, j + 1);
  }
  r.T = r.W.leftCols(m).transpose() * A * r.V.leftCols(m);
  return r;
}

// True when b = D a D for a diagonal signature D.
inline bool equal_up_to_signature(const MatD& a, const MatD& b, double tol) {
  const Index n = a.rows();
  if (b.rows() != n || b.cols() != a.cols() || a.cols() != n) return false;
  std::vector<double> d(n, 0.0);
  d[0] = 1.0;
  for (Index j = 1; j < n; ++j) {
    Index best = 0;
    double mag = -1;
    for (Index i = 0; i < j; ++i) {
      const double v = std::abs(a(i, j)) + std::abs(a(j, i));
      if (v > mag) {
        mag = v;
        best = i;
      }
    }
    const double x = std::abs(a(best, j)) >= std::abs(a(j, best)) ? a(best, j) : a(j, best);
    const double y = std::abs(a(best, j)) >= std::abs(a(j, best)) ? b(best, j) : b(j, best);
    d[j] = (x * y >= 0 ? 1.0 : -1.0) * d[best];
  }
  MatD s = a;
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) s(i, j) *= d[i] * d[j];
  return (s - b).norm() <= tol * std::max(1.0, b.norm());
}

// A X + X A^T + Q = 0 through the n^2 x n^2 Kronecker system.
inline MatD kron_lyap(const MatD& A, const MatD& Q) {
  const Index n = A.rows();
  MatD K = MatD::Zero(n * n, n * n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      for (Index k = 0; k < n; ++k) {
        // vec(A X)[i + j n] += A(i,k) X(k,j); vec(X A^T)[i + j n] += X(i,k) A(j,k).
        K(i + j * n, k + j * n) += A(i, k);
        K(i + j * n, i + k * n) += A(j, k);
      }
  Eigen::VectorXd q = Eigen::Map<const Eigen::VectorXd>(Q.data(), n * n);
  Eigen::VectorXd x = Eigen::PartialPivLU<MatD>(K).solve(Eigen::VectorXd(-q));
  return Eigen::Map<const MatD>(x.data(), n, n);
}

// C (sI - A)^{-1} B by full-pivot elimination.
inline MatC transfer_ref(const MatD& A, const MatD& B, const MatD& C, cd s) {
  MatC M = -A.cast<cd>();
  M.diagonal().array() += s;
  return C.cast<cd>() * Eigen::FullPivLU<MatC>(M).solve(MatC(B.cast<cd>()));
}

}  // namespace tst
