#include "mlti/lyapunov.hpp"

#include <cmath>
#include <sstream>

namespace mlti {
namespace {

void check_options(const MLTISystem& sys, const LyapunovOptions& opts) {
  if (!(opts.eps > 0)) throw ConfigError("eps must be positive");
  if (!(opts.dtol >= 0)) throw ConfigError("dtol must be nonnegative");
  if (opts.m_max < 1) throw ConfigError("m_max must be positive");
  if (static_cast<Index>(opts.m_max) * sys.inputs() > sys.n())
    throw ConfigError("m_max*K1*K2 exceeds the state dimension");
  const double a = std::abs(opts.shift_interval.first);
  const double b = std::abs(opts.shift_interval.second);
  if (!(a > 0) || !(b > a)) throw ConfigError("shift interval must satisfy 0 < |a| < |b|");
}

// Adaptive TRBL loop shared by the single and coupled solvers. `step` sees
// the model closed at each iterate and returns true once converged.
bool rational_loop(const MLTISystem& sys, const LyapunovOptions& opts,
                   std::vector<double>& shifts, int& iterations,
                   const std::function<bool(const ResidualModel&, int)>& step) {
  RationalLanczos lan(sys.A, sys.B, sys.C);
  const double a = std::abs(opts.shift_interval.first);
  const double b = std::abs(opts.shift_interval.second);
  for (int it = 1; it <= opts.m_max; ++it) {
    const bool inv = lan.deflated();
    LanczosResult snap = inv ? lan.result() : lan.closed(0.0);
    ResidualModel model(sys, snap);
    iterations = it;
    shifts = snap.shifts;
    if (!inv) shifts.pop_back();
    if (step(model, it)) return true;
    // A deflated block basis cannot grow further. Partial deflation drops
    // directions, so the residual need not vanish there.
    if (inv || it == opts.m_max) return false;
    double sigma;
    if (it == 1) {
      sigma = std::sqrt(a * b);
    } else {
      const std::vector<double> c = candidate_shifts(model.reduced().A_m.unfold());
      sigma = next_shift(model, std::vector<cd>(c.begin(), c.end()));
    }
    lan.extend(sigma);
  }
  return false;
}

LowRankSolution truncate(const MatD& Y, const MatD& V, Index J1, Index J2, double dtol) {
  return truncate_lowrank(fold(Y, Dims4{1, Y.rows(), 1, Y.cols()}),
                          fold(V, Dims4{J1, J2, 1, V.cols()}), dtol);
}

}  // namespace

Tensor4d LowRankSolution::dense() const {
  const Dims4& d = Z1.dims();
  return fold(MatD(Z1.unfold() * Z2.unfold().transpose()), Dims4{d.J1, d.J2, d.J1, d.J2});
}

MatD dense_lyap_solve(const MatD& T, const MatD& Q) {
  const Index n = T.rows();
  if (T.cols() != n || Q.rows() != n || Q.cols() != n)
    throw DimensionError("dense_lyap_solve: T and Q must be square of equal size");
  if (n == 0) return MatD(0, 0);

  Eigen::ComplexSchur<MatC> schur(T.cast<cd>());
  const MatC& U = schur.matrixU();
  const MatC& S = schur.matrixT();
  const double scale = std::max(T.cwiseAbs().maxCoeff(), 1e-300);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      const cd d = S(i, i) + std::conj(S(j, j));
      if (std::abs(d) <= 1e-13 * scale) {
        std::ostringstream os;
        os << "Lyapunov operator singular: lambda_i + conj(lambda_j) = " << d;
        throw SingularPencilError(os.str());
      }
    }
  }

  const MatC Qt = U.adjoint() * Q.cast<cd>() * U;
  MatC Yt(n, n);
  MatC M(n, n);
  for (Index j = n - 1; j >= 0; --j) {
    Eigen::VectorXcd rhs = -Qt.col(j);
    const Index tail = n - j - 1;
    if (tail > 0)
      rhs -= Yt.rightCols(tail) * S.row(j).tail(tail).conjugate().transpose();
    M = S;
    M.diagonal().array() += std::conj(S(j, j));
    Yt.col(j) = M.triangularView<Eigen::Upper>().solve(rhs);
  }
  MatD Y = (U * Yt * U.adjoint()).real();
  if ((Q - Q.transpose()).norm() <= 1e-12 * Q.norm()) Y = 0.5 * (Y + Y.transpose());
  return Y;
}

Tensor4d dense_lyap_solve(const Tensor4d& T, const Tensor4d& Q) {
  if (!T.dims().square() || !(T.dims() == Q.dims()))
    throw DimensionError("dense_lyap_solve: dims " + T.dims().str() + " and " +
                         Q.dims().str());
  return fold(dense_lyap_solve(T.unfold(), Q.unfold()), T.dims());
}

double gamma_bound(const MatD& left, const MatD& right, const MatD& Y, const MatD& Vm) {
  const MatD M = right * Y;
  const MatD G = left.transpose() * left;
  const MatD K = M * (Vm.transpose() * Vm) * M.transpose();
  const double t = G.cwiseProduct(K.transpose()).sum();
  return 2.0 * std::sqrt(std::max(t, 0.0));
}

double residual_norm_bound(const LanczosResult& basis, const Tensor4d& Y,
                           const Tensor4d& A) {
  const GammaFactors gf = gamma_factors(basis, A.unfold());
  const Index mp = gf.right.cols();
  if (Y.unfold().rows() != mp || Y.unfold().cols() != mp)
    throw DimensionError("residual_norm_bound: Y does not match the basis");
  return gamma_bound(gf.left, gf.right, Y.unfold(), basis.V.unfold().leftCols(mp));
}

double lyapunov_residual(const MatD& A, const MatD& X, const MatD& BBt) {
  return (A * X + X * A.transpose() + BBt).norm();
}

LowRankSolution truncate_lowrank(const Tensor4d& Yt, const Tensor4d& Vt, double dtol) {
  const MatD& Y = Yt.unfold();
  const Index k = Y.rows();
  if (Y.cols() != k) throw DimensionError("truncate_lowrank: Y must be square");
  if (Vt.unfold().cols() < k)
    throw DimensionError("truncate_lowrank: basis narrower than Y");
  const MatD V = Vt.unfold().leftCols(k);
  Eigen::BDCSVD<MatD> svd(Y, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  Index r = 0;
  while (r < sv.size() && sv(r) >= dtol && sv(r) > 0) ++r;
  const Eigen::VectorXd sq = sv.head(r).cwiseSqrt();
  LowRankSolution out;
  out.rank = static_cast<int>(r);
  out.dtol = dtol;
  const Dims4 zd{Vt.dims().J1, Vt.dims().J2, 1, r};
  out.Z1 = fold(MatD(V * svd.matrixU().leftCols(r) * sq.asDiagonal()), zd);
  out.Z2 = fold(MatD(V * svd.matrixV().leftCols(r) * sq.asDiagonal()), zd);
  return out;
}

LyapunovResult solve_lyapunov_rational(const Tensor4d& A, const Tensor4d& B,
                                       const Tensor4d& C, const LyapunovOptions& opts,
                                       const LyapunovObserver& observer) {
  const MLTISystem sys{A, B, C};
  sys.validate();
  check_options(sys, opts);
  const double nb = (B.unfold().transpose() * B.unfold()).norm();
  LyapunovResult out;
  out.converged = rational_loop(
      sys, opts, out.shifts, out.iterations, [&](const ResidualModel& model, int it) {
        const ReducedSystem& red = model.reduced();
        const MatD& Bm = red.B_m.unfold();
        out.Y = dense_lyap_solve(red.A_m.unfold(), MatD(Bm * Bm.transpose()));
        out.V = red.V.unfold();
        out.W = red.W->unfold();
        const double bound = gamma_bound(model.b_tilde(), model.b_prefactor(), out.Y, out.V);
        if (observer) observer({it, out.V, out.W, out.Y, bound});
        out.bounds.push_back(bound / nb);
        return bound <= opts.eps * nb;
      });
  out.solution = truncate(out.Y, out.V, A.dims().J1, A.dims().J2, opts.dtol);
  out.solution.residual_bound = out.bounds.back();
  return out;
}

LyapunovResult solve_lyapunov_classic(const Tensor4d& A, const Tensor4d& B,
                                      const Tensor4d& C, const LyapunovOptions& opts,
                                      const LyapunovObserver& observer) {
  const MLTISystem sys{A, B, C};
  sys.validate();
  check_options(sys, opts);
  const Index p = sys.inputs();
  const double nb = (B.unfold().transpose() * B.unfold()).norm();
  // Without reorthogonalization the two-sided recurrence loses
  // bi-orthogonality long before the residual drops to eps on
  // non-normal operators.
  ClassicLanczos lan(A, B, C, true);
  LyapunovResult out;
  for (int it = 1; it <= opts.m_max; ++it) {
    lan.extend();
    const LanczosResult r = lan.result();
    out.iterations = it;
    out.V = leading_blocks(r.V, r.m, p);
    out.W = leading_blocks(r.W, r.m, p);
    const MatD Bm = out.W.transpose() * B.unfold();
    out.Y = dense_lyap_solve(r.T_m.unfold(), MatD(Bm * Bm.transpose()));
    const GammaFactors gf = gamma_factors(r, A.unfold());
    const double bound = gamma_bound(gf.left, gf.right, out.Y, out.V);
    if (observer) observer({it, out.V, out.W, out.Y, bound});
    out.bounds.push_back(bound / nb);
    out.converged = bound <= opts.eps * nb;
    if (out.converged || lan.deflated()) break;
  }
  out.solution = truncate(out.Y, out.V, A.dims().J1, A.dims().J2, opts.dtol);
  out.solution.residual_bound = out.bounds.back();
  return out;
}

CoupledResult solve_coupled(const Tensor4d& A, const Tensor4d& B, const Tensor4d& C,
                            const LyapunovOptions& opts) {
  const MLTISystem sys{A, B, C};
  sys.validate();
  check_options(sys, opts);
  const double nb = (B.unfold().transpose() * B.unfold()).norm();
  const double nc = (C.unfold() * C.unfold().transpose()).norm();
  CoupledResult out;
  double bp = 0, bq = 0;
  out.converged = rational_loop(
      sys, opts, out.shifts, out.iterations, [&](const ResidualModel& model, int) {
        const ReducedSystem& red = model.reduced();
        const MatD& T = red.A_m.unfold();
        const MatD& Bm = red.B_m.unfold();
        const MatD& Cm = red.C_m.unfold();
        out.V = red.V.unfold();
        out.W = red.W->unfold();
        out.X = dense_lyap_solve(T, MatD(Bm * Bm.transpose()));
        out.Y = dense_lyap_solve(MatD(T.transpose()), MatD(Cm.transpose() * Cm));
        bp = gamma_bound(model.b_tilde(), model.b_prefactor(), out.X, out.V) / nb;
        bq = gamma_bound(model.c_tilde().transpose(), model.c_prefactor(), out.Y, out.W) / nc;
        return bp <= opts.eps && bq <= opts.eps;
      });
  const Index J1 = A.dims().J1, J2 = A.dims().J2;
  out.P = truncate(out.X, out.V, J1, J2, opts.dtol);
  out.Q = truncate(out.Y, out.W, J1, J2, opts.dtol);
  out.P.residual_bound = bp;
  out.Q.residual_bound = bq;
  return out;
}

}  // namespace mlti
