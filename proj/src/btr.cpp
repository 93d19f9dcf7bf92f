#include "mlti/btr.hpp"

#include <cmath>

namespace mlti {

MatD gramian_factor(const MatD& V, const MatD& X, double dtol) {
  Eigen::SelfAdjointEigenSolver<MatD> es(0.5 * (X + X.transpose()));
  const Eigen::VectorXd& lam = es.eigenvalues();  // ascending
  std::vector<Index> keep;
  for (Index i = lam.size() - 1; i >= 0; --i)
    if (lam(i) > dtol && lam(i) > 0) keep.push_back(i);
  MatD Z(V.rows(), static_cast<Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k)
    Z.col(k) = V * es.eigenvectors().col(keep[k]) * std::sqrt(lam(keep[k]));
  return Z;
}

BalancedReduction balance_from_factors(const MLTISystem& sys, const MatD& U,
                                       const MatD& L, const BTOptions& opts) {
  sys.validate();
  BalancedReduction out;
  Eigen::BDCSVD<MatD> svd(MatD(L.transpose() * U),
                          Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  out.hankel_values.assign(sv.data(), sv.data() + sv.size());
  if (sv.size() == 0 || !(sv(0) > 0)) throw Error("balanced truncation: zero Gramians");

  Index numerical = 0;
  while (numerical < sv.size() && sv(numerical) > 1e-14 * sv(0)) ++numerical;
  Index r;
  if (opts.r) {
    if (*opts.r < 1) throw ConfigError("retained order r must be positive");
    r = *opts.r;
    if (r > numerical) {
      out.warnings.push_back("r=" + std::to_string(r) + " exceeds numerical rank " +
                             std::to_string(numerical) + "; truncated");
      r = numerical;
    }
  } else {
    r = 0;
    while (r < numerical && sv(r) >= opts.sigma_tol * sv(0)) ++r;
  }
  out.r = static_cast<int>(r);

  const Eigen::VectorXd isq = sv.head(r).cwiseSqrt().cwiseInverse();
  const MatD Wr = L * svd.matrixU().leftCols(r) * isq.asDiagonal();
  const MatD Vr = U * svd.matrixV().leftCols(r) * isq.asDiagonal();
  const Dims4& b = sys.B.dims();
  const Dims4& c = sys.C.dims();
  out.V_r = fold(Vr, Dims4{b.J1, b.J2, 1, r});
  out.W_r = fold(Wr, Dims4{b.J1, b.J2, 1, r});
  out.A_r = fold(MatD(Wr.transpose() * (sys.A.unfold() * Vr)), Dims4{1, r, 1, r});
  out.B_r = fold(MatD(Wr.transpose() * sys.B.unfold()), Dims4{1, r, b.K1, b.K2});
  out.C_r = fold(MatD(sys.C.unfold() * Vr), Dims4{c.J1, c.J2, 1, r});
  return out;
}

namespace {

struct Factors {
  MatD U, L;
  bool converged;
};

Factors factors(const MLTISystem& sys, const LyapunovOptions& lyap) {
  const CoupledResult cr = solve_coupled(sys.A, sys.B, sys.C, lyap);
  return {gramian_factor(cr.V, cr.X, lyap.dtol), gramian_factor(cr.W, cr.Y, lyap.dtol),
          cr.converged};
}

}  // namespace

BalancedReduction balanced_truncate(const MLTISystem& sys, const BTOptions& opts) {
  sys.validate();
  if (check_stability(sys.A) != Stability::AsymptoticallyStable)
    throw Error("balanced truncation needs an asymptotically stable A");
  const Factors f = factors(sys, opts.lyap);
  BalancedReduction out = balance_from_factors(sys, f.U, f.L, opts);
  out.gramians_converged = f.converged;
  if (!f.converged) out.warnings.push_back("Gramian solves did not converge");
  return out;
}

std::vector<double> hankel_values(const MLTISystem& sys, const LyapunovOptions& lyap) {
  sys.validate();
  const Factors f = factors(sys, lyap);
  Eigen::BDCSVD<MatD> svd(MatD(f.L.transpose() * f.U));
  const Eigen::VectorXd& sv = svd.singularValues();
  return std::vector<double>(sv.data(), sv.data() + sv.size());
}

}  // namespace mlti
