#include "mlti/mor.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace mlti {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

MatC to_c(const MatD& m) { return m.cast<cd>(); }

double spectral_norm(const MatC& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<MatC> svd(m);
  return svd.singularValues()(0);
}

Eigen::PartialPivLU<MatC> resolvent_lu(const MatD& A, cd s) {
  MatC M = to_c(-A);
  M.diagonal().array() += s;
  return detail::checked_lu<cd>(M, s);
}

Dims4 reduced_dims(const Dims4& b, int m) {
  return Dims4{b.K1, b.K2 * m, b.K1, b.K2 * m};
}

void check_basis(const MLTISystem& sys, const Tensor4d& V, int m) {
  const Dims4& d = V.dims();
  const Dims4& b = sys.B.dims();
  if (d.J1 != b.J1 || d.J2 != b.J2 || d.K1 != b.K1 || d.K2 % b.K2 != 0 ||
      d.K2 / b.K2 < m || m < 1)
    throw DimensionError("basis " + d.str() + " not conformal with B " + b.str());
}

ReducedSystem project_impl(const MLTISystem& sys, const Tensor4d& Vt,
                           const Tensor4d* Wt, int m) {
  sys.validate();
  check_basis(sys, Vt, m);
  const Dims4& b = sys.B.dims();
  const Index p = sys.inputs();
  const MatD Vm = leading_blocks(Vt, m, p);
  const MatD Wm = Wt ? leading_blocks(*Wt, m, p) : Vm;
  const MatD& A = sys.A.unfold();
  ReducedSystem red;
  red.m = m;
  const Dims4 rd = reduced_dims(b, m);
  red.A_m = fold(MatD(Wm.transpose() * (A * Vm)), rd);
  red.B_m = fold(MatD(Wm.transpose() * sys.B.unfold()), Dims4{rd.J1, rd.J2, b.K1, b.K2});
  const Dims4& c = sys.C.dims();
  red.C_m = fold(MatD(sys.C.unfold() * Vm), Dims4{c.J1, c.J2, rd.K1, rd.K2});
  const Dims4 vd{b.J1, b.J2, b.K1, b.K2 * m};
  red.V = fold(Vm, vd);
  if (Wt) red.W = fold(Wm, vd);
  return red;
}

}  // namespace

void MLTISystem::validate() const {
  const Dims4& a = A.dims();
  if (!a.square()) throw DimensionError("A must be square, got " + a.str());
  if (B.dims().J1 != a.K1 || B.dims().J2 != a.K2)
    throw DimensionError("B " + B.dims().str() + " not conformal with A " + a.str());
  if (C.dims().K1 != a.J1 || C.dims().K2 != a.J2)
    throw DimensionError("C " + C.dims().str() + " not conformal with A " + a.str());
}

// ---------------------------------------------------------------- resolvent

Resolvent::Resolvent(const MatD& M, bool with_transpose) {
  if (M.rows() != M.cols()) throw DimensionError("Resolvent: square operator required");
  if (M.rows() == 0) {
    scale_ = 0;
    return;
  }
  Eigen::HessenbergDecomposition<MatD> h(M);
  H_ = h.matrixH();
  Q_ = h.matrixQ();
  if (with_transpose) {
    Eigen::HessenbergDecomposition<MatD> ht(MatD(M.transpose()));
    Ht_ = ht.matrixH();
    Qt_ = ht.matrixQ();
  }
  scale_ = M.cwiseAbs().maxCoeff();
}

// Gaussian elimination on sI - H; partial pivoting only ever swaps a row with
// its successor.
MatC Resolvent::solve_hessenberg(cd s, const MatD& H, MatC rhs) const {
  const Index n = H.rows();
  MatC U = to_c(-H);
  U.diagonal().array() += s;
  const double tiny = 1e-14 * (std::abs(s) + scale_);
  for (Index k = 0; k < n; ++k) {
    if (k + 1 < n && std::abs(U(k + 1, k)) > std::abs(U(k, k))) {
      U.row(k).tail(n - k).swap(U.row(k + 1).tail(n - k));
      rhs.row(k).swap(rhs.row(k + 1));
    }
    const cd piv = U(k, k);
    if (!(std::abs(piv) > tiny)) {
      std::ostringstream os;
      os << "sI - A singular at s=" << s;
      throw SingularError(os.str(), s, std::abs(piv) / (std::abs(s) + scale_));
    }
    if (k + 1 < n) {
      const cd l = U(k + 1, k) / piv;
      U.row(k + 1).tail(n - k - 1) -= l * U.row(k).tail(n - k - 1);
      U(k + 1, k) = 0.0;
      rhs.row(k + 1) -= l * rhs.row(k);
    }
  }
  U.triangularView<Eigen::Upper>().solveInPlace(rhs);
  return rhs;
}

MatC Resolvent::solve(cd s, const MatD& X) const {
  if (X.rows() != size()) throw DimensionError("Resolvent: wrong row count");
  return Q_ * solve_hessenberg(s, H_, to_c(Q_.transpose() * X));
}

MatC Resolvent::solve_transposed(cd s, const MatD& X) const {
  if (X.rows() != size()) throw DimensionError("Resolvent: wrong row count");
  if (Qt_.rows() != size()) throw Error("Resolvent: built without the transposed factorization");
  return Qt_ * solve_hessenberg(s, Ht_, to_c(Qt_.transpose() * X));
}

MatC Resolvent::sandwich(cd s, const MatD& C, const MatD& B) const {
  return to_c(C) * solve(s, B);
}

// ---------------------------------------------------------------- transfer

Tensor4c eval_transfer(const MLTISystem& sys, cd s) {
  sys.validate();
  auto lu = resolvent_lu(sys.A.unfold(), s);
  MatC F = to_c(sys.C.unfold()) * lu.solve(to_c(sys.B.unfold()));
  return fold<cd>(std::move(F), Dims4{sys.C.dims().J1, sys.C.dims().J2,
                                      sys.B.dims().K1, sys.B.dims().K2});
}

Tensor4c eval_transfer(const ReducedSystem& red, cd s) {
  return eval_transfer(red.system(), s);
}

ReducedSystem project(const MLTISystem& sys, const ArnoldiResult& basis) {
  return project_impl(sys, basis.V, nullptr, basis.m);
}

ReducedSystem project(const MLTISystem& sys, const LanczosResult& basis) {
  return project_impl(sys, basis.V, &basis.W, basis.m);
}

// ---------------------------------------------------------------- residuals

ResidualModel::ResidualModel(const MLTISystem& sys, const ArnoldiResult& basis)
    : sys_(&sys), red_(project(sys, basis)), res_m_(red_.A_m.unfold()) {
  p_ = sys.inputs();
  q_ = sys.outputs();
  const MatD& A = sys.A.unfold();
  GammaFactors gf = gamma_factors(basis, A);
  Bt_ = std::move(gf.left);
  LB_ = std::move(gf.right);
  Ct_ = sys.C.unfold();
  const MatD& V1 = basis.V.unfold();
  finish(V1, V1, basis.shifts.empty() ? kInfiniteShift : basis.shifts.back());
}

ResidualModel::ResidualModel(const MLTISystem& sys, const LanczosResult& basis)
    : sys_(&sys), red_(project(sys, basis)), res_m_(red_.A_m.unfold()) {
  two_sided_ = true;
  p_ = sys.inputs();
  q_ = sys.outputs();
  const MatD& A = sys.A.unfold();
  GammaFactors gp = gamma_factors(basis, A, Side::Primal);
  GammaFactors gd = gamma_factors(basis, A, Side::Dual);
  Bt_ = std::move(gp.left);
  LB_ = std::move(gp.right);
  Ct_ = gd.left.transpose();
  LC_ = std::move(gd.right);
  const double last = basis.shifts.empty() ? kInfiniteShift : basis.shifts.back();
  finish(basis.V.unfold(), basis.W.unfold(), last);
}

void ResidualModel::finish(const MatD& V1, const MatD& W1, double last_shift) {
  const MatD& A = sys_->A.unfold();
  const MatD vnext = V1.rightCols(p_);
  const MatD Av1 = A * V1;
  y_ = std::isfinite(last_shift) ? MatD(Av1.rightCols(p_) - last_shift * vnext) : vnext;
  res_m1_.emplace(MatD(W1.transpose() * Av1), false);
  CtV1_ = Ct_ * V1;
  W1Bt_ = W1.transpose() * Bt_;
}

MatC ResidualModel::rb_tilde(cd s) const {
  return to_c(LB_) * res_m_.solve(s, red_.B_m.unfold());
}

MatC ResidualModel::rc_tilde(cd s) const {
  if (!two_sided_) throw BoundUnavailableError("Rtilde_C needs a two-sided basis");
  return to_c(LC_) * res_m_.solve_transposed(s, red_.C_m.unfold().transpose());
}

MatC ResidualModel::h_tilde_m(cd s) const {
  return res_m1_->sandwich(s, CtV1_, W1Bt_);
}

MatC ResidualModel::h_tilde(cd s) const {
  auto lu = resolvent_lu(sys_->A.unfold(), s);
  return to_c(Ct_) * lu.solve(to_c(Bt_));
}

double ResidualModel::estimate(int kind, cd s, const MatC* h) const {
  if (kind < 1 || kind > 6) throw ConfigError("estimator kind must be in 1..6");
  if (!two_sided_ && (kind == 2 || kind == 5 || kind == 6)) {
    throw BoundUnavailableError("estimator kind " + std::to_string(kind) +
                                " needs a two-sided basis");
  }
  auto H = [&]() { return h ? *h : h_tilde_m(s); };
  switch (kind) {
    case 1:
      return rb_tilde(s).norm();
    case 2:
      return rc_tilde(s).norm();
    case 3:
      return (H() * rb_tilde(s)).norm();
    case 4:
      return H().norm();
    case 5:
      return (rc_tilde(s).transpose() * H()).norm();
    default:
      return (rc_tilde(s).transpose() * H() * rb_tilde(s)).norm();
  }
}

double ResidualModel::shift_objective(cd s) const {
  if (two_sided_) return (rc_tilde(s).transpose() * rb_tilde(s)).norm();
  return rb_tilde(s).norm();
}

ResidualFactors residual_factors(const MLTISystem& sys, const LanczosResult& basis,
                                 cd s) {
  ResidualModel model(sys, basis);
  const Dims4& b = sys.B.dims();
  const Dims4& c = sys.C.dims();
  ResidualFactors f;
  f.B_tilde = fold(model.b_tilde(), b);
  f.R_B_tilde = fold<cd>(model.rb_tilde(s), Dims4{b.K1, b.K2, b.K1, b.K2});
  f.C_tilde = fold(model.c_tilde(), c);
  f.R_C_tilde = fold<cd>(model.rc_tilde(s), Dims4{b.K1, b.K2, c.J1, c.J2});
  return f;
}

Tensor4c residual_b(const MLTISystem& sys, const ReducedSystem& red, cd s) {
  auto lu = resolvent_lu(red.A_m.unfold(), s);
  const MatC X = lu.solve(to_c(red.B_m.unfold()));
  const MatD& V = red.V.unfold();
  const MatC VX = to_c(V) * X;
  MatC R = to_c(sys.B.unfold()) - s * VX + to_c(sys.A.unfold()) * VX;
  return fold<cd>(std::move(R), sys.B.dims());
}

Tensor4c residual_c(const MLTISystem& sys, const ReducedSystem& red, cd s) {
  auto lu = resolvent_lu(red.A_m.unfold(), s);
  const MatC X = detail::lu_solve_transposed<cd>(lu, to_c(red.C_m.unfold().transpose()));
  const MatD& W = red.W ? red.W->unfold() : red.V.unfold();
  const MatC WX = to_c(W) * X;
  MatC R = to_c(sys.C.unfold().transpose()) - s * WX +
           to_c(sys.A.unfold().transpose()) * WX;
  return fold<cd>(std::move(R), sys.C.dims().transposed());
}

Tensor4c exact_error_identity(const MLTISystem& sys, const ReducedSystem& red, cd s) {
  const MatC RB = residual_b(sys, red, s).unfold();
  const MatC RC = residual_c(sys, red, s).unfold();
  auto lu = resolvent_lu(sys.A.unfold(), s);
  MatC E = RC.transpose() * lu.solve(RB);
  return fold<cd>(std::move(E), Dims4{sys.C.dims().J1, sys.C.dims().J2,
                                      sys.B.dims().K1, sys.B.dims().K2});
}

double error_estimate(int kind, const ResidualModel& model, cd s) {
  return model.estimate(kind, s);
}

double error_bound(const MLTISystem& sys, const ResidualModel& model, cd s) {
  auto lu = resolvent_lu(sys.A.unfold(), s);
  // ||C (sI-A)^{-1}|| = ||(sI-A)^{-T} C^T||.
  const double left =
      detail::lu_solve_transposed<cd>(lu, to_c(sys.C.unfold().transpose())).norm();
  const double right = (to_c(model.last_direction()) * model.rb_tilde(s)).norm();
  return left * right;
}

double error_bound_arnoldi(const MLTISystem& sys, const ArnoldiResult& basis, cd s) {
  return error_bound(sys, ResidualModel(sys, basis), s);
}

// ---------------------------------------------------------------- shifts

std::vector<double> log_space(double a, double b, int count) {
  std::vector<double> out(count);
  if (count == 1) {
    out[0] = a;
    return out;
  }
  const double la = std::log10(a), lb = std::log10(b);
  for (int i = 0; i < count; ++i)
    out[i] = std::pow(10.0, la + (lb - la) * i / (count - 1));
  return out;
}

std::vector<double> candidate_shifts(const MatD& A_m) {
  if (A_m.rows() == 0) throw NoCandidateError("candidate set needs a nonempty A_m");
  Eigen::EigenSolver<MatD> es(A_m, false);
  const Eigen::VectorXd mags = es.eigenvalues().cwiseAbs();
  double a = mags.minCoeff(), b = mags.maxCoeff();
  if (!(b > 0)) throw NoCandidateError("A_m is zero; no spectral interval");
  if (a < 1e-12 * b) a = 1e-12 * b;
  if (b < a * (1.0 + 1e-8)) {
    a /= 10;
    b *= 10;
  }
  return log_space(a, b, kCandidateCount);
}

double next_shift(const ResidualModel& model, const std::vector<cd>& candidates) {
  double best = -1;
  cd arg;
  for (const cd& c : candidates) {
    double v;
    try {
      v = model.shift_objective(c);
    } catch (const SingularError&) {
      continue;
    }
    if (std::isfinite(v) && v > best) {
      best = v;
      arg = c;
    }
  }
  if (best < 0) throw NoCandidateError("no admissible shift candidate");
  return arg.real();
}

// ---------------------------------------------------------------- adaptive

namespace {

double max_estimate(const ResidualModel& model, int kind,
                    const std::vector<double>& cands) {
  double worst = 0;
  for (double c : cands) worst = std::max(worst, model.estimate(kind, cd(0, std::abs(c))));
  return worst;
}

template <class Krylov>
AdaptiveResult adaptive_loop(const MLTISystem& sys, const AdaptiveOptions& opts,
                             Krylov& kr, int kind) {
  const double a = std::abs(opts.shift_interval.first);
  const double b = std::abs(opts.shift_interval.second);
  AdaptiveResult out;
  for (int it = 1; it <= opts.m_max; ++it) {
    auto snap = kr.deflated() ? kr.result() : kr.closed(0.0);
    ResidualModel model(sys, snap);
    const std::vector<double> cands = candidate_shifts(model.reduced().A_m.unfold());
    AdaptiveStep step;
    step.m = model.m();
    step.estimate = max_estimate(model, kind, cands);
    step.next_shift = kNaN;
    out.reduced = model.reduced();
    out.shifts = snap.shifts;
    if (!kr.deflated()) out.shifts.pop_back();  // the closing step is not committed
    const bool done = step.estimate <= opts.tol;
    if (done || kr.deflated() || it == opts.m_max) {
      out.converged = done;
      out.history.push_back(step);
      break;
    }
    double sigma;
    if (it == 1) {
      sigma = std::sqrt(a * b);
    } else {
      std::vector<cd> cs(cands.begin(), cands.end());
      sigma = next_shift(model, cs);
    }
    step.next_shift = sigma;
    out.history.push_back(step);
    kr.extend(sigma);
  }
  return out;
}

}  // namespace

AdaptiveResult adaptive_reduce(const MLTISystem& sys, const AdaptiveOptions& opts) {
  sys.validate();
  const Index p = sys.inputs();
  if (opts.m_max < 1) throw ConfigError("m_max must be positive");
  if (static_cast<Index>(opts.m_max) * p > sys.n())
    throw ConfigError("m_max*K1*K2 exceeds the state dimension");
  if (!(opts.tol > 0)) throw ConfigError("tol must be positive");
  const double a = std::abs(opts.shift_interval.first);
  const double b = std::abs(opts.shift_interval.second);
  if (!(a > 0) || !(b > a)) throw ConfigError("shift interval must satisfy 0 < |a| < |b|");

  if (opts.method == ReduceMethod::TRBA) {
    const int kind = opts.estimator == 0 ? 3 : opts.estimator;
    if (kind == 2 || kind == 5 || kind == 6)
      throw ConfigError("estimator kind " + std::to_string(kind) + " needs TRBL");
    BlockArnoldi arn(sys.A, sys.B);
    return adaptive_loop(sys, opts, arn, kind);
  }
  const int kind = opts.estimator == 0 ? 6 : opts.estimator;
  RationalLanczos lan(sys.A, sys.B, sys.C);
  return adaptive_loop(sys, opts, lan, kind);
}

// ---------------------------------------------------------------- stability

Stability check_stability(const Tensor4d& A) {
  const std::vector<cd> ev = eigenvalues(A);
  double rho = 0;
  for (const cd& l : ev) rho = std::max(rho, std::abs(l));
  const double tol = 1e-10 * std::max(1.0, rho);
  bool all_negative = true;
  for (std::size_t i = 0; i < ev.size(); ++i) {
    const double re = ev[i].real();
    if (re > tol) return Stability::Unstable;
    if (re < -tol) continue;
    all_negative = false;
    // Eigenvalues on the imaginary axis must be simple.
    for (std::size_t j = 0; j < ev.size(); ++j) {
      if (j != i && std::abs(ev[j] - ev[i]) <= 1e-8 * std::max(1.0, rho))
        return Stability::Unstable;
    }
  }
  return all_negative ? Stability::AsymptoticallyStable : Stability::Stable;
}

const char* to_string(Stability s) {
  switch (s) {
    case Stability::AsymptoticallyStable:
      return "asymptotically_stable";
    case Stability::Stable:
      return "stable";
    default:
      return "unstable";
  }
}

std::vector<FrequencySample> freq_sweep(const MLTISystem& sys,
                                        const ReducedSystem& red,
                                        const std::vector<double>& omegas) {
  sys.validate();
  const Resolvent full(sys.A.unfold(), false);
  const Resolvent small(red.A_m.unfold(), false);
  const MatD& B = sys.B.unfold();
  const MatD& C = sys.C.unfold();
  std::vector<FrequencySample> out;
  out.reserve(omegas.size());
  for (double w : omegas) {
    const cd s(0, w);
    const MatC F = full.sandwich(s, C, B);
    const MatC Fm = small.sandwich(s, red.C_m.unfold(), red.B_m.unfold());
    out.push_back({w, spectral_norm(F), spectral_norm(Fm), spectral_norm(F - Fm)});
  }
  return out;
}

}  // namespace mlti
