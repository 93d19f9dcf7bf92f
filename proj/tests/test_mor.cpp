#include <gtest/gtest.h>

#include "mlti/generators.hpp"
#include "support.hpp"

using namespace mlti;
using tst::Rng;

namespace {

Tensor4d t4(const MatD& m, Index J1, Index J2) { return fold(m, Dims4{J1, J2, J1, J2}); }

MatD far_stable(Rng& g, Index n) {
  return tst::stable_matrix(g, n) - 3.0 * MatD::Identity(n, n);
}

// Block-diagonal A whose leading 2x2 block is invariant for A and A^T; B and
// C^T live in it, so every Krylov basis deflates after two vectors.
MLTISystem invariant_system() {
  MatD A = MatD::Zero(4, 4);
  A.topLeftCorner(2, 2) << -2, 1, 0, -3;
  A.bottomRightCorner(2, 2) << -1, 0.5, -0.5, -4;
  MatD b = MatD::Zero(4, 1), c = MatD::Zero(1, 4);
  b(0, 0) = 1;
  b(1, 0) = 0.5;
  c(0, 0) = 1;
  c(0, 1) = -0.25;
  return {t4(A, 2, 2), fold(b, Dims4{2, 2, 1, 1}), fold(c, Dims4{1, 1, 2, 2})};
}

// (LB) (sI - A_m)^{-1} B_m with LB = H_{m+1,m} E_m^T H_m^{-1}; all shifts finite.
MatC rb_tilde_ref(const LanczosResult& r, const MatD& Bm, Index p, cd s, bool dual = false) {
  const MatD& H = dual ? r.G_bar.unfold() : r.H_bar.unfold();
  const Index mp = H.cols();
  const MatD Hm = H.topRows(mp);
  MatD right = H.bottomRows(p) * Hm.inverse();
  MatD T = r.T_m.unfold();
  if (dual) T.transposeInPlace();
  MatC M = -T.cast<cd>();
  M.diagonal().array() += s;
  return right.cast<cd>() * M.inverse() * Bm.cast<cd>();
}

}  // namespace

TEST(Transfer, DiagonalClosedForm) {
  const Eigen::Vector4d a(-1, -2, -0.5, -3);
  const MLTISystem sys{fold(MatD(a.asDiagonal()), Dims4{2, 2, 2, 2}),
                       Tensor4d::identity(2, 2), Tensor4d::identity(2, 2)};
  const cd s(0.3, 2.0);
  const MatC F = eval_transfer(sys, s).unfold();
  for (Index i = 0; i < 4; ++i) EXPECT_LT(std::abs(F(i, i) - 1.0 / (s - a(i))), 1e-15);
  EXPECT_LT((F - MatC(F.diagonal().asDiagonal())).norm(), 1e-15);
}

TEST(Transfer, DecaysAtInfinity) {
  Rng g(1);
  const MLTISystem sys = tst::random_system(g, 2, 2, 1, 1);
  EXPECT_LT(fro_norm(eval_transfer(sys, cd(1e8, 0))), 1e-7);
}

TEST(Transfer, MatchesReference) {
  Rng g(2);
  const MLTISystem sys = tst::random_system(g, 2, 2, 1, 1);
  const cd s(0, 1);
  const MatC ref = tst::transfer_ref(sys.A.unfold(), sys.B.unfold(), sys.C.unfold(), s);
  EXPECT_LT(tst::rel(eval_transfer(sys, s).unfold(), ref), 1e-13);
}

TEST(Project, FullBasisPreservesSpectrum) {
  Rng g(3);
  const MLTISystem sys = tst::random_system(g, 2, 3, 1, 2);
  const ArnoldiResult r = tba(sys.A, sys.B, 3);
  const ReducedSystem red = project(sys, r);
  auto sorted = [](std::vector<cd> v) {
    std::sort(v.begin(), v.end(), [](cd a, cd b) {
      return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    return v;
  };
  const auto e1 = sorted(eigenvalues(red.A_m));
  const auto e2 = sorted(eigenvalues(sys.A));
  ASSERT_EQ(e1.size(), e2.size());
  for (std::size_t i = 0; i < e1.size(); ++i) EXPECT_LT(std::abs(e1[i] - e2[i]), 1e-10);
}

TEST(Project, StartBlockReconstructsB) {
  Rng g(4);
  const MLTISystem sys = tst::random_system(g, 3, 3, 1, 2);
  const ReducedSystem red = project(sys, tba(sys.A, sys.B, 2));
  EXPECT_LT((red.V.unfold() * red.B_m.unfold() - sys.B.unfold()).norm(), 1e-13);
  EXPECT_EQ(red.A_m.dims(), (Dims4{1, 4, 1, 4}));
}

TEST(Project, MatchesMatrixProjection) {
  Rng g(5);
  const MLTISystem sys = tst::random_system(g, 3, 3, 1, 2);
  const LanczosResult r = trbl(sys.A, sys.B, sys.C, {0.5, 2.0}, 2);
  const ReducedSystem red = project(sys, r);
  const MatD V = r.V.unfold().leftCols(4), W = r.W.unfold().leftCols(4);
  EXPECT_LT(tst::rel(red.A_m.unfold(), W.transpose() * sys.A.unfold() * V), 1e-11);
  EXPECT_LT(tst::rel(red.B_m.unfold(), W.transpose() * sys.B.unfold()), 1e-11);
  EXPECT_LT(tst::rel(red.C_m.unfold(), sys.C.unfold() * V), 1e-11);
}

TEST(ErrorBound, ZeroOnDeflatedBasis) {
  const MLTISystem sys = invariant_system();
  const ArnoldiResult r = trba(sys.A, sys.B, {0.0, 0.0, 0.0}, 3);
  ASSERT_TRUE(r.deflated);
  const ReducedSystem red = project(sys, r);
  for (double w : {0.1, 1.0, 10.0}) {
    const cd s(0, w);
    EXPECT_LT(error_bound_arnoldi(sys, r, s), 1e-10);
    EXPECT_LT((eval_transfer(sys, s).unfold() - eval_transfer(red, s).unfold()).norm(), 1e-10);
  }
}

TEST(ErrorBound, DominatesExactErrorAndScalesWithB) {
  Rng g(6);
  for (int trial = 0; trial < 3; ++trial) {
    MLTISystem sys = tst::random_system(g, 2, 2, 1, 1);
    const ArnoldiResult r = trba(sys.A, sys.B, {0.7, 0.0}, 2);
    const ReducedSystem red = project(sys, r);
    for (double w : log_space(1e-2, 1e2, 20)) {
      const cd s(0, w);
      const double err =
          (eval_transfer(sys, s).unfold() - eval_transfer(red, s).unfold()).norm();
      EXPECT_GE(error_bound_arnoldi(sys, r, s) * (1 + 1e-10), err);
    }
    const cd s(0, 0.9);
    const double b1 = error_bound_arnoldi(sys, r, s);
    MLTISystem sys2 = sys;
    sys2.B = 2.0 * sys.B;
    const double b2 = error_bound_arnoldi(sys2, trba(sys2.A, sys2.B, {0.7, 0.0}, 2), s);
    EXPECT_NEAR(b2, 2 * b1, 1e-12 * b1);
  }
}

TEST(Residual, PetrovGalerkinAndReconstruction) {
  Rng g(7);
  const MLTISystem sys = tst::random_system(g, 3, 3, 1, 2);
  const LanczosResult r = trbl(sys.A, sys.B, sys.C, {0.5, 1.5, 0.0}, 3);
  const ReducedSystem red = project(sys, r);
  const MatD W = red.W->unfold(), V = red.V.unfold();
  for (double w : {0.05, 0.7, 4.0}) {
    const cd s(0, w);
    const MatC RB = residual_b(sys, red, s).unfold();
    const MatC RC = residual_c(sys, red, s).unfold();
    EXPECT_LT((W.transpose().cast<cd>() * RB).norm(), 1e-8);
    EXPECT_LT((V.transpose().cast<cd>() * RC).norm(), 1e-8);
    const ResidualFactors f = residual_factors(sys, r, s);
    const MatC rec_b = f.B_tilde.unfold().cast<cd>() * f.R_B_tilde.unfold();
    const MatC rec_c = f.C_tilde.unfold().transpose().cast<cd>() * f.R_C_tilde.unfold();
    EXPECT_LT(tst::rel(rec_b, RB), 1e-9);
    EXPECT_LT(tst::rel(rec_c, RC), 1e-9);
  }
}

TEST(Residual, VanishesOnDeflatedBasis) {
  const MLTISystem sys = invariant_system();
  const LanczosResult r = trbl(sys.A, sys.B, sys.C, {0.0, 0.0, 0.0}, 3);
  ASSERT_TRUE(r.deflated);
  const ResidualModel model(sys, r);
  const ReducedSystem red = project(sys, r);
  for (double w : {0.1, 3.0}) {
    const cd s(0, w);
    EXPECT_LT(model.rb_tilde(s).norm(), 1e-12);
    EXPECT_LT(exact_error_identity(sys, red, s).unfold().norm(), 1e-12);
    EXPECT_LT(error_estimate(1, model, s), 1e-12);
  }
}

TEST(ErrorIdentity, MatchesTransferDifferenceAndFactorization) {
  Rng g(8);
  for (int trial = 0; trial < 3; ++trial) {
    const MLTISystem sys = tst::random_system(g, 2, 2, 1, 1);
    const LanczosResult r = trbl(sys.A, sys.B, sys.C, {0.0}, 1);
    const ReducedSystem red = project(sys, r);
    const ResidualModel model(sys, r);
    for (double w : {1.0, 0.2, 6.0}) {
      const cd s(0, w);
      const MatC diff = tst::transfer_ref(sys.A.unfold(), sys.B.unfold(), sys.C.unfold(), s) -
                        tst::transfer_ref(red.A_m.unfold(), red.B_m.unfold(),
                                          red.C_m.unfold(), s);
      EXPECT_LT((exact_error_identity(sys, red, s).unfold() - diff).norm(),
                1e-8 * std::max(1.0, diff.norm()));
      const MatC h = model.h_tilde(s);
      const MatC fact = model.rc_tilde(s).transpose() * h * model.rb_tilde(s);
      EXPECT_LT((fact - diff).norm(), 1e-8 * std::max(1.0, diff.norm()));
      EXPECT_NEAR(model.estimate(6, s, &h), diff.norm(), 1e-8 * std::max(1.0, diff.norm()));
    }
  }
}

TEST(Estimator, KindOneMatchesDirectFormula) {
  Rng g(9);
  const MLTISystem sys = tst::random_system(g, 3, 3, 1, 2);
  const LanczosResult r = trbl(sys.A, sys.B, sys.C, {0.5, 0.0}, 2);
  const ResidualModel model(sys, r);
  const MatD Bm = model.reduced().B_m.unfold();
  const MatD Cm = model.reduced().C_m.unfold();
  for (double w : {0.01, 0.3, 30.0}) {
    const cd s(0, w);
    EXPECT_NEAR(error_estimate(1, model, s), rb_tilde_ref(r, Bm, 2, s).norm(),
                1e-10 * std::max(1.0, rb_tilde_ref(r, Bm, 2, s).norm()));
    const MatC rc = rb_tilde_ref(r, MatD(Cm.transpose()), 2, s, true);
    EXPECT_LT((model.rc_tilde(s) - rc).norm(), 1e-10 * std::max(1.0, rc.norm()));
  }
}

TEST(Estimator, OneSidedKindsAreRestricted) {
  Rng g(10);
  const MLTISystem sys = tst::random_system(g, 3, 3, 1, 2);
  const ResidualModel model(sys, trba(sys.A, sys.B, {0.5, 0.0}, 2));
  EXPECT_THROW(model.estimate(6, cd(0, 1)), BoundUnavailableError);
  EXPECT_THROW(model.estimate(2, cd(0, 1)), BoundUnavailableError);
  EXPECT_THROW(model.estimate(7, cd(0, 1)), ConfigError);
  EXPECT_GE(model.estimate(3, cd(0, 1)), 0.0);
}

TEST(NextShift, SingletonAndScaleInvariance) {
  Rng g(11);
  MLTISystem sys = tst::random_system(g, 3, 3, 1, 2);
  sys.A = fold(far_stable(g, 9), sys.A.dims());
  const LanczosResult r = trbl(sys.A, sys.B, sys.C, {0.5, 0.0}, 2);
  const ResidualModel model(sys, r);
  EXPECT_EQ(next_shift(model, {cd(-2.5, 0.75)}), -2.5);

  const std::vector<cd> cands = {cd(-1), cd(-2), cd(-4), cd(-8), cd(-0.5)};
  MLTISystem sys10 = sys;
  sys10.B = 10.0 * sys.B;
  const LanczosResult r10 = trbl(sys10.A, sys10.B, sys10.C, {0.5, 0.0}, 2);
  EXPECT_EQ(next_shift(model, cands), next_shift(ResidualModel(sys10, r10), cands));
}

TEST(NextShift, EqualsExhaustiveArgmax) {
  Rng g(12);
  for (int trial = 0; trial < 5; ++trial) {
    MLTISystem sys = tst::random_system(g, 3, 3, 1, 2);
    sys.A = fold(far_stable(g, 9), sys.A.dims());
    const LanczosResult r = trbl(sys.A, sys.B, sys.C, {0.5, 0.0}, 2);
    const ResidualModel model(sys, r);
    const MatD Bm = model.reduced().B_m.unfold();
    const MatD CmT = model.reduced().C_m.unfold().transpose();
    const std::vector<double> cands = {-1, -2, -4};
    double best = -1, arg = 0;
    for (double c : cands) {
      const cd s(c, 0);
      const double v = (rb_tilde_ref(r, CmT, 2, s, true).transpose() * rb_tilde_ref(r, Bm, 2, s))
                           .norm();
      if (v > best) {
        best = v;
        arg = c;
      }
    }
    EXPECT_EQ(next_shift(model, {cd(-1), cd(-2), cd(-4)}), arg);
  }
}

TEST(NextShift, NoAdmissibleCandidate) {
  const MLTISystem sys = invariant_system();
  const LanczosResult r = trbl(sys.A, sys.B, sys.C, {0.0, 0.0, 0.0}, 3);
  const ResidualModel model(sys, r);
  const cd pole = eigenvalues(model.reduced().A_m)[0];
  EXPECT_THROW(next_shift(model, {pole}), NoCandidateError);
}

TEST(Candidates, PositiveLogSpaced) {
  MatD Am(2, 2);
  Am << -1, 0, 0, -100;
  const auto c = candidate_shifts(Am);
  ASSERT_EQ(c.size(), static_cast<std::size_t>(kCandidateCount));
  EXPECT_NEAR(c.front(), 1.0, 1e-12);
  EXPECT_NEAR(c.back(), 100.0, 1e-10);
  for (std::size_t i = 1; i < c.size(); ++i) EXPECT_GT(c[i], c[i - 1]);
  // A single eigenvalue magnitude is widened by a decade each way.
  const auto w = candidate_shifts(-2.0 * MatD::Identity(3, 3));
  EXPECT_NEAR(w.front(), 0.2, 1e-12);
  EXPECT_NEAR(w.back(), 20.0, 1e-10);
}

TEST(Adaptive, InfiniteToleranceStopsAtOneStep) {
  Rng g(13);
  const MLTISystem sys = tst::random_system(g, 3, 3, 1, 2);
  AdaptiveOptions o;
  o.tol = std::numeric_limits<double>::infinity();
  o.m_max = 4;
  for (ReduceMethod m : {ReduceMethod::TRBA, ReduceMethod::TRBL}) {
    o.method = m;
    const AdaptiveResult r = adaptive_reduce(sys, o);
    EXPECT_TRUE(r.converged);
    EXPECT_EQ(r.history.size(), 1u);
    EXPECT_EQ(r.reduced.m, 1);
  }
}

TEST(Adaptive, AmbientDimensionGivesZeroEstimate) {
  Rng g(14);
  const MLTISystem sys = tst::random_system(g, 2, 3, 1, 2);
  AdaptiveOptions o;
  o.tol = 1e-300;
  o.m_max = 3;
  const AdaptiveResult r = adaptive_reduce(sys, o);
  EXPECT_LE(r.history.back().estimate, 1e-8);
}

TEST(Adaptive, SpdiagsReachesTolerance) {
  const MLTISystem sys = gen_spdiags(20, 1, 2, 1);
  AdaptiveOptions o;
  o.tol = 1e-6;
  o.m_max = 10;
  const AdaptiveResult r = adaptive_reduce(sys, o);
  EXPECT_TRUE(r.converged);
  EXPECT_LE(r.reduced.m, 10);
  double worst = 0;
  for (const auto& f : freq_sweep(sys, r.reduced, log_space(1e-2, 1e2, 100)))
    worst = std::max(worst, f.error);
  EXPECT_LE(worst, 1e-6);
  for (double s : r.shifts) EXPECT_TRUE(std::isfinite(s));
}

TEST(Adaptive, RejectsBadOptions) {
  Rng g(15);
  const MLTISystem sys = tst::random_system(g, 2, 2, 1, 1);
  AdaptiveOptions o;
  o.m_max = 5;
  EXPECT_THROW(adaptive_reduce(sys, o), ConfigError);
  o.m_max = 2;
  o.method = ReduceMethod::TRBA;
  o.estimator = 6;
  EXPECT_THROW(adaptive_reduce(sys, o), ConfigError);
}

TEST(Stability, Classification) {
  const MatD I = MatD::Identity(4, 4);
  EXPECT_EQ(check_stability(fold(MatD(-I), Dims4{2, 2, 2, 2})), Stability::AsymptoticallyStable);
  MatD z = -I;
  z(2, 2) = 0;
  EXPECT_EQ(check_stability(fold(z, Dims4{2, 2, 2, 2})), Stability::Stable);
  MatD u = -I;
  u(1, 1) = 0.5;
  EXPECT_EQ(check_stability(fold(u, Dims4{2, 2, 2, 2})), Stability::Unstable);
  MatD zz = -I;
  zz(0, 0) = zz(3, 3) = 0;
  zz(0, 3) = 1;  // nilpotent Jordan pair on the axis
  EXPECT_EQ(check_stability(fold(zz, Dims4{2, 2, 2, 2})), Stability::Unstable);
}

TEST(FreqSweep, FullBasisIsExact) {
  Rng g(16);
  const MLTISystem sys = tst::random_system(g, 2, 2, 1, 2);
  const ReducedSystem red = project(sys, trbl(sys.A, sys.B, sys.C, {0.3, 0.0}, 2));
  const auto rows = freq_sweep(sys, red, log_space(1e-2, 1e2, 17));
  ASSERT_EQ(rows.size(), 17u);
  for (const auto& f : rows) {
    EXPECT_LE(f.error, 1e-8);
    const MatC F = tst::transfer_ref(sys.A.unfold(), sys.B.unfold(), sys.C.unfold(), cd(0, f.omega));
    EXPECT_NEAR(f.norm_full, Eigen::JacobiSVD<MatC>(F).singularValues()(0), 1e-12 * f.norm_full);
  }
}
