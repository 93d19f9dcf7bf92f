#include "mlti/krylov.hpp"

#include <cmath>
#include <sstream>

namespace mlti {
namespace {

bool is_finite_shift(double s) { return std::isfinite(s); }

Dims4 basis_dims(const Dims4& b, Index blocks) {
  return Dims4{b.J1, b.J2, b.K1, b.K2 * blocks};
}

Dims4 hessenberg_dims(const Dims4& b, Index m) {
  return Dims4{b.K1, b.K2 * (m + 1), b.K1, b.K2 * m};
}

Dims4 square_block_dims(const Dims4& b, Index m) {
  return Dims4{b.K1, b.K2 * m, b.K1, b.K2 * m};
}

void check_system(const Tensor4d& A, const Tensor4d& B) {
  const Dims4& a = A.dims();
  const Dims4& b = B.dims();
  if (!a.square())
    throw DimensionError("Krylov: operator must be square, got " + a.str());
  if (a.K1 != b.J1 || a.K2 != b.J2)
    throw DimensionError("Krylov: B dims " + b.str() + " not conformal with A " +
                         a.str());
}

void check_output(const Tensor4d& A, const Tensor4d& C) {
  const Dims4& a = A.dims();
  const Dims4& c = C.dims();
  if (c.J1 * c.J2 == 0 || c.K1 != a.J1 || c.K2 != a.J2)
    throw DimensionError("Krylov: C dims " + c.str() + " not conformal with A " +
                         a.str());
}

void check_steps(const Dims4& b, int m) {
  if (m < 1) throw DimensionError("Krylov: need at least one step");
  if (static_cast<Index>(m) * b.cols() > b.rows())
    throw DimensionError("Krylov: m*K1*K2 exceeds J1*J2");
}

// Rank test on a freshly orthogonalized block. `before` is the norm of the
// block prior to Gram-Schmidt; a block that lost essentially everything is an
// invariant-subspace signal even when its R diagonal looks well scaled.
enum class Rank { Full, Partial, None };

Rank classify(const MatD& r, double after, double before) {
  if (after <= kDeflationTol * before || after == 0.0) return Rank::None;
  const auto d = r.diagonal().cwiseAbs();
  if (d.minCoeff() < kDeflationTol * d.maxCoeff()) return Rank::Partial;
  return Rank::Full;
}

// Pencil pair with A V_{m+1} Hp = V_{m+1} Kp. A finite shift gives the column
// pair (h_j, e_j + sigma_j h_j), an infinite one (e_j, h_j).
// Missing shifts (classic recurrences) count as infinite.
void pencil(const MatD& H, const std::vector<double>& shifts, Index p, MatD& Hp,
            MatD& Kp) {
  const Index mp = H.cols();
  const Index m = mp / p;
  Hp = H;
  Kp = MatD::Zero(H.rows(), mp);
  for (Index j = 0; j < m; ++j) {
    double s = static_cast<std::size_t>(j) < shifts.size() ? shifts[j] : kInfiniteShift;
    auto hcol = H.middleCols(j * p, p);
    if (is_finite_shift(s)) {
      Kp.middleCols(j * p, p) = s * hcol;
      Kp.block(j * p, j * p, p, p) += MatD::Identity(p, p);
    } else {
      Hp.middleCols(j * p, p).setZero();
      Hp.block(j * p, j * p, p, p) = MatD::Identity(p, p);
      Kp.middleCols(j * p, p) = hcol;
    }
  }
}

// Solves X * Hp_top = rhs, failing if the pencil block is singular.
MatD right_divide(const MatD& rhs, const MatD& top) {
  Eigen::PartialPivLU<MatD> lu(top.transpose());
  double rc = lu.rcond();
  if (!(rc > detail::kSingularRcond)) {
    std::ostringstream os;
    os << "H_m is singular (rcond " << rc << ")";
    throw BoundUnavailableError(os.str());
  }
  return lu.solve(rhs.transpose()).transpose();
}

MatD pencil_k_bar(const MatD& H, const std::vector<double>& shifts, Index p) {
  MatD Hp, Kp;
  pencil(H, shifts, p, Hp, Kp);
  return Kp;
}

bool all_finite(const std::vector<double>& s) {
  for (double x : s)
    if (!is_finite_shift(x)) return false;
  return true;
}

// Bi-normalizes a freshly orthonormalized pair (Qv, Qw) with coefficient
// blocks (Rv, Rw): afterwards Qw^T Qv = I and Qv*Rv, Qw*Rw are unchanged.
void binormalize(MatD& qv, MatD& qw, MatD& rv, MatD& rw, int step) {
  Eigen::JacobiSVD<MatD> svd(qw.transpose() * qv,
                             Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::VectorXd d = svd.singularValues();
  if (!(d.minCoeff() > kBreakdownTol * d.maxCoeff())) {
    std::ostringstream os;
    os << "Lanczos breakdown at step " << step << ": sigma_min(W^T V) = "
       << d.minCoeff() << ", sigma_max = " << d.maxCoeff();
    throw BreakdownError(os.str(), step);
  }
  const Eigen::VectorXd sq = d.cwiseSqrt();
  const Eigen::VectorXd isq = sq.cwiseInverse();
  const MatD& P = svd.matrixU();
  const MatD& Q = svd.matrixV();
  qv = qv * Q * isq.asDiagonal();
  qw = qw * P * isq.asDiagonal();
  rv = sq.asDiagonal() * Q.transpose() * rv;
  rw = sq.asDiagonal() * P.transpose() * rw;
}

}  // namespace

MatD leading_blocks(const Tensor4d& basis, int m, Index p) {
  return basis.unfold().leftCols(static_cast<Index>(m) * p);
}

// ---------------------------------------------------------------- Arnoldi

BlockArnoldi::BlockArnoldi(const Tensor4d& A, const Tensor4d& B)
    : solver_(A.unfold()), bdims_(B.dims()), p_(B.dims().cols()) {
  check_system(A, B);
  if (p_ == 0 || bdims_.rows() < p_)
    throw DimensionError("Arnoldi: needs 0 < K1*K2 <= J1*J2");
  MatD q, r;
  dense::qr_thin<double>(B.unfold(), q, r);
  V_ = q;
  H_ = MatD::Zero(p_, 0);
  const double bn = B.unfold().norm();
  if (classify(r, r.norm(), bn) != Rank::Full)
    throw DimensionError("Arnoldi: starting block is rank deficient");
}

BlockArnoldi::Step BlockArnoldi::compute(double sigma) {
  if (deflated_) throw Error("Arnoldi: basis already deflated");
  const Index k = V_.cols() / p_;  // committed blocks
  const auto vk = V_.rightCols(p_);
  Step st;
  MatD w = is_finite_shift(sigma) ? solver_.solve(sigma, vk) : MatD(solver_.op() * vk);
  const double before = w.norm();
  st.h = MatD::Zero((k + 1) * p_, p_);
  for (Index i = 0; i < k; ++i) {
    auto vi = V_.middleCols(i * p_, p_);
    MatD hij = vi.transpose() * w;
    w -= vi * hij;
    st.h.middleRows(i * p_, p_) = hij;
  }
  MatD h2 = V_.transpose() * w;
  w -= V_ * h2;
  st.h.topRows(k * p_) += h2;

  MatD q, r;
  dense::qr_thin<double>(w, q, r);
  Rank rank = classify(r, w.norm(), before);
  if (rank == Rank::None) {
    q.setZero();
    r.setZero();
  }
  st.deflated = rank != Rank::Full;
  st.v_next = std::move(q);
  st.h.bottomRows(p_) = r;
  return st;
}

void BlockArnoldi::commit(Step st, double sigma) {
  const Index k = V_.cols() / p_;
  V_.conservativeResize(Eigen::NoChange, (k + 1) * p_);
  V_.rightCols(p_) = st.v_next;
  MatD H = MatD::Zero((k + 1) * p_, k * p_);
  H.topLeftCorner(H_.rows(), H_.cols()) = H_;
  H.rightCols(p_) = st.h;
  H_ = std::move(H);
  shifts_.push_back(sigma);
  deflated_ = st.deflated;
}

void BlockArnoldi::extend(double sigma) { commit(compute(sigma), sigma); }

ArnoldiResult BlockArnoldi::assemble(const MatD& V, const MatD& H,
                                     const std::vector<double>& shifts,
                                     bool deflated) const {
  ArnoldiResult res;
  const Index m = H.cols() / p_;
  res.m = static_cast<int>(m);
  res.V = fold(V, basis_dims(bdims_, m + 1));
  res.H_bar = fold(H, hessenberg_dims(bdims_, m));
  res.shifts = shifts;
  res.rational = all_finite(shifts) && !shifts.empty();
  if (res.rational) res.K_bar = fold(pencil_k_bar(H, shifts, p_), res.H_bar.dims());
  res.deflated = deflated;
  return res;
}

ArnoldiResult BlockArnoldi::result() const {
  return assemble(V_, H_, shifts_, deflated_);
}

ArnoldiResult BlockArnoldi::closed(double sigma) {
  Step st = compute(sigma);
  const Index k = V_.cols() / p_;
  MatD V(V_.rows(), (k + 1) * p_);
  V << V_, st.v_next;
  MatD H = MatD::Zero((k + 1) * p_, k * p_);
  H.topLeftCorner(H_.rows(), H_.cols()) = H_;
  H.rightCols(p_) = st.h;
  auto shifts = shifts_;
  shifts.push_back(sigma);
  return assemble(V, H, shifts, st.deflated);
}

// ---------------------------------------------------------------- rational Lanczos

RationalLanczos::RationalLanczos(const Tensor4d& A, const Tensor4d& B,
                                 const Tensor4d& C,
                                 std::optional<double> initial_pole)
    : solver_(A.unfold()), bdims_(B.dims()), p_(B.dims().cols()) {
  check_system(A, B);
  check_output(A, C);
  if (C.dims().rows() != p_)
    throw DimensionError("Lanczos: B and C^T must have the same block size");
  MatD s0 = B.unfold();
  MatD r0 = C.unfold().transpose();
  if (initial_pole) {
    s0 = solver_.solve(*initial_pole, s0);
    r0 = solver_.solve(*initial_pole, r0, true);
  }
  MatD qv, rv, qw, rw;
  dense::qr_thin<double>(s0, qv, rv);
  dense::qr_thin<double>(r0, qw, rw);
  if (classify(rv, rv.norm(), s0.norm()) != Rank::Full ||
      classify(rw, rw.norm(), r0.norm()) != Rank::Full)
    throw DimensionError("Lanczos: starting block is rank deficient");
  binormalize(qv, qw, rv, rw, 0);
  V_ = qv;
  W_ = qw;
  H_ = MatD::Zero(p_, 0);
  G_ = MatD::Zero(p_, 0);
}

RationalLanczos::Step RationalLanczos::compute(double sigma) {
  if (deflated_) throw Error("Lanczos: basis already deflated");
  const Index k = V_.cols() / p_;
  const auto vk = V_.rightCols(p_);
  const auto wk = W_.rightCols(p_);
  MatD s, r;
  if (is_finite_shift(sigma)) {
    s = solver_.solve(sigma, vk);
    r = solver_.solve(sigma, wk, true);
  } else {
    s = solver_.op() * vk;
    r = solver_.op().transpose() * wk;
  }
  const double sb = s.norm(), rb = r.norm();

  Step st;
  st.h = W_.transpose() * s;
  s -= V_ * st.h;
  st.g = V_.transpose() * r;
  r -= W_ * st.g;
  // Second pass: oblique projections lose bi-orthogonality faster than
  // orthogonal ones.
  MatD h2 = W_.transpose() * s;
  s -= V_ * h2;
  st.h += h2;
  MatD g2 = V_.transpose() * r;
  r -= W_ * g2;
  st.g += g2;

  MatD qv, rv, qw, rw;
  dense::qr_thin<double>(s, qv, rv);
  dense::qr_thin<double>(r, qw, rw);
  Rank rank_v = classify(rv, s.norm(), sb);
  Rank rank_w = classify(rw, r.norm(), rb);
  if (rank_v == Rank::None) {
    qv.setZero();
    rv.setZero();
  }
  if (rank_w == Rank::None) {
    qw.setZero();
    rw.setZero();
  }
  if (rank_v == Rank::Full && rank_w == Rank::Full) {
    binormalize(qv, qw, rv, rw, static_cast<int>(k));
  } else {
    st.deflated = true;
  }
  st.v_next = std::move(qv);
  st.w_next = std::move(qw);
  st.h.conservativeResize((k + 1) * p_, Eigen::NoChange);
  st.g.conservativeResize((k + 1) * p_, Eigen::NoChange);
  st.h.bottomRows(p_) = rv;
  st.g.bottomRows(p_) = rw;
  return st;
}

void RationalLanczos::commit(Step st, double sigma) {
  const Index k = V_.cols() / p_;
  V_.conservativeResize(Eigen::NoChange, (k + 1) * p_);
  W_.conservativeResize(Eigen::NoChange, (k + 1) * p_);
  V_.rightCols(p_) = st.v_next;
  W_.rightCols(p_) = st.w_next;
  MatD H = MatD::Zero((k + 1) * p_, k * p_);
  MatD G = MatD::Zero((k + 1) * p_, k * p_);
  H.topLeftCorner(H_.rows(), H_.cols()) = H_;
  G.topLeftCorner(G_.rows(), G_.cols()) = G_;
  H.rightCols(p_) = st.h;
  G.rightCols(p_) = st.g;
  H_ = std::move(H);
  G_ = std::move(G);
  shifts_.push_back(sigma);
  deflated_ = st.deflated;
}

void RationalLanczos::extend(double sigma) { commit(compute(sigma), sigma); }

LanczosResult RationalLanczos::assemble(const MatD& V, const MatD& W,
                                        const MatD& H, const MatD& G,
                                        const std::vector<double>& shifts,
                                        bool deflated) const {
  LanczosResult res;
  const Index m = H.cols() / p_;
  const Index mp = m * p_;
  res.m = static_cast<int>(m);
  res.V = fold(V, basis_dims(bdims_, m + 1));
  res.W = fold(W, basis_dims(bdims_, m + 1));
  res.H_bar = fold(H, hessenberg_dims(bdims_, m));
  res.G_bar = fold(G, hessenberg_dims(bdims_, m));
  res.shifts = shifts;
  res.rational = true;
  res.deflated = deflated;
  if (all_finite(shifts)) {
    res.K_bar = fold(pencil_k_bar(H, shifts, p_), res.H_bar.dims());
    res.L_bar = fold(pencil_k_bar(G, shifts, p_), res.G_bar.dims());
  }

  if (m == 0) {
    res.T_m = fold(MatD(0, 0), square_block_dims(bdims_, 0));
    return res;
  }
  // T_m = [K_m - W_m^T A V_{m+1} H_{m+1,m} E_m^T] H_m^{-1}, in pencil form.
  MatD Hp, Kp;
  pencil(H, shifts, p_, Hp, Kp);
  const MatD& A = solver_.op();
  const auto Vm = V.leftCols(mp);
  const auto Wm = W.leftCols(mp);
  MatD rhs = Kp.topRows(mp) - (Wm.transpose() * (A * V.rightCols(p_))) * Hp.bottomRows(p_);
  try {
    res.T_m = fold(right_divide(rhs, Hp.topRows(mp)), square_block_dims(bdims_, m));
  } catch (const BoundUnavailableError&) {
    res.pencil_ok = false;
    res.T_m = fold(MatD(Wm.transpose() * (A * Vm)), square_block_dims(bdims_, m));
  }
  return res;
}

LanczosResult RationalLanczos::result() const {
  return assemble(V_, W_, H_, G_, shifts_, deflated_);
}

LanczosResult RationalLanczos::closed(double sigma) {
  Step st = compute(sigma);
  const Index k = V_.cols() / p_;
  MatD V(V_.rows(), (k + 1) * p_), W(W_.rows(), (k + 1) * p_);
  V << V_, st.v_next;
  W << W_, st.w_next;
  MatD H = MatD::Zero((k + 1) * p_, k * p_);
  MatD G = MatD::Zero((k + 1) * p_, k * p_);
  H.topLeftCorner(H_.rows(), H_.cols()) = H_;
  G.topLeftCorner(G_.rows(), G_.cols()) = G_;
  H.rightCols(p_) = st.h;
  G.rightCols(p_) = st.g;
  auto shifts = shifts_;
  shifts.push_back(sigma);
  return assemble(V, W, H, G, shifts, st.deflated);
}

// ---------------------------------------------------------------- classic Lanczos

ClassicLanczos::ClassicLanczos(const Tensor4d& A, const Tensor4d& B,
                               const Tensor4d& C, bool reorthogonalize)
    : A_(A.unfold()), bdims_(B.dims()), p_(B.dims().cols()), reorth_(reorthogonalize) {
  check_system(A, B);
  check_output(A, C);
  if (C.dims().rows() != p_)
    throw DimensionError("Lanczos: B and C^T must have the same block size");
  // Balanced start: orthonormalize B and C^T separately, then split W^T V
  // symmetrically as in the later steps. A QR of C*B alone would give
  // V_1 != W_1 in the symmetric case.
  const MatD s0 = B.unfold(), r0 = C.unfold().transpose();
  MatD qv, rv, qw, rw;
  dense::qr_thin<double>(s0, qv, rv);
  dense::qr_thin<double>(r0, qw, rw);
  if (classify(rv, rv.norm(), s0.norm()) != Rank::Full ||
      classify(rw, rw.norm(), r0.norm()) != Rank::Full)
    throw DimensionError("Lanczos: starting block is rank deficient");
  binormalize(qv, qw, rv, rw, 0);
  V_ = qv;
  W_ = qw;
  v_tilde_ = A_ * V_;
  w_tilde_ = A_.transpose() * W_;
}

void ClassicLanczos::extend() {
  if (deflated_) throw Error("Lanczos: basis already deflated");
  const Index j = V_.cols() / p_ - 1;  // current block V_{j+1}, 0-based j
  const auto vj = V_.rightCols(p_);
  const auto wj = W_.rightCols(p_);
  const double vb = v_tilde_.norm(), wb = w_tilde_.norm();

  MatD alpha = wj.transpose() * v_tilde_;
  v_tilde_ -= vj * alpha;
  w_tilde_ -= wj * alpha.transpose();
  alpha_.push_back(alpha);
  if (reorth_) {
    MatD h2 = W_.transpose() * v_tilde_;
    v_tilde_ -= V_ * h2;
    MatD g2 = V_.transpose() * w_tilde_;
    w_tilde_ -= W_ * g2;
    hx_.push_back(std::move(h2));
    gx_.push_back(std::move(g2));
  }

  MatD qv, beta, qw, delta_t;
  dense::qr_thin<double>(v_tilde_, qv, beta);
  dense::qr_thin<double>(w_tilde_, qw, delta_t);
  MatD delta = delta_t.transpose();
  Rank rank_v = classify(beta, v_tilde_.norm(), vb);
  Rank rank_w = classify(delta_t, w_tilde_.norm(), wb);
  if (rank_v == Rank::None) {
    qv.setZero();
    beta.setZero();
  }
  if (rank_w == Rank::None) {
    qw.setZero();
    delta.setZero();
  }
  if (rank_v == Rank::Full && rank_w == Rank::Full) {
    // W^T V = U S Z^T; delta <- delta U S^{1/2}, beta <- S^{1/2} Z^T beta.
    MatD delta_tt = delta.transpose();
    binormalize(qv, qw, beta, delta_tt, static_cast<int>(j + 1));
    delta = delta_tt.transpose();
  } else {
    deflated_ = true;
  }
  beta_.push_back(beta);
  delta_.push_back(delta);

  const Index k = V_.cols();
  V_.conservativeResize(Eigen::NoChange, k + p_);
  W_.conservativeResize(Eigen::NoChange, k + p_);
  V_.rightCols(p_) = qv;
  W_.rightCols(p_) = qw;
  if (!deflated_) {
    v_tilde_ = A_ * qv - V_.middleCols(j * p_, p_) * delta;
    w_tilde_ = A_.transpose() * qw - W_.middleCols(j * p_, p_) * beta.transpose();
  }
}

LanczosResult ClassicLanczos::result() const {
  const Index m = static_cast<Index>(alpha_.size());
  const Index mp = m * p_;
  MatD T = MatD::Zero(mp, mp);
  for (Index i = 0; i < m; ++i) {
    T.block(i * p_, i * p_, p_, p_) = alpha_[i];
    if (i + 1 < m) {
      T.block((i + 1) * p_, i * p_, p_, p_) = beta_[i];
      T.block(i * p_, (i + 1) * p_, p_, p_) = delta_[i];
    }
  }
  MatD H = MatD::Zero(mp + p_, mp), G = MatD::Zero(mp + p_, mp);
  H.topRows(mp) = T;
  G.topRows(mp) = T.transpose();
  for (std::size_t j = 0; j < hx_.size() && static_cast<Index>(j) < m; ++j) {
    const Index rows = hx_[j].rows();
    H.block(0, j * p_, rows, p_) += hx_[j];
    G.block(0, j * p_, rows, p_) += gx_[j];
  }
  if (reorth_) T = H.topRows(mp);
  if (m > 0) {
    H.bottomRightCorner(p_, p_) = beta_.back();
    G.bottomRightCorner(p_, p_) = delta_.back().transpose();
  }
  LanczosResult res;
  res.m = static_cast<int>(m);
  res.V = fold(MatD(V_.leftCols(mp + p_)), basis_dims(bdims_, m + 1));
  res.W = fold(MatD(W_.leftCols(mp + p_)), basis_dims(bdims_, m + 1));
  res.H_bar = fold(H, hessenberg_dims(bdims_, m));
  res.G_bar = fold(G, hessenberg_dims(bdims_, m));
  res.T_m = fold(T, square_block_dims(bdims_, m));
  res.rational = false;
  res.deflated = deflated_;
  return res;
}

// ---------------------------------------------------------------- drivers

ArnoldiResult tba(const Tensor4d& A, const Tensor4d& B, int m) {
  check_system(A, B);
  check_steps(B.dims(), m);
  BlockArnoldi arn(A, B);
  for (int j = 0; j < m && !arn.deflated(); ++j) arn.extend(kInfiniteShift);
  return arn.result();
}

LanczosResult tbl(const Tensor4d& A, const Tensor4d& B, const Tensor4d& C, int m) {
  check_system(A, B);
  check_steps(B.dims(), m);
  ClassicLanczos lan(A, B, C);
  for (int j = 0; j < m && !lan.deflated(); ++j) lan.extend();
  return lan.result();
}

ArnoldiResult trba(const Tensor4d& A, const Tensor4d& B,
                   const std::function<double(const ArnoldiResult&)>& next_shift,
                   int m) {
  check_system(A, B);
  check_steps(B.dims(), m);
  BlockArnoldi arn(A, B);
  for (int j = 0; j < m && !arn.deflated(); ++j) {
    double s = next_shift(arn.result());
    if (!is_finite_shift(s))
      throw DimensionError("trba: infinite shifts are not supported");
    arn.extend(s);
  }
  return arn.result();
}

ArnoldiResult trba(const Tensor4d& A, const Tensor4d& B,
                   const std::vector<double>& shifts, int m) {
  if (static_cast<int>(shifts.size()) < m)
    throw DimensionError("trba: fewer shifts than steps");
  int j = 0;
  return trba(A, B, [&](const ArnoldiResult&) { return shifts[j++]; }, m);
}

LanczosResult trbl(const Tensor4d& A, const Tensor4d& B, const Tensor4d& C,
                   const std::function<double(const LanczosResult&)>& next_shift,
                   int m, std::optional<double> initial_pole) {
  check_system(A, B);
  check_steps(B.dims(), m);
  RationalLanczos lan(A, B, C, initial_pole);
  for (int j = 0; j < m && !lan.deflated(); ++j) lan.extend(next_shift(lan.result()));
  return lan.result();
}

LanczosResult trbl(const Tensor4d& A, const Tensor4d& B, const Tensor4d& C,
                   const std::vector<double>& shifts, int m,
                   std::optional<double> initial_pole) {
  if (static_cast<int>(shifts.size()) < m)
    throw DimensionError("trbl: fewer shifts than steps");
  int j = 0;
  return trbl(A, B, C, [&](const LanczosResult&) { return shifts[j++]; }, m,
              initial_pole);
}

// ---------------------------------------------------------------- Gamma

namespace {

GammaFactors gamma_impl(const MatD& A, bool transposed, const MatD& V,
                        const MatD& W, const MatD& H,
                        const std::vector<double>& shifts, Index p) {
  const Index mp = H.cols();
  MatD Hp, Kp;
  pencil(H, shifts, p, Hp, Kp);
  GammaFactors gf;
  gf.right = right_divide(H.bottomRows(p), Hp.topRows(mp));
  const double last = shifts.empty() ? kInfiniteShift : shifts.back();
  const MatD vnext = V.rightCols(p);
  if (is_finite_shift(last)) {
    MatD y = transposed ? MatD(A.transpose() * vnext) : MatD(A * vnext);
    y -= last * vnext;
    const auto Vm = V.leftCols(mp);
    const auto Wm = W.leftCols(mp);
    gf.left = Vm * (Wm.transpose() * y) - y;
  } else {
    gf.left = vnext;
  }
  return gf;
}

Index block_size(const Tensor4d& V, int m) {
  if (m < 1) throw DimensionError("Gamma needs at least one completed step");
  return V.dims().K1 * (V.dims().K2 / (m + 1));
}

}  // namespace

GammaFactors gamma_factors(const ArnoldiResult& basis, const MatD& A) {
  const Index p = block_size(basis.V, basis.m);
  const MatD& V = basis.V.unfold();
  return gamma_impl(A, false, V, V, basis.H_bar.unfold(), basis.shifts, p);
}

GammaFactors gamma_factors(const LanczosResult& basis, const MatD& A, Side side) {
  if (!basis.pencil_ok)
    throw BoundUnavailableError("Gamma unavailable: H_m or G_m is singular");
  const Index p = block_size(basis.V, basis.m);
  const std::vector<double>& shifts = basis.shifts;
  if (side == Side::Primal)
    return gamma_impl(A, false, basis.V.unfold(), basis.W.unfold(),
                      basis.H_bar.unfold(), shifts, p);
  return gamma_impl(A, true, basis.W.unfold(), basis.V.unfold(),
                    basis.G_bar.unfold(), shifts, p);
}

Tensor4d gamma_correction(const ArnoldiResult& basis, const Tensor4d& A) {
  GammaFactors gf = gamma_factors(basis, A.unfold());
  Dims4 d = basis.V.dims();
  d.K2 = d.K2 / (basis.m + 1) * basis.m;
  return fold(gf.full(), d);
}

Tensor4d gamma_correction(const LanczosResult& basis, const Tensor4d& A, Side side) {
  GammaFactors gf = gamma_factors(basis, A.unfold(), side);
  Dims4 d = basis.V.dims();
  d.K2 = d.K2 / (basis.m + 1) * basis.m;
  return fold(gf.full(), d);
}

}  // namespace mlti
