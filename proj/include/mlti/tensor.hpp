#pragma once

// Dense 4th-order tensors under the Einstein product.
//
// A tensor of dims (J1,J2,K1,K2) is stored as its unfolding: a column-major
// (J1*J2) x (K1*K2) matrix whose row index is ivec((j1,j2),(J1,J2)) and whose
// column index is ivec((k1,k2),(K1,K2)). Every algebraic operation is carried
// out on that matrix and folded back, so unfold() is free.

#include <Eigen/Dense>

#include <algorithm>
#include <complex>
#include <cstdint>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "mlti/errors.hpp"

namespace mlti {

using Index = Eigen::Index;
using cd = std::complex<double>;
template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
using MatD = Mat<double>;
using MatC = Mat<cd>;

template <class S>
inline constexpr bool is_complex_v = !std::is_same_v<S, double>;

struct Dims4 {
  Index J1 = 0, J2 = 0, K1 = 0, K2 = 0;

  Index rows() const { return J1 * J2; }
  Index cols() const { return K1 * K2; }
  bool square() const { return J1 == K1 && J2 == K2; }
  Dims4 transposed() const { return {K1, K2, J1, J2}; }
  friend bool operator==(const Dims4&, const Dims4&) = default;

  std::string str() const {
    std::ostringstream os;
    os << "(" << J1 << "," << J2 << "," << K1 << "," << K2 << ")";
    return os.str();
  }
};

// 1-based index map: ivec((j1,j2),(J1,J2)) = j1 + (j2-1)*J1.
inline Index ivec(Index j1, Index j2, Index J1, Index J2) {
  if (j1 < 1 || j1 > J1 || j2 < 1 || j2 > J2) {
    std::ostringstream os;
    os << "ivec: index (" << j1 << "," << j2 << ") outside (" << J1 << ","
       << J2 << ")";
    throw BoundsError(os.str());
  }
  return j1 + (j2 - 1) * J1;
}

template <class S>
class Tensor4 {
 public:
  using Scalar = S;

  Tensor4() = default;
  explicit Tensor4(const Dims4& d) : d_(d) {
    if (d.J1 < 0 || d.J2 < 0 || d.K1 < 0 || d.K2 < 0)
      throw DimensionError("Tensor4: negative dimension " + d.str());
    m_ = Mat<S>::Zero(d.rows(), d.cols());
  }
  Tensor4(Index J1, Index J2, Index K1, Index K2)
      : Tensor4(Dims4{J1, J2, K1, K2}) {}

  static Tensor4 fold(Mat<S> m, const Dims4& d) {
    if (m.rows() != d.rows() || m.cols() != d.cols()) {
      std::ostringstream os;
      os << "fold: matrix " << m.rows() << "x" << m.cols()
         << " does not match dims " << d.str();
      throw DimensionError(os.str());
    }
    Tensor4 t;
    t.d_ = d;
    t.m_ = std::move(m);
    return t;
  }

  static Tensor4 identity(Index J1, Index J2) {
    return fold(Mat<S>::Identity(J1 * J2, J1 * J2), Dims4{J1, J2, J1, J2});
  }

  const Dims4& dims() const { return d_; }
  const Mat<S>& unfold() const { return m_; }
  bool empty() const { return m_.size() == 0; }

  // Element access with 1-based indices.
  S& operator()(Index j1, Index j2, Index k1, Index k2) {
    return m_(ivec(j1, j2, d_.J1, d_.J2) - 1, ivec(k1, k2, d_.K1, d_.K2) - 1);
  }
  const S& operator()(Index j1, Index j2, Index k1, Index k2) const {
    return m_(ivec(j1, j2, d_.J1, d_.J2) - 1, ivec(k1, k2, d_.K1, d_.K2) - 1);
  }

  Tensor4<cd> to_complex() const {
    return Tensor4<cd>::fold(m_.template cast<cd>(), d_);
  }

 private:
  Dims4 d_;
  Mat<S> m_;
};

using Tensor4d = Tensor4<double>;
using Tensor4c = Tensor4<cd>;

template <class S>
const Mat<S>& unfold(const Tensor4<S>& t) {
  return t.unfold();
}

template <class S>
Tensor4<S> fold(Mat<S> m, const Dims4& d) {
  return Tensor4<S>::fold(std::move(m), d);
}

inline Tensor4d fold(const MatD& m, const Dims4& d) {
  return Tensor4d::fold(m, d);
}

template <class S>
Tensor4<S> operator+(const Tensor4<S>& a, const Tensor4<S>& b) {
  if (!(a.dims() == b.dims()))
    throw DimensionError("tensor sum: dims " + a.dims().str() + " vs " +
                         b.dims().str());
  return fold<S>(a.unfold() + b.unfold(), a.dims());
}

template <class S>
Tensor4<S> operator-(const Tensor4<S>& a, const Tensor4<S>& b) {
  if (!(a.dims() == b.dims()))
    throw DimensionError("tensor difference: dims " + a.dims().str() + " vs " +
                         b.dims().str());
  return fold<S>(a.unfold() - b.unfold(), a.dims());
}

template <class S>
Tensor4<S> operator*(S alpha, const Tensor4<S>& a) {
  return fold<S>(alpha * a.unfold(), a.dims());
}

template <class S>
Tensor4<S> einstein_product(const Tensor4<S>& a, const Tensor4<S>& b) {
  const Dims4& da = a.dims();
  const Dims4& db = b.dims();
  if (da.K1 != db.J1 || da.K2 != db.J2)
    throw DimensionError("einstein_product: non-conformal dims " + da.str() +
                         " * " + db.str());
  return fold<S>(a.unfold() * b.unfold(), Dims4{da.J1, da.J2, db.K1, db.K2});
}

template <class S>
Tensor4<S> transpose(const Tensor4<S>& a) {
  return fold<S>(a.unfold().transpose(), a.dims().transposed());
}

template <class S>
S trace(const Tensor4<S>& a) {
  if (!a.dims().square())
    throw DimensionError("trace: non-square dims " + a.dims().str());
  return a.unfold().trace();
}

// trace(X^T * Y); no conjugation, matching the real definition.
template <class S>
S inner(const Tensor4<S>& x, const Tensor4<S>& y) {
  if (!(x.dims() == y.dims()))
    throw DimensionError("inner: dims " + x.dims().str() + " vs " +
                         y.dims().str());
  return x.unfold().cwiseProduct(y.unfold()).sum();
}

// sqrt(sum |x|^2); equals sqrt(inner(X,X)) in the real case.
template <class S>
double fro_norm(const Tensor4<S>& x) {
  return x.unfold().norm();
}

namespace detail {

// Reciprocal condition threshold below which a factorization counts as singular.
inline constexpr double kSingularRcond = 1e-14;

template <class S>
Eigen::PartialPivLU<Mat<S>> checked_lu(const Mat<S>& m, S sigma) {
  Eigen::PartialPivLU<Mat<S>> lu(m);
  double rc = lu.rcond();
  if (!(rc > kSingularRcond)) {
    std::ostringstream os;
    os << "shifted operator singular at sigma=" << sigma << " (rcond " << rc
       << ")";
    throw SingularError(os.str(), cd(sigma), rc);
  }
  return lu;
}

// Solves M^T x = v from the factorization P M = L U of M.
template <class S>
Mat<S> lu_solve_transposed(const Eigen::PartialPivLU<Mat<S>>& lu, const Mat<S>& v) {
  const Mat<S>& f = lu.matrixLU();
  Mat<S> y = f.transpose().template triangularView<Eigen::Lower>().solve(v);
  y = f.transpose().template triangularView<Eigen::UnitUpper>().solve(y);
  return lu.permutationP().transpose() * y;
}

}  // namespace detail

template <class S>
Tensor4<S> inverse(const Tensor4<S>& a) {
  if (!a.dims().square())
    throw DimensionError("inverse: non-square dims " + a.dims().str());
  auto lu = detail::checked_lu<S>(a.unfold(), S(0));
  return fold<S>(lu.inverse(), a.dims().transposed());
}

// Factorizations of A - sigma I cached per shift, least recently used evicted
// beyond `capacity`. Not thread-safe; use one solver per thread.
template <class S>
class ShiftedSolver {
 public:
  explicit ShiftedSolver(Mat<S> a, std::size_t capacity = 4)
      : a_(std::move(a)), capacity_(capacity < 1 ? 1 : capacity) {
    if (a_.rows() != a_.cols())
      throw DimensionError("ShiftedSolver: operator must be square");
  }

  Index size() const { return a_.rows(); }
  const Mat<S>& op() const { return a_; }

  Mat<S> solve(S sigma, const Mat<S>& v, bool transposed = false) {
    if (v.rows() != a_.rows())
      throw DimensionError("shifted_solve: right-hand side has wrong row count");
    const auto& lu = factor(sigma);
    if (transposed) return detail::lu_solve_transposed<S>(lu, v);
    return lu.solve(v);
  }

  std::size_t cached() const { return cache_.size(); }

 private:
  using Key = std::pair<double, double>;
  struct Entry {
    Key key;
    Eigen::PartialPivLU<Mat<S>> lu;
    std::uint64_t used;
  };

  static Key key(S s) {
    if constexpr (is_complex_v<S>)
      return {s.real(), s.imag()};
    else
      return {s, 0.0};
  }

  const Eigen::PartialPivLU<Mat<S>>& factor(S sigma) {
    const Key k = key(sigma);
    ++clock_;
    for (auto& e : cache_) {
      if (e.key == k) {
        e.used = clock_;
        return e.lu;
      }
    }
    Mat<S> shifted = a_;
    shifted.diagonal().array() -= sigma;
    auto lu = detail::checked_lu<S>(shifted, sigma);
    if (cache_.size() >= capacity_) {
      auto oldest = std::min_element(
          cache_.begin(), cache_.end(),
          [](const Entry& x, const Entry& y) { return x.used < y.used; });
      cache_.erase(oldest);
    }
    cache_.push_back(Entry{k, std::move(lu), clock_});
    return cache_.back().lu;
  }

  Mat<S> a_;
  std::size_t capacity_;
  std::vector<Entry> cache_;
  std::uint64_t clock_ = 0;
};

// (A - sigma I)^{-1} * V, or (A - sigma I)^{-T} * V when transposed.
template <class S>
Tensor4<S> shifted_solve(const Tensor4<S>& a, S sigma, const Tensor4<S>& v,
                         bool transposed = false) {
  if (!a.dims().square())
    throw DimensionError("shifted_solve: non-square operator " + a.dims().str());
  if (a.dims().K1 != v.dims().J1 || a.dims().K2 != v.dims().J2)
    throw DimensionError("shifted_solve: non-conformal " + a.dims().str() +
                         " and " + v.dims().str());
  ShiftedSolver<S> solver(a.unfold());
  return fold<S>(solver.solve(sigma, v.unfold(), transposed), v.dims());
}

namespace dense {

// Thin QR with the diagonal of R made nonnegative. Rank-deficient input is
// accepted; the corresponding diagonal entries of R come out (near) zero.
template <class S>
void qr_thin(const Mat<S>& a, Mat<S>& q, Mat<S>& r) {
  const Index n = a.rows(), p = a.cols();
  Eigen::HouseholderQR<Mat<S>> qr(a);
  q = qr.householderQ() * Mat<S>::Identity(n, p);
  r = qr.matrixQR().topRows(p).template triangularView<Eigen::Upper>();
  for (Index i = 0; i < p; ++i) {
    S d = r(i, i);
    double mag = std::abs(d);
    if (mag == 0.0) continue;
    S phase = d / mag;
    if constexpr (is_complex_v<S>) {
      r.row(i) *= std::conj(phase);
    } else {
      if (phase > 0) continue;
      r.row(i) *= phase;
    }
    q.col(i) *= phase;
  }
}

}  // namespace dense

template <class S>
struct QRResult {
  Tensor4<S> Q;
  Tensor4<S> R;
};

template <class S>
QRResult<S> tensor_qr(const Tensor4<S>& a) {
  const Dims4& d = a.dims();
  if (d.rows() < d.cols())
    throw DimensionError("tensor_qr: needs J1*J2 >= K1*K2, got " + d.str());
  Mat<S> q, r;
  dense::qr_thin<S>(a.unfold(), q, r);
  return {fold<S>(std::move(q), d), fold<S>(std::move(r), Dims4{d.K1, d.K2, d.K1, d.K2})};
}

template <class S>
struct SVDResult {
  Tensor4<S> U;  // (J1,J2,J1,J2)
  Tensor4<S> Sigma;  // (J1,J2,K1,K2), diagonal in unfolded form
  Tensor4<S> V;  // (K1,K2,K1,K2); A = U * S * V^T (V^H for complex)
};

template <class S>
SVDResult<S> tensor_svd(const Tensor4<S>& a) {
  const Dims4& d = a.dims();
  Eigen::BDCSVD<Mat<S>> svd(a.unfold(), Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat<S> sig = Mat<S>::Zero(d.rows(), d.cols());
  const auto& sv = svd.singularValues();
  for (Index i = 0; i < sv.size(); ++i) sig(i, i) = sv(i);
  return {fold<S>(svd.matrixU(), Dims4{d.J1, d.J2, d.J1, d.J2}),
          fold<S>(std::move(sig), d),
          fold<S>(svd.matrixV(), Dims4{d.K1, d.K2, d.K1, d.K2})};
}

template <class S>
std::vector<double> singular_values(const Tensor4<S>& a) {
  Eigen::BDCSVD<Mat<S>> svd(a.unfold());
  const auto& sv = svd.singularValues();
  return std::vector<double>(sv.data(), sv.data() + sv.size());
}

template <class S>
std::vector<cd> eigenvalues(const Tensor4<S>& a) {
  if (!a.dims().square())
    throw DimensionError("eigenvalues: non-square dims " + a.dims().str());
  if (a.empty()) return {};
  Eigen::Matrix<cd, Eigen::Dynamic, 1> ev;
  if constexpr (is_complex_v<S>) {
    Eigen::ComplexEigenSolver<MatC> es(a.unfold(), false);
    ev = es.eigenvalues();
  } else {
    Eigen::EigenSolver<MatD> es(a.unfold(), false);
    ev = es.eigenvalues();
  }
  return std::vector<cd>(ev.data(), ev.data() + ev.size());
}

// Block tensors. RowN / ColN follow the n-mode row/column block definitions:
// Row1 stacks along j2, Row2 along k2, Col1 along j1, Col2 along k1.
enum class BlockMode { Row1, Row2, Col1, Col2 };

namespace detail {

inline int block_axis(BlockMode mode) {
  switch (mode) {
    case BlockMode::Col1: return 0;
    case BlockMode::Row1: return 1;
    case BlockMode::Col2: return 2;
    case BlockMode::Row2: return 3;
  }
  return 3;
}

inline Index dim_of(const Dims4& d, int axis) {
  switch (axis) {
    case 0: return d.J1;
    case 1: return d.J2;
    case 2: return d.K1;
    default: return d.K2;
  }
}

inline Index& dim_ref(Dims4& d, int axis) {
  switch (axis) {
    case 0: return d.J1;
    case 1: return d.J2;
    case 2: return d.K1;
    default: return d.K2;
  }
}

}  // namespace detail

template <class S>
Tensor4<S> block_concat(const std::vector<Tensor4<S>>& parts, BlockMode mode) {
  if (parts.empty()) throw DimensionError("block_concat: no parts");
  const int axis = detail::block_axis(mode);
  Dims4 out = parts.front().dims();
  Index total = 0;
  for (const auto& p : parts) {
    Dims4 a = p.dims(), b = parts.front().dims();
    detail::dim_ref(a, axis) = 0;
    detail::dim_ref(b, axis) = 0;
    if (!(a == b))
      throw DimensionError("block_concat: part dims " + p.dims().str() +
                           " incompatible with " + parts.front().dims().str());
    total += detail::dim_of(p.dims(), axis);
  }
  detail::dim_ref(out, axis) = total;

  Tensor4<S> t(out);
  Index offset = 0;
  for (const auto& p : parts) {
    const Dims4& pd = p.dims();
    for (Index k2 = 1; k2 <= pd.K2; ++k2)
      for (Index k1 = 1; k1 <= pd.K1; ++k1)
        for (Index j2 = 1; j2 <= pd.J2; ++j2)
          for (Index j1 = 1; j1 <= pd.J1; ++j1) {
            Index idx[4] = {j1, j2, k1, k2};
            idx[axis] += offset;
            t(idx[0], idx[1], idx[2], idx[3]) = p(j1, j2, k1, k2);
          }
    offset += detail::dim_of(pd, axis);
  }
  return t;
}

// Part l (1-based) of a tensor made of `count` equal blocks along the mode axis.
template <class S>
Tensor4<S> block_extract(const Tensor4<S>& t, BlockMode mode, Index count,
                         Index l) {
  const int axis = detail::block_axis(mode);
  Dims4 d = t.dims();
  Index& len = detail::dim_ref(d, axis);
  if (count < 1 || len % count != 0)
    throw DimensionError("block_extract: axis length not divisible by count");
  if (l < 1 || l > count) throw BoundsError("block_extract: block index out of range");
  len /= count;
  const Index offset = (l - 1) * len;
  Tensor4<S> out(d);
  for (Index k2 = 1; k2 <= d.K2; ++k2)
    for (Index k1 = 1; k1 <= d.K1; ++k1)
      for (Index j2 = 1; j2 <= d.J2; ++j2)
        for (Index j1 = 1; j1 <= d.J1; ++j1) {
          Index idx[4] = {j1, j2, k1, k2};
          idx[axis] += offset;
          out(j1, j2, k1, k2) = t(idx[0], idx[1], idx[2], idx[3]);
        }
  return out;
}

// m stacked blocks of dims (.,.,K1,K2) along k2 (the 2-mode row convention).
struct BlockLayout {
  Index K1 = 1, K2 = 1;
  Index count = 1;
};

template <class S>
Tensor4<S> block_extract(const Tensor4<S>& t, const BlockLayout& layout, Index l) {
  if (t.dims().K1 != layout.K1 || t.dims().K2 != layout.K2 * layout.count)
    throw DimensionError("block_extract: tensor dims " + t.dims().str() +
                         " do not match layout");
  if (l < 1 || l > layout.count)
    throw BoundsError("block_extract: block index out of range");
  // Under the 2-mode row convention each block is a contiguous column range.
  const Index p = layout.K1 * layout.K2;
  Dims4 d = t.dims();
  d.K2 = layout.K2;
  return fold<S>(t.unfold().middleCols((l - 1) * p, p), d);
}

}  // namespace mlti
