#include "groupcdl/circatt/circsparse.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "groupcdl/kernels/kernels.hpp"

namespace gcdl {

namespace {

int wrap(int v, int n) {
  v %= n;
  return v < 0 ? v + n : v;
}

// Plane circularly extended by the window so each window row is contiguous:
// pad[a][b] = x[(a + lo1) mod q1][(b + lo2) mod q2].
class PaddedPlane {
 public:
  explicit PaddedPlane(const BccbPattern& p)
      : p_(p), rows_(p.q1() + p.w1() - 1), cols_(p.q2() + p.w2() - 1), buf_(static_cast<std::size_t>(rows_) * cols_) {}

  void load(std::span<const Real> plane) {
    const int q1 = p_.q1(), q2 = p_.q2();
    for (int a = 0; a < rows_; ++a) {
      const Real* src = plane.data() + static_cast<std::size_t>(wrap(a + p_.lo1(), q1)) * q2;
      Real* dst = buf_.data() + static_cast<std::size_t>(a) * cols_;
      for (int b = 0; b < cols_; ++b) dst[b] = src[wrap(b + p_.lo2(), q2)];
    }
  }
  // Top-left of the window centred on pixel (r, c).
  const Real* window(int r, int c) const { return buf_.data() + static_cast<std::size_t>(r) * cols_ + c; }
  std::size_t stride() const { return static_cast<std::size_t>(cols_); }

 private:
  const BccbPattern& p_;
  int rows_, cols_;
  std::vector<Real> buf_;
};

void check_planes(const BccbPattern& p, int channels, std::size_t len, const char* what) {
  require(channels >= 1 && len == static_cast<std::size_t>(p.pixels()) * channels,
          std::string(what) + ": code size does not match the pattern grid");
}

}  // namespace

BccbPattern::BccbPattern(int q1, int q2, int window) : q1_(q1), q2_(q2), window_(window) {
  require(q1 >= 1 && q2 >= 1, "BccbPattern: grid dimensions must be positive");
  require(window >= 1 && window % 2 == 1, "BccbPattern: window must be odd and positive");
  w1_ = std::min(window, q1);
  w2_ = std::min(window, q2);
  lo1_ = -(w1_ / 2);
  lo2_ = -(w2_ / 2);
  transpose_.resize(offsets());
  for (int o = 0; o < offsets(); ++o) {
    int ti = -di(o), tj = -dj(o);
    // an even clamped window is one short of symmetric; fold the far end back
    if (ti > lo1_ + w1_ - 1) ti -= q1_;
    if (tj > lo2_ + w2_ - 1) tj -= q2_;
    transpose_[o] = offset_of(ti, tj);
  }
}

int BccbPattern::offset_of(int di, int dj) const {
  const int a = di - lo1_, b = dj - lo2_;
  require(a >= 0 && a < w1_ && b >= 0 && b < w2_, "BccbPattern: displacement outside the window");
  return a * w2_ + b;
}

int BccbPattern::neighbor(int i, int o) const {
  require(i >= 0 && i < pixels(), "neighbor_index: pixel out of range");
  require(o >= 0 && o < offsets(), "neighbor_index: offset out of range");
  const int r = wrap(i / q2_ + di(o), q1_);
  const int c = wrap(i % q2_ + dj(o), q2_);
  return r * q2_ + c;
}

CircSparse::CircSparse(BccbPattern p, Real fill) : pattern(std::move(p)), values(pattern.nnz(), fill) {}

CircSparse::CircSparse(BccbPattern p, std::vector<Real> v) : pattern(std::move(p)), values(std::move(v)) {
  require(values.size() == pattern.nnz(), "CircSparse: storage size must be Q * offsets");
}

CircSparse circ_identity(const BccbPattern& p) {
  CircSparse s(p);
  const int centre = p.offset_of(0, 0);
  for (int i = 0; i < p.pixels(); ++i) s.at(i, centre) = 1;
  return s;
}

CircSparse circ_uniform(const BccbPattern& p) { return CircSparse(p, 1.0 / p.offsets()); }

void circ_dist_sim_raw(const BccbPattern& p, int channels, std::span<const Real> k, std::span<const Real> q,
                       std::span<Real> s) {
  check_planes(p, channels, k.size(), "circ_dist_sim");
  require(k.size() == q.size(), "circ_dist_sim: k and q shapes differ");
  require(s.size() == p.nnz(), "circ_dist_sim: output storage size");
  const auto& kt = kernels::active();
  std::fill(s.begin(), s.end(), 0.0);
  PaddedPlane pad(p);
  const std::size_t Q = p.pixels(), nb = p.offsets();
  for (int m = 0; m < channels; ++m) {
    pad.load(q.subspan(m * Q, Q));
    const Real* km = k.data() + m * Q;
    for (int r = 0; r < p.q1(); ++r)
      for (int c = 0; c < p.q2(); ++c) {
        const std::size_t i = static_cast<std::size_t>(r) * p.q2() + c;
        kt.window_sqdist(km[i], pad.window(r, c), pad.stride(), p.w1(), p.w2(), s.data() + i * nb);
      }
  }
}

void circ_att_raw(const CircSparse& a, int channels, std::span<const Real> x, std::span<Real> y) {
  const auto& p = a.pattern;
  check_planes(p, channels, x.size(), "circ_att");
  require(y.size() == x.size(), "circ_att: output size");
  const auto& kt = kernels::active();
  PaddedPlane pad(p);
  const std::size_t Q = p.pixels(), nb = p.offsets();
  for (int m = 0; m < channels; ++m) {
    pad.load(x.subspan(m * Q, Q));
    Real* ym = y.data() + m * Q;
    for (int r = 0; r < p.q1(); ++r)
      for (int c = 0; c < p.q2(); ++c) {
        const std::size_t i = static_cast<std::size_t>(r) * p.q2() + c;
        ym[i] = kt.window_dot(a.values.data() + i * nb, pad.window(r, c), pad.stride(), p.w1(), p.w2());
      }
  }
}

void circ_att_grad_a_raw(const BccbPattern& p, int channels, std::span<const Real> x, std::span<const Real> dy,
                         std::span<Real> da) {
  check_planes(p, channels, x.size(), "circ_att_bwd");
  require(dy.size() == x.size(), "circ_att_bwd: dy size");
  require(da.size() == p.nnz(), "circ_att_bwd: dA storage size");
  const auto& kt = kernels::active();
  PaddedPlane pad(p);
  const std::size_t Q = p.pixels(), nb = p.offsets();
  for (int m = 0; m < channels; ++m) {
    pad.load(x.subspan(m * Q, Q));
    const Real* g = dy.data() + m * Q;
    for (int r = 0; r < p.q1(); ++r)
      for (int c = 0; c < p.q2(); ++c) {
        const std::size_t i = static_cast<std::size_t>(r) * p.q2() + c;
        if (g[i] != 0) kt.window_axpy(g[i], pad.window(r, c), pad.stride(), p.w1(), p.w2(), da.data() + i * nb);
      }
  }
}

void circ_dist_sim_bwd_raw(const CircSparse& ds, int channels, std::span<const Real> k, std::span<const Real> q,
                           std::span<Real> dk, std::span<Real> dq) {
  const auto& p = ds.pattern;
  check_planes(p, channels, k.size(), "circ_dist_sim_bwd");
  require(q.size() == k.size() && dk.size() == k.size() && dq.size() == k.size(),
          "circ_dist_sim_bwd: shape mismatch");
  const std::size_t Q = p.pixels();
  // dk = dS q - (dS 1) o k ;  dq = dS^T k - (dS^T 1) o q
  const CircSparse dst = circ_transpose(ds);
  std::vector<Real> rows(Q, 0.0), cols(Q, 0.0);
  for (std::size_t i = 0; i < Q; ++i) {
    for (Real v : ds.row(static_cast<int>(i))) rows[i] += v;
    for (Real v : dst.row(static_cast<int>(i))) cols[i] += v;
  }
  std::vector<Real> tmp(k.size());
  circ_att_raw(ds, channels, q, tmp);
  for (std::size_t t = 0; t < k.size(); ++t) dk[t] += tmp[t] - rows[t % Q] * k[t];
  circ_att_raw(dst, channels, k, tmp);
  for (std::size_t t = 0; t < k.size(); ++t) dq[t] += tmp[t] - cols[t % Q] * q[t];
}

void circ_row_softmax_inplace(CircSparse& s) {
  for (int i = 0; i < s.pattern.pixels(); ++i) {
    auto row = s.row(i);
    const Real mx = *std::max_element(row.begin(), row.end());
    Real sum = 0;
    for (Real& v : row) {
      v = std::exp(v - mx);
      sum += v;
    }
    const Real inv = 1.0 / sum;
    for (Real& v : row) v *= inv;
  }
}

void circ_row_softmax_bwd_inplace(const CircSparse& p, CircSparse& dp) {
  require(p.pattern == dp.pattern, "circ_row_softmax_bwd: pattern mismatch");
  for (int i = 0; i < p.pattern.pixels(); ++i) {
    const auto pr = p.row(i);
    auto g = dp.row(i);
    Real inner = 0;
    for (std::size_t o = 0; o < pr.size(); ++o) inner += pr[o] * g[o];
    for (std::size_t o = 0; o < pr.size(); ++o) g[o] = pr[o] * (g[o] - inner);
  }
}

CircSparse circ_dist_sim(const LatentCode<Real>& k, const LatentCode<Real>& q, int window) {
  require(k.same_shape(q), "circ_dist_sim: k and q shapes differ");
  CircSparse s(BccbPattern(k.rows(), k.cols(), window));
  circ_dist_sim_raw(s.pattern, k.channels(), k.data(), q.data(), s.values);
  return s;
}

CircSparse circ_dist_sim(const LatentCode<Complex>& k, const LatentCode<Complex>& q, int window) {
  require(k.same_shape(q), "circ_dist_sim: k and q shapes differ");
  return circ_dist_sim(split_complex(k), split_complex(q), window);
}

DistSimGrad<Real> circ_dist_sim_bwd(const CircSparse& ds, const LatentCode<Real>& k, const LatentCode<Real>& q) {
  require(k.same_shape(q), "circ_dist_sim_bwd: k and q shapes differ");
  require(ds.pattern.q1() == k.rows() && ds.pattern.q2() == k.cols(), "circ_dist_sim_bwd: pattern mismatch");
  DistSimGrad<Real> g{LatentCode<Real>(k.rows(), k.cols(), k.channels()),
                      LatentCode<Real>(k.rows(), k.cols(), k.channels())};
  circ_dist_sim_bwd_raw(ds, k.channels(), k.data(), q.data(), g.dk.data(), g.dq.data());
  return g;
}

DistSimGrad<Complex> circ_dist_sim_bwd(const CircSparse& ds, const LatentCode<Complex>& k,
                                       const LatentCode<Complex>& q) {
  auto g = circ_dist_sim_bwd(ds, split_complex(k), split_complex(q));
  return {merge_complex(g.dk), merge_complex(g.dq)};
}

CircSparse circ_row_softmax(const CircSparse& s) {
  CircSparse out = s;
  circ_row_softmax_inplace(out);
  return out;
}

CircSparse circ_row_softmax_bwd(const CircSparse& p, const CircSparse& dp) {
  CircSparse out = dp;
  circ_row_softmax_bwd_inplace(p, out);
  return out;
}

template <Scalar T>
LatentCode<T> circ_att(const CircSparse& a, const LatentCode<T>& x) {
  require(a.pattern.q1() == x.rows() && a.pattern.q2() == x.cols(), "circ_att: grid mismatch");
  if constexpr (is_complex_v<T>) {
    auto xs = split_complex(x);
    LatentCode<Real> y(x.rows(), x.cols(), xs.channels());
    circ_att_raw(a, xs.channels(), xs.data(), y.data());
    return merge_complex(y);
  } else {
    LatentCode<Real> y(x.rows(), x.cols(), x.channels());
    circ_att_raw(a, x.channels(), x.data(), y.data());
    return y;
  }
}

template <Scalar T>
AttGrad<T> circ_att_bwd(const CircSparse& a, const LatentCode<T>& x, const LatentCode<T>& dy) {
  require(x.same_shape(dy), "circ_att_bwd: x and dy shapes differ");
  require(a.pattern.q1() == x.rows() && a.pattern.q2() == x.cols(), "circ_att_bwd: grid mismatch");
  AttGrad<T> g{CircSparse(a.pattern), {}};
  if constexpr (is_complex_v<T>) {
    const auto xs = split_complex(x), gs = split_complex(dy);
    circ_att_grad_a_raw(a.pattern, xs.channels(), xs.data(), gs.data(), g.da.values);
  } else {
    circ_att_grad_a_raw(a.pattern, x.channels(), x.data(), dy.data(), g.da.values);
  }
  g.dx = circ_att(circ_transpose(a), dy);
  return g;
}

template LatentCode<Real> circ_att(const CircSparse&, const LatentCode<Real>&);
template LatentCode<Complex> circ_att(const CircSparse&, const LatentCode<Complex>&);
template AttGrad<Real> circ_att_bwd(const CircSparse&, const LatentCode<Real>&, const LatentCode<Real>&);
template AttGrad<Complex> circ_att_bwd(const CircSparse&, const LatentCode<Complex>&, const LatentCode<Complex>&);

CircSparse circ_transpose(const CircSparse& s) {
  const auto& p = s.pattern;
  CircSparse t(p);
  const int nb = p.offsets();
  for (int i = 0; i < p.pixels(); ++i)
    for (int o = 0; o < nb; ++o) t.at(p.neighbor(i, o), p.transpose_offset(o)) = s.at(i, o);
  return t;
}

LatentCode<Real> split_complex(const LatentCode<Complex>& z) {
  LatentCode<Real> out(z.rows(), z.cols(), 2 * z.channels());
  const std::size_t Q = z.plane_size();
  for (int m = 0; m < z.channels(); ++m) {
    const auto src = z.plane(m);
    auto re = out.plane(2 * m), im = out.plane(2 * m + 1);
    for (std::size_t i = 0; i < Q; ++i) {
      re[i] = src[i].real();
      im[i] = src[i].imag();
    }
  }
  return out;
}

LatentCode<Complex> merge_complex(const LatentCode<Real>& z) {
  require(z.channels() % 2 == 0, "merge_complex: odd channel count");
  LatentCode<Complex> out(z.rows(), z.cols(), z.channels() / 2);
  const std::size_t Q = z.plane_size();
  for (int m = 0; m < out.channels(); ++m) {
    const auto re = z.plane(2 * m), im = z.plane(2 * m + 1);
    auto dst = out.plane(m);
    for (std::size_t i = 0; i < Q; ++i) dst[i] = Complex(re[i], im[i]);
  }
  return out;
}

std::vector<Real> to_dense(const CircSparse& s, Real outside) {
  const int Q = s.pattern.pixels();
  require(Q <= kDenseLimit, "to_dense: grid too large for a dense matrix");
  std::vector<Real> d(static_cast<std::size_t>(Q) * Q, outside);
  for (int i = 0; i < Q; ++i)
    for (int o = 0; o < s.pattern.offsets(); ++o)
      d[static_cast<std::size_t>(i) * Q + s.pattern.neighbor(i, o)] = s.at(i, o);
  return d;
}

CircSparse from_dense(const BccbPattern& p, std::span<const Real> dense) {
  const int Q = p.pixels();
  require(dense.size() == static_cast<std::size_t>(Q) * Q, "from_dense: matrix must be Q x Q");
  CircSparse s(p);
  for (int i = 0; i < Q; ++i)
    for (int o = 0; o < p.offsets(); ++o) s.at(i, o) = dense[static_cast<std::size_t>(i) * Q + p.neighbor(i, o)];
  return s;
}

void write_dense_csv(const CircSparse& s, const std::filesystem::path& path) {
  const int Q = s.pattern.pixels();
  const auto d = to_dense(s, 0.0);
  std::ofstream os(path);
  if (!os) throw ValidationError("cannot open for writing: " + path.string());
  os.precision(17);
  for (int i = 0; i < Q; ++i) {
    for (int j = 0; j < Q; ++j) os << (j ? "," : "") << d[static_cast<std::size_t>(i) * Q + j];
    os << '\n';
  }
}

}  // namespace gcdl
