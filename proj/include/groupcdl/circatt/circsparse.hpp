#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "groupcdl/core/planes.hpp"

namespace gcdl {

/// Sparsity pattern of a 2D circular sliding window of size W over a q1 x q2
/// grid (block-circulant with circulant blocks). Along an axis shorter than W
/// the window is clamped to the axis length so no pixel is counted twice.
class BccbPattern {
 public:
  BccbPattern() = default;
  BccbPattern(int q1, int q2, int window);

  int q1() const { return q1_; }
  int q2() const { return q2_; }
  int window() const { return window_; }
  /// Effective window extent per axis, min(W, q).
  int w1() const { return w1_; }
  int w2() const { return w2_; }
  /// Smallest row/col displacement in the window.
  int lo1() const { return lo1_; }
  int lo2() const { return lo2_; }
  int pixels() const { return q1_ * q2_; }
  int offsets() const { return w1_ * w2_; }
  std::size_t nnz() const { return static_cast<std::size_t>(pixels()) * offsets(); }

  int di(int o) const { return lo1_ + o / w2_; }
  int dj(int o) const { return lo2_ + o % w2_; }
  int offset_of(int di, int dj) const;
  /// Pixel reached from pixel i by offset o (circular wrap).
  int neighbor(int i, int o) const;
  /// Offset o' with neighbor(neighbor(i, o), o') == i, for every i.
  int transpose_offset(int o) const { return transpose_[o]; }

  bool operator==(const BccbPattern& other) const {
    return q1_ == other.q1_ && q2_ == other.q2_ && window_ == other.window_;
  }

 private:
  int q1_ = 1, q2_ = 1, window_ = 1;
  int w1_ = 1, w2_ = 1, lo1_ = 0, lo2_ = 0;
  std::vector<int> transpose_;
};

/// Values on a BccbPattern in band storage: row i holds the coefficients
/// linking pixel i to its window neighbors, at values[i * offsets + o].
struct CircSparse {
  BccbPattern pattern;
  std::vector<Real> values;

  CircSparse() = default;
  explicit CircSparse(BccbPattern p, Real fill = 0);
  CircSparse(BccbPattern p, std::vector<Real> v);

  std::span<Real> row(int i) { return std::span<Real>(values).subspan(i * stride(), stride()); }
  std::span<const Real> row(int i) const {
    return std::span<const Real>(values).subspan(i * stride(), stride());
  }
  Real& at(int i, int o) { return values[i * stride() + o]; }
  Real at(int i, int o) const { return values[i * stride() + o]; }
  std::size_t stride() const { return static_cast<std::size_t>(pattern.offsets()); }

  bool operator==(const CircSparse&) const = default;
};

CircSparse circ_identity(const BccbPattern& p);
/// Every stored entry equal to 1 / nnz-per-row.
CircSparse circ_uniform(const BccbPattern& p);

// All kernels act on real planes, channel-major, q1*q2 values per channel.
// Complex codes go through split_complex first.

/// S[i,o] = -1/2 sum_m (k_m[i] - q_m[j])^2, j = neighbor(i, o).
void circ_dist_sim_raw(const BccbPattern& p, int channels, std::span<const Real> k, std::span<const Real> q,
                       std::span<Real> s);
/// Gradients of <dS, S> with respect to k and q (accumulated into dk, dq).
void circ_dist_sim_bwd_raw(const CircSparse& ds, int channels, std::span<const Real> k, std::span<const Real> q,
                           std::span<Real> dk, std::span<Real> dq);

/// y_m[i] = sum_o A[i,o] x_m[neighbor(i,o)]  (overwrites y).
void circ_att_raw(const CircSparse& a, int channels, std::span<const Real> x, std::span<Real> y);
/// dA[i,o] += sum_m dy_m[i] x_m[neighbor(i,o)].
void circ_att_grad_a_raw(const BccbPattern& p, int channels, std::span<const Real> x, std::span<const Real> dy,
                         std::span<Real> da);

void circ_row_softmax_inplace(CircSparse& s);
/// dS = P o (dP - rowsum(P o dP)), written into dp.
void circ_row_softmax_bwd_inplace(const CircSparse& p, CircSparse& dp);

CircSparse circ_dist_sim(const LatentCode<Real>& k, const LatentCode<Real>& q, int window);
CircSparse circ_dist_sim(const LatentCode<Complex>& k, const LatentCode<Complex>& q, int window);

template <Scalar T>
struct DistSimGrad {
  LatentCode<T> dk, dq;
};
DistSimGrad<Real> circ_dist_sim_bwd(const CircSparse& ds, const LatentCode<Real>& k, const LatentCode<Real>& q);
DistSimGrad<Complex> circ_dist_sim_bwd(const CircSparse& ds, const LatentCode<Complex>& k,
                                       const LatentCode<Complex>& q);

CircSparse circ_row_softmax(const CircSparse& s);
CircSparse circ_row_softmax_bwd(const CircSparse& p, const CircSparse& dp);

template <Scalar T>
LatentCode<T> circ_att(const CircSparse& a, const LatentCode<T>& x);

template <Scalar T>
struct AttGrad {
  CircSparse da;
  LatentCode<T> dx;
};
template <Scalar T>
AttGrad<T> circ_att_bwd(const CircSparse& a, const LatentCode<T>& x, const LatentCode<T>& dy);

CircSparse circ_transpose(const CircSparse& s);

/// 2M real channels: re of channel m at 2m, im at 2m + 1.
LatentCode<Real> split_complex(const LatentCode<Complex>& z);
LatentCode<Complex> merge_complex(const LatentCode<Real>& z);

inline constexpr int kDenseLimit = 4096;

/// Dense Q x Q row-major matrix. `outside` fills entries not in the pattern
/// (0 for operators, -inf for similarity semantics).
std::vector<Real> to_dense(const CircSparse& s, Real outside = 0);
/// Reads the pattern entries of a dense matrix; everything else is ignored.
CircSparse from_dense(const BccbPattern& p, std::span<const Real> dense);

/// Debug dump of the dense matrix.
void write_dense_csv(const CircSparse& s, const std::filesystem::path& path);

}  // namespace gcdl
