#include "groupcdl/core/conv.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace gcdl {

void ConvGeometry::validate() const {
  require(subbands >= 1 && channels >= 1, "conv: subbands and channels must be positive");
  require(taps >= 1 && taps % 2 == 1, "conv: filter size p must be odd");
  require(stride >= 1, "conv: stride must be >= 1");
  require(rows >= 1 && cols >= 1, "conv: non-positive image dimensions");
  require(rows % stride == 0 && cols % stride == 0, "conv: image dimensions must be divisible by the stride");
}

template <Scalar T>
ConvFilterBank<T>::ConvFilterBank(int m, int c, int p, int s, ConvRole r, std::vector<T> w)
    : subbands(m), channels(c), taps(p), stride(s), role(r), weights(std::move(w)) {
  require(m >= 1 && c >= 1, "ConvFilterBank: M and C must be positive");
  require(p >= 1 && p % 2 == 1, "ConvFilterBank: p must be odd");
  require(s >= 1, "ConvFilterBank: stride must be >= 1");
  const auto n = static_cast<std::size_t>(m) * c * p * p;
  if (weights.empty()) weights.assign(n, T{});
  require(weights.size() == n, "ConvFilterBank: weight count mismatch");
}

namespace {

// idx[a * q + u] = (s*u + a - h) mod n
std::vector<int> tap_index(int n, int q, int p, int s) {
  std::vector<int> idx(static_cast<std::size_t>(p) * q);
  const int h = p / 2;
  for (int a = 0; a < p; ++a)
    for (int u = 0; u < q; ++u) idx[a * q + u] = ((s * u + a - h) % n + n) % n;
  return idx;
}

struct Tables {
  std::vector<int> rows, cols;
  explicit Tables(const ConvGeometry& g)
      : rows(tap_index(g.rows, g.code_rows(), g.taps, g.stride)),
        cols(tap_index(g.cols, g.code_cols(), g.taps, g.stride)) {}
};

}  // namespace

template <Scalar T>
void conv_synthesis_raw(const ConvGeometry& g, std::span<const T> w, std::span<const T> z, std::span<T> x) {
  const int q1 = g.code_rows(), q2 = g.code_cols(), p = g.taps;
  const std::size_t n = static_cast<std::size_t>(g.rows) * g.cols, q = static_cast<std::size_t>(q1) * q2;
  const Tables t(g);
  std::fill(x.begin(), x.end(), T{});
  for (int m = 0; m < g.subbands; ++m) {
    const T* zm = z.data() + m * q;
    for (int c = 0; c < g.channels; ++c) {
      T* xc = x.data() + c * n;
      for (int a = 0; a < p; ++a)
        for (int b = 0; b < p; ++b) {
          const T wv = w[((static_cast<std::size_t>(m) * g.channels + c) * p + a) * p + b];
          const int* cidx = t.cols.data() + b * q2;
          for (int u = 0; u < q1; ++u) {
            T* xr = xc + static_cast<std::size_t>(t.rows[a * q1 + u]) * g.cols;
            const T* zr = zm + static_cast<std::size_t>(u) * q2;
            for (int v = 0; v < q2; ++v) xr[cidx[v]] += wv * zr[v];
          }
        }
    }
  }
}

template <Scalar T>
void conv_analysis_raw(const ConvGeometry& g, std::span<const T> w, std::span<const T> x, std::span<T> z) {
  const int q1 = g.code_rows(), q2 = g.code_cols(), p = g.taps;
  const std::size_t n = static_cast<std::size_t>(g.rows) * g.cols, q = static_cast<std::size_t>(q1) * q2;
  const Tables t(g);
  std::fill(z.begin(), z.end(), T{});
  for (int m = 0; m < g.subbands; ++m) {
    T* zm = z.data() + m * q;
    for (int c = 0; c < g.channels; ++c) {
      const T* xc = x.data() + c * n;
      for (int a = 0; a < p; ++a)
        for (int b = 0; b < p; ++b) {
          const T wv = conj(w[((static_cast<std::size_t>(m) * g.channels + c) * p + a) * p + b]);
          const int* cidx = t.cols.data() + b * q2;
          for (int u = 0; u < q1; ++u) {
            const T* xr = xc + static_cast<std::size_t>(t.rows[a * q1 + u]) * g.cols;
            T* zr = zm + static_cast<std::size_t>(u) * q2;
            for (int v = 0; v < q2; ++v) zr[v] += wv * xr[cidx[v]];
          }
        }
    }
  }
}

template <Scalar T>
void conv_synthesis_weight_grad(const ConvGeometry& g, std::span<const T> z, std::span<const T> gx,
                                std::span<T> gw) {
  // gw[m,c,a,b] = sum_uv conj(z_m[u,v]) gx_c[...]
  const int q1 = g.code_rows(), q2 = g.code_cols(), p = g.taps;
  const std::size_t n = static_cast<std::size_t>(g.rows) * g.cols, q = static_cast<std::size_t>(q1) * q2;
  const Tables t(g);
  for (int m = 0; m < g.subbands; ++m) {
    const T* zm = z.data() + m * q;
    for (int c = 0; c < g.channels; ++c) {
      const T* gc = gx.data() + c * n;
      for (int a = 0; a < p; ++a)
        for (int b = 0; b < p; ++b) {
          T acc{};
          const int* cidx = t.cols.data() + b * q2;
          for (int u = 0; u < q1; ++u) {
            const T* gr = gc + static_cast<std::size_t>(t.rows[a * q1 + u]) * g.cols;
            const T* zr = zm + static_cast<std::size_t>(u) * q2;
            for (int v = 0; v < q2; ++v) acc += conj(zr[v]) * gr[cidx[v]];
          }
          gw[((static_cast<std::size_t>(m) * g.channels + c) * p + a) * p + b] += acc;
        }
    }
  }
}

template <Scalar T>
void conv_analysis_weight_grad(const ConvGeometry& g, std::span<const T> x, std::span<const T> gz,
                               std::span<T> gw) {
  // gw[m,c,a,b] = sum_uv conj(gz_m[u,v]) x_c[...]
  const int q1 = g.code_rows(), q2 = g.code_cols(), p = g.taps;
  const std::size_t n = static_cast<std::size_t>(g.rows) * g.cols, q = static_cast<std::size_t>(q1) * q2;
  const Tables t(g);
  for (int m = 0; m < g.subbands; ++m) {
    const T* gm = gz.data() + m * q;
    for (int c = 0; c < g.channels; ++c) {
      const T* xc = x.data() + c * n;
      for (int a = 0; a < p; ++a)
        for (int b = 0; b < p; ++b) {
          T acc{};
          const int* cidx = t.cols.data() + b * q2;
          for (int u = 0; u < q1; ++u) {
            const T* xr = xc + static_cast<std::size_t>(t.rows[a * q1 + u]) * g.cols;
            const T* gr = gm + static_cast<std::size_t>(u) * q2;
            for (int v = 0; v < q2; ++v) acc += conj(gr[v]) * xr[cidx[v]];
          }
          gw[((static_cast<std::size_t>(m) * g.channels + c) * p + a) * p + b] += acc;
        }
    }
  }
}

template <Scalar T>
LatentCode<T> conv_analysis(const Image<T>& x, const ConvFilterBank<T>& bank) {
  require(bank.role == ConvRole::analysis, "conv_analysis: bank role must be analysis");
  require(x.channels() == bank.channels, "conv_analysis: channel mismatch");
  const auto g = bank.geometry(x.rows(), x.cols());
  g.validate();
  LatentCode<T> z(g.code_rows(), g.code_cols(), bank.subbands);
  conv_analysis_raw<T>(g, bank.weights, x.data(), z.data());
  return z;
}

template <Scalar T>
Image<T> conv_synthesis(const LatentCode<T>& z, const ConvFilterBank<T>& bank) {
  require(bank.role == ConvRole::synthesis, "conv_synthesis: bank role must be synthesis");
  require(z.channels() == bank.subbands, "conv_synthesis: subband mismatch");
  const auto g = bank.geometry(z.rows() * bank.stride, z.cols() * bank.stride);
  g.validate();
  Image<T> x(g.rows, g.cols, bank.channels);
  conv_synthesis_raw<T>(g, bank.weights, z.data(), x.data());
  return x;
}

template <Scalar T>
ConvFilterBank<T> project_unit_norm(const ConvFilterBank<T>& bank) {
  ConvFilterBank<T> out = bank;
  for (int m = 0; m < out.subbands; ++m) {
    auto f = out.filter(m);
    const Real nrm = norm2<T>(f);
    if (nrm > 1.0)
      for (auto& v : f) v /= nrm;
  }
  return out;
}

template <Scalar T>
Real conv_operator_norm_sq(const ConvFilterBank<T>& bank, int grid, int iters, Real tol, unsigned seed) {
  const int n = (grid + bank.stride - 1) / bank.stride * bank.stride;
  const auto g = bank.geometry(n, n);
  g.validate();
  const std::size_t qsize = static_cast<std::size_t>(g.code_rows()) * g.code_cols() * g.subbands;
  std::vector<T> z(qsize), x(static_cast<std::size_t>(n) * n * g.channels), z2(qsize);
  std::mt19937_64 rng(seed);
  std::normal_distribution<Real> nd;
  for (auto& v : z) {
    if constexpr (is_complex_v<T>) v = T(nd(rng), nd(rng));
    else v = nd(rng);
  }
  Real lambda = 0;
  for (int it = 0; it < iters; ++it) {
    const Real nz = norm2<T>(z);
    if (nz == 0) return 0;
    for (auto& v : z) v /= nz;
    conv_synthesis_raw<T>(g, bank.weights, z, x);
    conv_analysis_raw<T>(g, bank.weights, x, z2);
    const Real next = dot_real<T>(z, z2);
    z.swap(z2);
    if (it > 0 && std::abs(next - lambda) <= tol * std::abs(next)) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  return lambda;
}

template <Scalar T>
ConvFilterBank<T> spectral_normalize(const ConvFilterBank<T>& bank, int grid) {
  // power iteration approaches from below; a small margin keeps ||D|| <= 1
  const Real l = conv_operator_norm_sq(bank, grid, 200, 1e-10);
  ConvFilterBank<T> out = bank;
  if (l <= 0) return out;
  const Real s = 1.0 / (std::sqrt(l) * (1.0 + 1e-6));
  for (auto& v : out.weights) v *= s;
  return out;
}

#define GCDL_INSTANTIATE_CONV(T)                                                                              \
  template struct ConvFilterBank<T>;                                                                          \
  template void conv_synthesis_raw<T>(const ConvGeometry&, std::span<const T>, std::span<const T>,            \
                                      std::span<T>);                                                          \
  template void conv_analysis_raw<T>(const ConvGeometry&, std::span<const T>, std::span<const T>,             \
                                     std::span<T>);                                                           \
  template void conv_synthesis_weight_grad<T>(const ConvGeometry&, std::span<const T>, std::span<const T>,    \
                                              std::span<T>);                                                  \
  template void conv_analysis_weight_grad<T>(const ConvGeometry&, std::span<const T>, std::span<const T>,     \
                                             std::span<T>);                                                   \
  template LatentCode<T> conv_analysis(const Image<T>&, const ConvFilterBank<T>&);                            \
  template Image<T> conv_synthesis(const LatentCode<T>&, const ConvFilterBank<T>&);                           \
  template ConvFilterBank<T> project_unit_norm(const ConvFilterBank<T>&);                                     \
  template Real conv_operator_norm_sq(const ConvFilterBank<T>&, int, int, Real, unsigned);                    \
  template ConvFilterBank<T> spectral_normalize(const ConvFilterBank<T>&, int);

GCDL_INSTANTIATE_CONV(Real)
GCDL_INSTANTIATE_CONV(Complex)

}  // namespace gcdl
