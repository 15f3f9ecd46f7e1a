#pragma once

#include <span>
#include <vector>

#include "groupcdl/core/planes.hpp"

namespace gcdl {

enum class ConvRole { analysis, synthesis };

/// Shapes for one strided circular convolution between an n1 x n2 x C image
/// and a q1 x q2 x M code (q = n / stride).
struct ConvGeometry {
  int subbands = 1;   // M
  int channels = 1;   // C
  int taps = 1;       // p (odd)
  int stride = 1;     // s_c
  int rows = 1;       // n1
  int cols = 1;       // n2

  int code_rows() const { return rows / stride; }
  int code_cols() const { return cols / stride; }
  std::size_t weight_count() const {
    return static_cast<std::size_t>(subbands) * channels * taps * taps;
  }
  void validate() const;
};

/// M filters x C channels x p x p taps with stride s_c. The same weights give
/// the synthesis operator D and (conjugate-transposed) the analysis operator D^H.
template <Scalar T>
struct ConvFilterBank {
  int subbands = 1;
  int channels = 1;
  int taps = 1;
  int stride = 1;
  ConvRole role = ConvRole::synthesis;
  std::vector<T> weights;  // [m][c][a][b]

  ConvFilterBank() = default;
  ConvFilterBank(int m, int c, int p, int s, ConvRole r, std::vector<T> w = {});

  ConvFilterBank with_role(ConvRole r) const {
    ConvFilterBank b = *this;
    b.role = r;
    return b;
  }
  ConvGeometry geometry(int rows, int cols) const { return {subbands, channels, taps, stride, rows, cols}; }
  std::span<T> filter(int m) { return std::span<T>(weights).subspan(m * filter_size(), filter_size()); }
  std::span<const T> filter(int m) const {
    return std::span<const T>(weights).subspan(m * filter_size(), filter_size());
  }
  std::size_t filter_size() const { return static_cast<std::size_t>(channels) * taps * taps; }

  bool operator==(const ConvFilterBank&) const = default;
};

// Raw kernels shared with the differentiation engine. Boundaries are
// circular; with h = p/2,
//   synthesis: x_c[s*u + a - h, s*v + b - h] += w[m,c,a,b] z_m[u,v]
//   analysis:  z_m[u,v] = sum conj(w[m,c,a,b]) x_c[s*u + a - h, s*v + b - h]
// so analysis is the exact adjoint of synthesis.

template <Scalar T>
void conv_synthesis_raw(const ConvGeometry& g, std::span<const T> w, std::span<const T> z, std::span<T> x);

template <Scalar T>
void conv_analysis_raw(const ConvGeometry& g, std::span<const T> w, std::span<const T> x, std::span<T> z);

/// gw += d<gx, synthesis(w, z)>/dw  (accumulates).
template <Scalar T>
void conv_synthesis_weight_grad(const ConvGeometry& g, std::span<const T> z, std::span<const T> gx,
                                std::span<T> gw);

/// gw += d<gz, analysis(w, x)>/dw  (accumulates).
template <Scalar T>
void conv_analysis_weight_grad(const ConvGeometry& g, std::span<const T> x, std::span<const T> gz,
                               std::span<T> gw);

template <Scalar T>
LatentCode<T> conv_analysis(const Image<T>& x, const ConvFilterBank<T>& bank);

template <Scalar T>
Image<T> conv_synthesis(const LatentCode<T>& z, const ConvFilterBank<T>& bank);

/// Scale every filter whose l2 norm exceeds one back onto the unit ball.
template <Scalar T>
ConvFilterBank<T> project_unit_norm(const ConvFilterBank<T>& bank);

/// Largest eigenvalue of D^H D on an n x n grid, by power iteration.
template <Scalar T>
Real conv_operator_norm_sq(const ConvFilterBank<T>& bank, int grid, int iters = 50, Real tol = 1e-4,
                           unsigned seed = 7);

/// Divide all weights so that ||D||_2 <= 1.
template <Scalar T>
ConvFilterBank<T> spectral_normalize(const ConvFilterBank<T>& bank, int grid = 64);

}  // namespace gcdl
