#pragma once

// Independent reference implementations used by the unit and acceptance
// tests. Nothing here shares code with the library kernels beyond plain types.

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "groupcdl/core/planes.hpp"

namespace oracle {

using gcdl::Complex;
using gcdl::Real;

/// Circular distance along an axis of length n.
int circ_dist(int a, int b, int n);

/// mask[i*Q + j] == true iff j lies in the W-window of i, judged by the
/// circular inf-norm predicate |di|, |dj| <= W/2 (window clamped to the axis
/// length when W exceeds it).
std::vector<bool> window_mask(int q1, int q2, int W);

/// Dense -1/2 ||k[i] - q[j]||^2 over all pairs, masked with `outside`.
std::vector<Real> dist_sim(int q1, int q2, int W, int channels, std::span<const Real> k, std::span<const Real> q,
                           Real outside);
std::vector<Real> row_softmax(std::span<const Real> s, int Q);
/// y_m = A x_m for a dense Q x Q matrix.
std::vector<Real> matvec(std::span<const Real> a, int Q, int channels, std::span<const Real> x);
std::vector<Real> transpose(std::span<const Real> a, int Q);

std::vector<Real> uniform(std::size_t n, std::uint64_t seed, Real lo = -1, Real hi = 1);
std::vector<Complex> uniform_complex(std::size_t n, std::uint64_t seed);

template <gcdl::Scalar T>
gcdl::Planes<T> random_planes(int rows, int cols, int channels, std::uint64_t seed) {
  if constexpr (gcdl::is_complex_v<T>) {
    return gcdl::Planes<T>(rows, cols, channels,
                           uniform_complex(static_cast<std::size_t>(rows) * cols * channels, seed));
  } else {
    return gcdl::Planes<T>(rows, cols, channels, uniform(static_cast<std::size_t>(rows) * cols * channels, seed));
  }
}

Real max_abs_diff(std::span<const Real> a, std::span<const Real> b);

/// Central-difference gradient of a scalar function of a real vector,
/// evaluated at `coords` (all coordinates when empty).
std::vector<Real> fd_gradient(const std::function<Real(std::span<const Real>)>& f, std::span<const Real> x,
                              const std::vector<std::size_t>& coords, Real eps = 1e-5);

/// ||analytic - fd||_inf / max(||fd||_inf, floor), over the sampled coords.
Real rel_error(std::span<const Real> analytic, std::span<const Real> fd, const std::vector<std::size_t>& coords,
               Real floor = 1e-8);

std::vector<std::size_t> sample_coords(std::size_t n, std::size_t count, std::uint64_t seed);

/// Brute-force strided circular convolutions straight from the index formula.
std::vector<Complex> conv_synthesis(int M, int C, int p, int s, int n1, int n2, std::span<const Complex> w,
                                    std::span<const Complex> z);

}  // namespace oracle
