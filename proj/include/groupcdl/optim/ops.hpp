#pragma once

#include <functional>

#include "groupcdl/core/metrics.hpp"
#include "groupcdl/optim/tape.hpp"

// Differentiable primitives recorded on a Tape. Image-like values are planes
// (channel-major); complex planes are interleaved. Per-channel parameters
// (thresholds, rho) are Shape::vector values.
namespace gcdl::ad {

Var add(Tape& t, Var a, Var b);
Var sub(Tape& t, Var a, Var b);
Var scale(Tape& t, Var a, Real c);
/// a + c with c a constant of the same size.
Var add_const(Tape& t, Var a, std::span<const Real> c);

/// Strided circular analysis with weights w ([m][c][a][b], same scalar kind as x).
Var conv_analysis(Tape& t, Var x, Var w, int subbands, int taps, int stride);
Var conv_synthesis(Tape& t, Var z, Var w, int channels, int taps, int stride);

/// Real pixel-wise transform W (rows x cols matrix, row-major, stored as a
/// Shape::planes(rows, cols, 1) value). out[h] = sum_m W[h,m] z[m];
/// transposed: out[m] = sum_h W[h,m] z[h].
Var pixelwise(Tape& t, Var w, Var z, bool transposed = false);
/// out[h] = x[h] / rho[h].
Var scale_channels_inv(Tape& t, Var x, Var rho);

Var dist_sim(Tape& t, Var k, Var q, int window);
Var row_softmax(Tape& t, Var s);
/// gamma * a_new + (1 - gamma) * a_old, gamma a scalar value.
Var blend(Tape& t, Var a_new, Var a_old, Var gamma);
/// Real planes, |u|^2 per element.
Var abs2(Tape& t, Var u);
/// A (sparse) applied channel-wise to real planes x.
Var circ_att(Tape& t, Var a, Var x);
/// sqrt(max(x, 0)); derivative taken as 0 where x == 0.
Var sqrt(Tape& t, Var x);

/// z o (1 - tau/d)_+ with tau per channel and d real planes shaped like z.
/// Entries with d == 0 are zeroed.
Var shrink(Tape& t, Var z, Var tau, Var d);
/// z o (1 - tau/|z|)_+ per channel.
Var soft_threshold(Tape& t, Var z, Var tau);
/// tau0 + s * tau1.
Var affine(Tape& t, Var tau0, Var tau1, Real s);

using LinearMap = std::function<void(std::span<const Real>, std::span<Real>)>;
/// y = L x for a fixed linear map; backward applies `adjoint`.
Var linear(Tape& t, Var x, Shape out, LinearMap forward, LinearMap adjoint);

/// Top-left rows x cols window of x.
Var crop(Tape& t, Var x, int rows, int cols);

/// ||xhat - target||^2 (complex: squared modulus).
Var sum_squares(Tape& t, Var xhat, std::span<const Real> target);
/// weight * mean|m - target| + (1 - weight) * (1 - ssim(m, target)), with m
/// the magnitude of xhat when complex.
Var l1_ssim(Tape& t, Var xhat, const RealImage& target, Real weight, Real peak = 1.0);

}  // namespace gcdl::ad
