#pragma once

#include <cstdint>

#include "groupcdl/core/planes.hpp"

namespace gcdl {

/// y = x + nu, nu ~ N(0, sigma^2 I). Complex images get circular Gaussian
/// noise with E|nu|^2 = sigma^2 (sigma^2/2 per component).
template <Scalar T>
Image<T> awgn(const Image<T>& x, Real sigma, std::uint64_t seed);

/// Robust AWGN level estimate: median |HH| / 0.6745 over the finest diagonal
/// Haar subband, pooled across channels.
Real estimate_noise(const RealImage& y);

}  // namespace gcdl
