#pragma once

// Synthetic problem generators shared by the unit and acceptance tests.

#include <cstdint>

#include "groupcdl/core/conv.hpp"

namespace problems {

using gcdl::Real;

struct Planted {
  gcdl::ConvFilterBank<Real> d;
  gcdl::LatentCode<Real> z;
  gcdl::RealImage y;  // D z, noiseless
};

/// Random unit-norm dictionary and a Bernoulli(density) code with entries in
/// +-[0.5, 1.5] on the (n/s) x (n/s) grid.
Planted planted(int n, int M, int p, int s, Real density, std::uint64_t seed);

}  // namespace problems
