#include "groupcdl/core/noise.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace gcdl {

template <Scalar T>
Image<T> awgn(const Image<T>& x, Real sigma, std::uint64_t seed) {
  require(sigma >= 0, "awgn: sigma must be nonnegative");
  Image<T> y = x;
  if (sigma == 0) return y;
  std::mt19937_64 rng(seed);
  if constexpr (is_complex_v<T>) {
    std::normal_distribution<Real> nd(0.0, sigma / std::sqrt(2.0));
    for (auto& v : y.data()) {
      const Real re = nd(rng);
      const Real im = nd(rng);
      v += Complex(re, im);
    }
  } else {
    std::normal_distribution<Real> nd(0.0, sigma);
    for (auto& v : y.data()) v += nd(rng);
  }
  return y;
}

Real estimate_noise(const RealImage& y) {
  std::vector<Real> hh;
  const int h1 = y.rows() / 2, h2 = y.cols() / 2;
  hh.reserve(static_cast<std::size_t>(h1) * h2 * y.channels());
  for (int c = 0; c < y.channels(); ++c)
    for (int r = 0; r < h1; ++r)
      for (int k = 0; k < h2; ++k) {
        const Real a = y.at(c, 2 * r, 2 * k), b = y.at(c, 2 * r, 2 * k + 1);
        const Real d = y.at(c, 2 * r + 1, 2 * k), e = y.at(c, 2 * r + 1, 2 * k + 1);
        hh.push_back(std::abs(a - b - d + e) / 2.0);
      }
  if (hh.empty()) return 0;
  const auto mid = hh.begin() + static_cast<std::ptrdiff_t>(hh.size() / 2);
  std::nth_element(hh.begin(), mid, hh.end());
  Real med = *mid;
  if (hh.size() % 2 == 0) {
    const Real lo = *std::max_element(hh.begin(), mid);
    med = 0.5 * (med + lo);
  }
  return med / 0.6745;
}

template Image<Real> awgn(const Image<Real>&, Real, std::uint64_t);
template Image<Complex> awgn(const Image<Complex>&, Real, std::uint64_t);

}  // namespace gcdl
