#include "doctest.h"
#include "groupcdl/kernels/kernels.hpp"
#include "support/oracles.hpp"

using namespace gcdl;

TEST_CASE("avx2 kernels agree with the scalar reference") {
  const auto* simd = kernels::avx2_table();
  if (!simd || !kernels::cpu_supports(kernels::Isa::avx2)) {
    MESSAGE("AVX2 unavailable, nothing to compare");
    return;
  }
  const auto& ref = kernels::scalar_table();
  for (int w1 : {1, 3, 7}) {
    for (int w2 : {1, 2, 3, 5, 7, 9, 13}) {
      const std::size_t stride = w2 + 5;
      const auto pad = oracle::uniform(stride * w1, 11 + w1 * 31 + w2);
      const auto band = oracle::uniform(static_cast<std::size_t>(w1) * w2, 99 + w2);
      const Real a = ref.window_dot(band.data(), pad.data(), stride, w1, w2);
      const Real b = simd->window_dot(band.data(), pad.data(), stride, w1, w2);
      CHECK(std::abs(a - b) <= 1e-13 * (1 + std::abs(a)));

      auto b1 = band, b2 = band;
      ref.window_axpy(0.37, pad.data(), stride, w1, w2, b1.data());
      simd->window_axpy(0.37, pad.data(), stride, w1, w2, b2.data());
      CHECK(oracle::max_abs_diff(b1, b2) <= 1e-15);

      b1 = band, b2 = band;
      ref.window_sqdist(0.2, pad.data(), stride, w1, w2, b1.data());
      simd->window_sqdist(0.2, pad.data(), stride, w1, w2, b2.data());
      CHECK(oracle::max_abs_diff(b1, b2) <= 1e-15);
    }
  }
  for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 9u, 33u}) {
    const auto x = oracle::uniform(n, 5 + n), y = oracle::uniform(n, 50 + n);
    CHECK(std::abs(ref.dot(x.data(), y.data(), n) - simd->dot(x.data(), y.data(), n)) <= 1e-13);
  }
}

TEST_CASE("kernel selection can be forced") {
  const auto before = kernels::active().isa;
  kernels::set_active(kernels::Isa::scalar);
  CHECK(kernels::active().isa == kernels::Isa::scalar);
  if (kernels::cpu_supports(kernels::Isa::avx2) && kernels::avx2_table()) {
    kernels::set_active(kernels::Isa::avx2);
    CHECK(kernels::active().isa == kernels::Isa::avx2);
  } else {
    CHECK_THROWS_AS(kernels::set_active(kernels::Isa::avx2), ValidationError);
  }
  kernels::set_active(before);
}
