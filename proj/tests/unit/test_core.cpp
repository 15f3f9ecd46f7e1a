#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "groupcdl/core/conv.hpp"
#include "groupcdl/core/io.hpp"
#include "groupcdl/core/metrics.hpp"
#include "groupcdl/core/noise.hpp"
#include "support/oracles.hpp"

using namespace gcdl;

namespace {

template <Scalar T>
ConvFilterBank<T> random_bank(int M, int C, int p, int s, std::uint64_t seed) {
  ConvFilterBank<T> b(M, C, p, s, ConvRole::synthesis);
  auto w = oracle::random_planes<T>(1, 1, M * static_cast<int>(b.filter_size()), seed);
  b.weights = w.vec();
  return b;
}

std::filesystem::path tmp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("gcdl_test_" + name);
}

}  // namespace

TEST_CASE_TEMPLATE("conv adjoint identity", T, Real, Complex) {
  Real worst = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const int M = 1 + trial % 5, C = 1 + trial % 3, p = 1 + 2 * (trial % 4), s = 1 + trial % 3;
    const int n1 = s * (3 + trial % 4), n2 = s * (2 + trial % 5);
    const auto bank = random_bank<T>(M, C, p, s, 100 + trial);
    const auto x = oracle::random_planes<T>(n1, n2, C, 200 + trial);
    const auto z = oracle::random_planes<T>(n1 / s, n2 / s, M, 300 + trial);
    const auto ax = conv_analysis(x, bank.with_role(ConvRole::analysis));
    const auto dz = conv_synthesis(z, bank);
    const T lhs = [&] {
      T acc{};
      for (std::size_t i = 0; i < z.size(); ++i) acc += conj(ax.vec()[i]) * z.vec()[i];
      return acc;
    }();
    const T rhs = [&] {
      T acc{};
      for (std::size_t i = 0; i < x.size(); ++i) acc += conj(x.vec()[i]) * dz.vec()[i];
      return acc;
    }();
    const Real scale = norm2<T>(x.vec()) * norm2<T>(z.vec());
    worst = std::max(worst, std::abs(lhs - rhs) / scale);
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("conv synthesis matches the brute-force index formula") {
  const int M = 3, C = 2, p = 5, s = 2, n1 = 10, n2 = 8;
  const auto bank = random_bank<Complex>(M, C, p, s, 9);
  const auto z = oracle::random_planes<Complex>(n1 / s, n2 / s, M, 10);
  const auto x = conv_synthesis(z, bank);
  const auto ref = oracle::conv_synthesis(M, C, p, s, n1, n2, bank.weights, z.vec());
  Real d = 0;
  for (std::size_t i = 0; i < ref.size(); ++i) d = std::max(d, std::abs(ref[i] - x.vec()[i]));
  CHECK(d <= 1e-13);
}

TEST_CASE("identity filter and dimensions") {
  ConvFilterBank<Real> id(1, 1, 1, 1, ConvRole::synthesis, {1.0});
  const auto x = oracle::random_planes<Real>(5, 7, 1, 1);
  CHECK(conv_analysis(x, id.with_role(ConvRole::analysis)) == x);
  CHECK(conv_synthesis(x, id) == x);
  CHECK(conv_synthesis(LatentCode<Real>(5, 7, 1), id) == RealImage(5, 7, 1));

  ConvFilterBank<Real> table(169, 1, 7, 2, ConvRole::analysis, std::vector<Real>(169 * 49, 0.01));
  const auto z = conv_analysis(RealImage(8, 8, 1), table);
  CHECK(z.rows() == 4);
  CHECK(z.cols() == 4);
  CHECK(z.channels() == 169);
  CHECK_THROWS_AS(conv_analysis(RealImage(7, 8, 1), table), ValidationError);
}

TEST_CASE("conv linearity") {
  const auto bank = random_bank<Real>(3, 1, 3, 2, 4).with_role(ConvRole::analysis);
  const auto a = oracle::random_planes<Real>(8, 8, 1, 5), b = oracle::random_planes<Real>(8, 8, 1, 6);
  RealImage c(8, 8, 1);
  for (std::size_t i = 0; i < c.size(); ++i) c.vec()[i] = 2.5 * a.vec()[i] - b.vec()[i];
  const auto za = conv_analysis(a, bank), zb = conv_analysis(b, bank), zc = conv_analysis(c, bank);
  for (std::size_t i = 0; i < zc.size(); ++i) CHECK(zc.vec()[i] == doctest::Approx(2.5 * za.vec()[i] - zb.vec()[i]).epsilon(1e-13));
}

TEST_CASE("project_unit_norm") {
  ConvFilterBank<Real> b(2, 1, 1, 1, ConvRole::synthesis, {0.5, 4.0});
  const auto p = project_unit_norm(b);
  CHECK(p.weights[0] == 0.5);
  CHECK(p.weights[1] == 1.0);
  const auto r = random_bank<Complex>(4, 2, 3, 1, 8);
  const auto pr = project_unit_norm(r);
  CHECK(project_unit_norm(pr) == pr);
  for (int m = 0; m < 4; ++m) CHECK(norm2<Complex>(pr.filter(m)) <= 1 + 1e-15);
}

TEST_CASE("operator norm and spectral normalization") {
  // single one-hot filter: D is a permutation-like selection, ||D||^2 = 1
  ConvFilterBank<Real> b(1, 1, 3, 1, ConvRole::synthesis, {0, 0, 0, 0, 1, 0, 0, 0, 0});
  CHECK(conv_operator_norm_sq(b, 16, 200, 1e-12) == doctest::Approx(1.0).epsilon(1e-9));
  const auto r = random_bank<Real>(4, 1, 3, 2, 3);
  const auto n = spectral_normalize(r, 16);
  CHECK(conv_operator_norm_sq(n, 16, 500, 1e-12) <= 1.0 + 1e-6);
}

TEST_CASE("psnr values") {
  const auto x = oracle::random_planes<Real>(8, 8, 1, 1);
  CHECK(psnr(x, x) == kPsnrInfinite);
  auto y = x;
  for (auto& v : y.vec()) v += 0.1;
  CHECK(psnr(y, x) == doctest::Approx(20.0).epsilon(1e-12));
  for (auto& v : y.vec()) v -= 0.05;
  CHECK(psnr(y, x) == doctest::Approx(26.0206).epsilon(1e-5));
  CHECK_THROWS_AS(psnr(RealImage(8, 7, 1), x), ValidationError);
}

TEST_CASE("psnr decreases with noise variance") {
  const auto x = oracle::random_planes<Real>(32, 32, 1, 2);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Real prev = kPsnrInfinite;
    for (Real sigma : {0.01, 0.05, 0.1, 0.2}) {
      const Real p = psnr(awgn(x, sigma, seed), x);
      CHECK(p < prev);
      prev = p;
    }
  }
}

TEST_CASE("ssim properties") {
  auto x = oracle::random_planes<Real>(24, 24, 1, 3);
  CHECK(ssim(x, x) == doctest::Approx(1.0).epsilon(1e-12));
  // locally zero-mean content, otherwise the luminance term flips sign too
  for (int r = 0; r < 24; ++r)
    for (int c = 0; c < 24; ++c) x.at(0, r, c) = ((r + c) % 2 ? 0.5 : -0.5) + 0.05 * x.at(0, r, c);
  auto neg = x;
  for (auto& v : neg.vec()) v = -v;
  CHECK(ssim(neg, x) < 0);
  RealImage c(16, 16, 1, std::vector<Real>(256, 0.3));
  CHECK(ssim(c, c) == doctest::Approx(1.0));
  // small images shrink the window instead of failing
  const auto s = oracle::random_planes<Real>(5, 6, 1, 4);
  CHECK(ssim(s, s) == doctest::Approx(1.0));
}

TEST_CASE("ssim gradient against finite differences") {
  const auto x = oracle::random_planes<Real>(14, 14, 1, 5);
  auto y = awgn(x, 0.2, 6);
  std::vector<Real> g;
  ssim_with_grad(y, x, g, 2.0);
  const auto coords = oracle::sample_coords(y.size(), 40, 7);
  const auto fd = oracle::fd_gradient(
      [&](std::span<const Real> v) {
        RealImage t(14, 14, 1, std::vector<Real>(v.begin(), v.end()));
        return ssim(t, x, 2.0);
      },
      y.vec(), coords, 1e-6);
  CHECK(oracle::rel_error(g, fd, coords) <= 1e-6);
}

TEST_CASE("awgn") {
  const RealImage x(1000, 1000, 1);
  CHECK(awgn(x, 0.0, 1) == x);
  const Real sigma = 0.1;
  const auto y = awgn(x, sigma, 2);
  Real m = 0, v = 0;
  for (Real e : y.vec()) m += e;
  m /= static_cast<Real>(y.size());
  for (Real e : y.vec()) v += (e - m) * (e - m);
  v /= static_cast<Real>(y.size() - 1);
  CHECK(std::abs(v / (sigma * sigma) - 1) <= 0.01);
  CHECK(awgn(x, sigma, 2) == y);
  CHECK(awgn(x, sigma, 3) != y);

  const ComplexImage cz(500, 500, 1);
  const auto cy = awgn(cz, sigma, 4);
  Real e2 = 0, re2 = 0;
  for (const auto& e : cy.vec()) {
    e2 += std::norm(e);
    re2 += e.real() * e.real();
  }
  CHECK(std::abs(e2 / static_cast<Real>(cy.size()) / (sigma * sigma) - 1) <= 0.02);
  CHECK(std::abs(re2 / e2 - 0.5) <= 0.01);
}

TEST_CASE("estimate_noise") {
  const Real sigma = 25.0 / 255;
  std::vector<Real> est;
  for (std::uint64_t s = 0; s < 20; ++s) est.push_back(estimate_noise(awgn(RealImage(64, 64, 1), sigma, s)));
  std::nth_element(est.begin(), est.begin() + 10, est.end());
  CHECK(std::abs(est[10] / sigma - 1) <= 0.15);

  CHECK(estimate_noise(RealImage(32, 32, 1, std::vector<Real>(1024, 0.4))) == 0.0);

  // smooth texture: the finest diagonal subband is almost noise-only
  RealImage tex(128, 128, 1);
  for (int r = 0; r < 128; ++r)
    for (int c = 0; c < 128; ++c)
      tex.at(0, r, c) = 0.5 + 0.2 * std::sin(0.11 * r + 0.05 * c) + 0.15 * std::cos(0.07 * r * 0.3 - 0.13 * c);
  const Real s50 = 50.0 / 255;
  CHECK(std::abs(estimate_noise(awgn(tex, s50, 11)) / s50 - 1) <= 0.15);
}

TEST_CASE("cimg round trip") {
  const auto r = oracle::random_planes<Real>(5, 4, 2, 1);
  const auto p = tmp_path("r.cimg");
  write_cimg(p, r);
  CHECK(read_cimg_real(p) == r);
  write_cimg(p, r, ScalarKind::f32);
  const auto rf = read_cimg_real(p);
  CHECK(oracle::max_abs_diff(rf.vec(), r.vec()) <= 1e-7);

  const auto c = oracle::random_planes<Complex>(3, 6, 1, 2);
  write_cimg(p, c);
  CHECK(read_cimg_complex(p) == c);
  CHECK_THROWS_AS(read_cimg_real(p), ValidationError);

  std::ofstream(p, std::ios::binary) << "JUNKJUNKJUNK";
  CHECK_THROWS_AS(read_cimg_real(p), ValidationError);
  std::filesystem::remove(p);
}

TEST_CASE("png round trip") {
  RealImage x(6, 9, 1);
  for (std::size_t i = 0; i < x.size(); ++i) x.vec()[i] = static_cast<Real>(i % 17) / 16.0;
  const auto p = tmp_path("x.png");
  write_png(p, x, 16);
  CHECK(oracle::max_abs_diff(read_png(p).vec(), x.vec()) <= 0.5 / 65535 + 1e-12);
  write_png(p, x, 8);
  CHECK(oracle::max_abs_diff(read_image(p).vec(), x.vec()) <= 0.5 / 255 + 1e-12);
  std::ofstream(p, std::ios::binary) << "not a png";
  CHECK_THROWS_AS(read_png(p), ValidationError);
  std::filesystem::remove(p);
}

TEST_CASE("reflect pad, crop and circshift") {
  const auto x = oracle::random_planes<Real>(5, 3, 2, 1);
  const auto p = reflect_pad_to_multiple(x, 4);
  CHECK(p.rows() == 8);
  CHECK(p.cols() == 4);
  CHECK(p.at(1, 5, 0) == x.at(1, 3, 0));  // reflect excludes the edge
  CHECK(p.at(0, 2, 3) == x.at(0, 2, 1));
  CHECK(crop(p, 5, 3) == x);
  const auto s = circshift(x, 1, -1);
  CHECK(s.at(0, 1, 0) == x.at(0, 0, 1));
  CHECK(circshift(s, -1, 1) == x);
}
