#include <cmath>
#include <numbers>
#include <random>

#include "groupcdl/mri/mri.hpp"

namespace gcdl {

std::vector<std::uint8_t> gen_cartesian_mask(int n2, int accel, Real center_frac, std::uint64_t seed) {
  require(n2 >= 1 && accel >= 1, "gen_cartesian_mask: n2 and accel must be positive");
  require(center_frac >= 0 && center_frac <= 1, "gen_cartesian_mask: center_frac must lie in [0, 1]");
  const auto total = static_cast<int>(std::lround(static_cast<Real>(n2) / accel));
  const auto center = static_cast<int>(std::lround(center_frac * n2));
  require(center <= total, "gen_cartesian_mask: center lines exceed the sampling budget 1/accel");

  std::vector<std::uint8_t> mask(n2, 0);
  const int start = n2 / 2 - center / 2;
  for (int j = start; j < start + center; ++j) mask[j] = 1;
  std::vector<int> rest;
  for (int j = 0; j < n2; ++j)
    if (!mask[j]) rest.push_back(j);
  // partial Fisher-Yates
  std::mt19937_64 rng(seed);
  const int need = total - center;
  for (int i = 0; i < need; ++i) {
    std::uniform_int_distribution<int> pick(i, static_cast<int>(rest.size()) - 1);
    std::swap(rest[i], rest[pick(rng)]);
    mask[rest[i]] = 1;
  }
  return mask;
}

std::vector<int> sampled_lines(const std::vector<std::uint8_t>& mask) {
  std::vector<int> out;
  for (std::size_t j = 0; j < mask.size(); ++j)
    if (mask[j]) out.push_back(static_cast<int>(j));
  return out;
}

namespace {

struct Ellipse {
  Real value, a, b, x0, y0, phi_deg;
};

// modified Shepp-Logan set, coordinates in [-1, 1]
constexpr Ellipse kBase[] = {
    {1.0, 0.69, 0.92, 0.0, 0.0, 0},       {-0.8, 0.6624, 0.874, 0.0, -0.0184, 0},
    {-0.2, 0.11, 0.31, 0.22, 0.0, -18},   {-0.2, 0.16, 0.41, -0.22, 0.0, 18},
    {0.1, 0.21, 0.25, 0.0, 0.35, 0},      {0.1, 0.046, 0.046, 0.0, 0.1, 0},
    {0.1, 0.046, 0.046, 0.0, -0.1, 0},    {0.1, 0.046, 0.023, -0.08, -0.605, 0},
    {0.1, 0.023, 0.023, 0.0, -0.606, 0},  {0.1, 0.023, 0.046, 0.06, -0.605, 0},
};

}  // namespace

ComplexImage gen_phantom(int n, std::uint64_t seed) {
  require(n >= 8, "gen_phantom: size must be at least 8");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<Real> u(-1, 1);

  std::vector<Ellipse> es(std::begin(kBase), std::end(kBase));
  for (std::size_t i = 0; i < es.size(); ++i) {
    auto& e = es[i];
    e.x0 += 0.03 * u(rng);
    e.y0 += 0.03 * u(rng);
    e.a *= 1 + 0.1 * u(rng);
    e.b *= 1 + 0.1 * u(rng);
    e.phi_deg += 5 * u(rng);
    if (i >= 2) e.value *= 1 + 0.3 * u(rng);
  }
  std::uniform_int_distribution<int> extra(0, 3);
  for (int i = extra(rng); i > 0; --i)
    es.push_back({0.15 * u(rng), 0.05 + 0.05 * std::abs(u(rng)), 0.05 + 0.05 * std::abs(u(rng)), 0.4 * u(rng),
                  0.4 * u(rng), 90 * u(rng)});

  // smooth texture and phase from a few low-frequency waves
  Real tf[3][3], pf[3];
  for (auto& row : tf)
    for (auto& v : row) v = u(rng);
  for (auto& v : pf) v = u(rng);

  ComplexImage img(n, n, 1);
  Real peak = 0;
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      const Real x = (2.0 * c + 1) / n - 1, y = 1 - (2.0 * r + 1) / n;
      Real m = 0;
      for (const auto& e : es) {
        const Real t = e.phi_deg * std::numbers::pi / 180;
        const Real dx = x - e.x0, dy = y - e.y0;
        const Real xr = dx * std::cos(t) + dy * std::sin(t), yr = -dx * std::sin(t) + dy * std::cos(t);
        if ((xr * xr) / (e.a * e.a) + (yr * yr) / (e.b * e.b) <= 1) m += e.value;
      }
      if (m > 0) {
        Real tex = 0;
        for (int k = 0; k < 3; ++k) tex += tf[k][0] * std::sin((k + 2) * 3.0 * x + tf[k][1] * (k + 2) * 3.0 * y + 3 * tf[k][2]);
        m *= 1 + 0.08 * tex;
      }
      m = std::max<Real>(m, 0);
      const Real phase = 0.5 * std::numbers::pi * (pf[0] * x + pf[1] * y + 0.5 * pf[2] * x * y);
      img.at(0, r, c) = std::polar(m, phase);
      peak = std::max(peak, m);
    }
  for (auto& v : img.vec()) v /= peak;
  return img;
}

ComplexImage gen_sens_maps(int n1, int n2, int coils, std::uint64_t seed) {
  require(n1 >= 1 && n2 >= 1 && coils >= 1, "gen_sens_maps: dims and coil count must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<Real> u(-1, 1);
  ComplexImage s(n1, n2, coils);
  for (int c = 0; c < coils; ++c) {
    const Real ang = 2 * std::numbers::pi * c / coils + 0.2 * u(rng);
    const Real cx = 0.9 * std::cos(ang), cy = 0.9 * std::sin(ang);
    const Real width = 0.8 + 0.2 * u(rng);
    const Real ph0 = std::numbers::pi * u(rng), gx = u(rng), gy = u(rng);
    for (int r = 0; r < n1; ++r)
      for (int k = 0; k < n2; ++k) {
        const Real x = (2.0 * k + 1) / n2 - 1, y = 1 - (2.0 * r + 1) / n1;
        const Real d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
        s.at(c, r, k) = std::polar(std::exp(-d2 / (2 * width * width)), ph0 + gx * x + gy * y);
      }
  }
  const auto n = s.plane_size();
  for (std::size_t i = 0; i < n; ++i) {
    Real e = 0;
    for (int c = 0; c < coils; ++c) e += std::norm(s.plane(c)[i]);
    const Real inv = 1 / std::sqrt(e);
    for (int c = 0; c < coils; ++c) s.plane(c)[i] *= inv;
  }
  return s;
}

}  // namespace gcdl
