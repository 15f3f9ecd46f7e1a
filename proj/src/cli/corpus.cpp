#include "groupcdl/cli/corpus.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <numbers>

#include "groupcdl/core/io.hpp"
#include "groupcdl/mri/mri.hpp"

namespace gcdl {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t step, std::uint64_t index) {
  // splitmix64 over the combined key
  std::uint64_t z = seed * 0x9E3779B97F4A7C15ull ^ (step + 0x632BE59BD9B4E019ull) * 0xBF58476D1CE4E5B9ull ^
                    (index + 1) * 0x94D049BB133111EBull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

namespace {

using Rng = std::mt19937_64;

Real uni(Rng& r, Real lo, Real hi) { return std::uniform_real_distribution<Real>(lo, hi)(r); }
int uni_int(Rng& r, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(r); }

// small random motif tiled over the plane with period (pr, pc)
std::vector<Real> tiled_motif(int n, Rng& r) {
  const int pr = uni_int(r, 5, 12), pc = uni_int(r, 5, 12);
  std::vector<Real> motif(pr * pc);
  const int blobs = uni_int(r, 1, 3);
  std::vector<std::array<Real, 4>> b(blobs);
  for (auto& e : b) e = {uni(r, 0, pr), uni(r, 0, pc), uni(r, 0.8, 2.5), uni(r, -1, 1)};
  for (int i = 0; i < pr; ++i)
    for (int j = 0; j < pc; ++j) {
      Real v = 0;
      for (const auto& e : b) {
        Real di = std::abs(i - e[0]), dj = std::abs(j - e[1]);
        di = std::min(di, pr - di);
        dj = std::min(dj, pc - dj);
        v += e[3] * std::exp(-(di * di + dj * dj) / (2 * e[2] * e[2]));
      }
      motif[i * pc + j] = v;
    }
  std::vector<Real> out(static_cast<std::size_t>(n) * n);
  const int oi = uni_int(r, 0, pr - 1), oj = uni_int(r, 0, pc - 1);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out[i * n + j] = motif[((i + oi) % pr) * pc + (j + oj) % pc];
  return out;
}

std::vector<Real> grating(int n, Rng& r) {
  const Real period = uni(r, 4, 14), th = uni(r, 0, std::numbers::pi), ph = uni(r, 0, 2 * std::numbers::pi);
  const bool square = uni(r, 0, 1) < 0.5;
  std::vector<Real> out(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const Real s = std::sin(2 * std::numbers::pi * (i * std::cos(th) + j * std::sin(th)) / period + ph);
      out[i * n + j] = square ? (s > 0 ? 1.0 : -1.0) : s;
    }
  return out;
}

// region labels from random ellipses and half-planes
std::vector<int> regions(int n, Rng& r, int& count) {
  std::vector<int> lab(static_cast<std::size_t>(n) * n, 0);
  count = 1;
  const int shapes = uni_int(r, 1, 4);
  for (int s = 0; s < shapes; ++s, ++count) {
    const bool ellipse = uni(r, 0, 1) < 0.6;
    const Real ci = uni(r, 0, n), cj = uni(r, 0, n), a = uni(r, n / 8.0, n / 2.5), b = uni(r, n / 8.0, n / 2.5);
    const Real th = uni(r, 0, std::numbers::pi);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const Real di = i - ci, dj = j - cj;
        const Real u = di * std::cos(th) + dj * std::sin(th), v = -di * std::sin(th) + dj * std::cos(th);
        const bool in = ellipse ? (u * u) / (a * a) + (v * v) / (b * b) <= 1 : u > 0;
        if (in) lab[i * n + j] = count;
      }
  }
  return lab;
}

}  // namespace

RealImage gen_texture(int n, std::uint64_t seed) {
  require(n >= 8, "gen_texture: size must be at least 8");
  Rng r(seed);
  int nreg = 0;
  const auto lab = regions(n, r, nreg);
  // each region gets a base level and one texture layer
  std::vector<Real> level(nreg), amp(nreg);
  std::vector<std::vector<Real>> tex(nreg);
  for (int k = 0; k < nreg; ++k) {
    level[k] = uni(r, 0.2, 0.8);
    amp[k] = uni(r, 0.05, 0.25);
    const Real kind = uni(r, 0, 1);
    if (kind < 0.5) tex[k] = tiled_motif(n, r);
    else if (kind < 0.85) tex[k] = grating(n, r);
    else tex[k].assign(static_cast<std::size_t>(n) * n, 0.0);
  }
  RealImage img(n, n, 1);
  for (std::size_t i = 0; i < img.size(); ++i) {
    const int k = lab[i];
    img.vec()[i] = std::clamp(level[k] + amp[k] * tex[k][i], 0.0, 1.0);
  }
  return img;
}

std::vector<RealImage> make_corpus(const std::string& kind, int count, int size, std::uint64_t seed) {
  require(count >= 1, "make_corpus: count must be positive");
  std::vector<RealImage> out;
  if (kind == "textures") {
    for (int i = 0; i < count; ++i) out.push_back(gen_texture(size, mix_seed(seed, 0, i)));
  } else if (kind == "phantoms") {
    for (int i = 0; i < count; ++i) out.push_back(magnitude(gen_phantom(size, mix_seed(seed, 0, i))));
  } else {
    const std::filesystem::path dir(kind);
    require(std::filesystem::is_directory(dir), "make_corpus: '" + kind + "' is neither a corpus kind nor a directory");
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
      const auto ext = e.path().extension();
      if (ext == ".png" || ext == ".cimg") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    require(!files.empty(), "make_corpus: no .png or .cimg files in " + kind);
    for (std::size_t i = 0; i < files.size() && static_cast<int>(i) < count; ++i) out.push_back(read_image(files[i]));
  }
  return out;
}

RealImage dihedral(const RealImage& img, int k, bool flip) {
  RealImage cur = img;
  if (flip) {
    RealImage t(cur.cols(), cur.rows(), cur.channels());
    for (int c = 0; c < cur.channels(); ++c)
      for (int i = 0; i < cur.rows(); ++i)
        for (int j = 0; j < cur.cols(); ++j) t.at(c, j, i) = cur.at(c, i, j);
    cur = std::move(t);
  }
  for (int q = 0; q < ((k % 4) + 4) % 4; ++q) {
    RealImage t(cur.cols(), cur.rows(), cur.channels());
    for (int c = 0; c < cur.channels(); ++c)
      for (int i = 0; i < cur.rows(); ++i)
        for (int j = 0; j < cur.cols(); ++j) t.at(c, cur.cols() - 1 - j, i) = cur.at(c, i, j);
    cur = std::move(t);
  }
  return cur;
}

RealImage augment(const RealImage& img, int crop, std::mt19937_64& rng) {
  require(img.rows() >= crop && img.cols() >= crop, "augment: crop larger than the image");
  const int r0 = uni_int(rng, 0, img.rows() - crop), c0 = uni_int(rng, 0, img.cols() - crop);
  RealImage w(crop, crop, img.channels());
  for (int c = 0; c < img.channels(); ++c)
    for (int i = 0; i < crop; ++i)
      for (int j = 0; j < crop; ++j) w.at(c, i, j) = img.at(c, r0 + i, c0 + j);
  const int k = uni_int(rng, 0, 3);
  const bool flip = uni_int(rng, 0, 1) == 1;
  return dihedral(w, k, flip);
}

}  // namespace gcdl
