#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "groupcdl/core/planes.hpp"

namespace gcdl {

/// Synthetic grayscale texture in [0, 1]: tiled motifs, gratings and
/// piecewise-constant shapes layered together.
RealImage gen_texture(int n, std::uint64_t seed);

/// Training images: "textures", "phantoms" (magnitudes) or a directory of
/// .png/.cimg files (sorted by name, first `count`).
std::vector<RealImage> make_corpus(const std::string& kind, int count, int size, std::uint64_t seed);

/// Random crop x crop window, then one of the 8 rotations/flips.
RealImage augment(const RealImage& img, int crop, std::mt19937_64& rng);

/// Rotate by k quarter turns, optionally transposing first.
RealImage dihedral(const RealImage& img, int k, bool flip);

/// Seed for draw `index` of step `step` under a run seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t step, std::uint64_t index = 0);

}  // namespace gcdl
