#include "support/problems.hpp"

#include <random>

#include "groupcdl/net/network.hpp"

namespace problems {

using namespace gcdl;

Planted planted(int n, int M, int p, int s, Real density, std::uint64_t seed) {
  NetHyper h;
  h.M = M;
  h.p = p;
  h.stride = s;
  Planted out;
  out.d = random_dictionary<Real>(h, seed);
  std::mt19937_64 rng(seed + 1);
  std::bernoulli_distribution on(density);
  std::uniform_real_distribution<Real> mag(0.5, 1.5);
  std::bernoulli_distribution sign(0.5);
  out.z = LatentCode<Real>(n / s, n / s, M);
  for (auto& v : out.z.vec())
    if (on(rng)) v = sign(rng) ? mag(rng) : -mag(rng);
  out.y = conv_synthesis(out.z, out.d);
  return out;
}

}  // namespace problems
