#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "groupcdl/net/network.hpp"
#include "groupcdl/optim/ops.hpp"
#include "support/oracles.hpp"

using namespace gcdl;

namespace {

NetHyper toy(int K = 2, ThresholdMode mode = ThresholdMode::group) {
  NetHyper h;
  h.p = 3;
  h.K = K;
  h.M = 4;
  h.Mh = 3;
  h.W = 3;
  h.dK = 1;
  h.stride = 2;
  h.mode = mode;
  return h;
}

// Perturb every tensor so no parameter sits at a symmetric or kink point.
template <Scalar T>
void jitter(GroupCdlParams<T>& p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<Real> u(-0.1, 0.1);
  p.for_each_tensor([&](const TensorRef& r) {
    if (r.name == "gamma") {
      r.data[0] = 0.6;
    } else if (r.name.find("tau0") != std::string::npos) {
      for (auto& v : r.data) v = 0.02 + 0.01 * (u(rng) + 0.1);
    } else if (r.name.find("tau1") != std::string::npos) {
      for (auto& v : r.data) v = 1e-4 * (1 + 5 * (u(rng) + 0.1));
    } else if (r.name.find("rho") != std::string::npos) {
      for (auto& v : r.data) v = 0.3 + u(rng);
    } else if (r.name == "w_beta") {
      for (auto& v : r.data) v = std::abs(v + u(rng));
    } else {
      for (auto& v : r.data) v += u(rng);
    }
  });
}

template <Scalar T>
Real loss_of(const GroupCdlParams<T>& p, const Image<T>& y, const std::vector<Real>& target, Real sigma) {
  ad::Tape t;
  const auto vars = bind_params(t, p, false);
  const auto x = groupcdl_forward(t, vars, p, y, {sigma, false, {}});
  return t.scalar(ad::sum_squares(t, x, target));
}

template <Scalar T>
void full_network_fd(std::uint64_t seed) {
  auto p = init_ista(random_dictionary<T>(toy(), seed), toy(), {1e-3, 0, 0.8, 1.0, seed});
  jitter(p, seed + 1);
  const auto y = oracle::random_planes<T>(8, 8, 1, seed + 2);
  const auto tgt = oracle::random_planes<T>(8, 8, 1, seed + 3);
  std::vector<Real> target;
  for (const T& v : tgt.vec()) {
    if constexpr (is_complex_v<T>) {
      target.push_back(v.real());
      target.push_back(v.imag());
    } else {
      target.push_back(v);
    }
  }
  const Real sigma = 0.1;
  ad::Tape t;
  const auto vars = bind_params(t, p, true);
  const auto x = groupcdl_forward(t, vars, p, y, {sigma, false, {}});
  t.backward(ad::sum_squares(t, x, target));
  const auto grads = collect_grads(t, vars, p);

  // flatten all params, check 50 random coordinates
  std::vector<Real> flat;
  p.for_each_tensor([&](const TensorRef& r) { flat.insert(flat.end(), r.data.begin(), r.data.end()); });
  std::vector<Real> gflat;
  for (const auto& g : grads) gflat.insert(gflat.end(), g.begin(), g.end());
  REQUIRE(gflat.size() == flat.size());
  auto f = [&](std::span<const Real> v) {
    auto q = p;
    std::size_t i = 0;
    q.for_each_tensor([&](const TensorRef& r) {
      for (auto& e : r.data) e = v[i++];
    });
    return loss_of(q, y, target, sigma);
  };
  const auto coords = oracle::sample_coords(flat.size(), 50, seed + 4);
  const auto fd = oracle::fd_gradient(f, flat, coords, 1e-6);
  const Real err = oracle::rel_error(gflat, fd, coords);
  MESSAGE("full network rel err " << err);
  CHECK(err <= 1e-4);
}

}  // namespace

TEST_CASE("identity pipeline") {
  NetHyper h;
  h.p = 1;
  h.K = 1;
  h.M = 1;
  h.Mh = 1;
  h.W = 1;
  h.dK = 1;
  h.stride = 1;
  h.mode = ThresholdMode::elementwise;
  ConvFilterBank<Real> d(1, 1, 1, 1, ConvRole::synthesis, {1.0});
  auto p = init_ista(d, h, {0.0, 0.0, 0.8, 1.0, 0});
  const auto y = oracle::random_planes<Real>(5, 7, 1, 3);
  const auto x = groupcdl_apply(p, y, {});
  CHECK(oracle::max_abs_diff(x.vec(), y.vec()) <= 1e-15);
}

TEST_CASE("refresh schedule") {
  CHECK(refresh_schedule(0, 5));
  CHECK_FALSE(refresh_schedule(3, 5));
  for (int k = 0; k < 10; ++k) CHECK(refresh_schedule(k, 1));
}

TEST_CASE("ista init ties all banks to D0") {
  NetHyper h;
  auto d0 = random_dictionary<Real>(h, 4);
  auto p = init_ista(d0, h);
  for (const auto& l : p.layers) {
    CHECK(l.a.weights == d0.weights);
    CHECK(l.b.weights == d0.weights);
    for (Real t : l.thresholds.tau0) CHECK(t == 1e-3);
    for (Real t : l.thresholds.tau1) CHECK(t == 0.0);
  }
  CHECK(p.transforms.gamma == 0.8);
  CHECK(p.transforms.w_theta == p.transforms.w_beta);
  CHECK(conv_operator_norm_sq(d0, 32) <= 1.0 + 1e-6);
}

TEST_CASE("output shape follows the input, including odd sizes") {
  NetHyper h;
  auto p = init_ista(random_dictionary<Real>(h, 1), h);
  for (auto [r, c] : {std::pair{16, 16}, std::pair{15, 18}, std::pair{9, 11}}) {
    const auto y = oracle::random_planes<Real>(r, c, 1, r * c);
    const auto x = groupcdl_apply(p, y, {0.1, false, {}});
    CHECK(x.rows() == r);
    CHECK(x.cols() == c);
  }
}

TEST_CASE("full network gradient matches finite differences (real)") { full_network_fd<Real>(100); }
TEST_CASE("full network gradient matches finite differences (complex)") { full_network_fd<Complex>(200); }
TEST_CASE("full network gradient matches finite differences (elementwise)") {
  auto h = toy(2, ThresholdMode::elementwise);
  auto p = init_ista(random_dictionary<Real>(h, 5), h);
  jitter(p, 6);
  const auto y = oracle::random_planes<Real>(8, 8, 1, 7);
  const auto target = oracle::random_planes<Real>(8, 8, 1, 8).vec();
  ad::Tape t;
  const auto vars = bind_params(t, p, true);
  t.backward(ad::sum_squares(t, groupcdl_forward(t, vars, p, y, {0.1, false, {}}), target));
  const auto grads = collect_grads(t, vars, p);
  std::vector<Real> flat, gflat;
  p.for_each_tensor([&](const TensorRef& r) { flat.insert(flat.end(), r.data.begin(), r.data.end()); });
  for (const auto& g : grads) gflat.insert(gflat.end(), g.begin(), g.end());
  auto f = [&](std::span<const Real> v) {
    auto q = p;
    std::size_t i = 0;
    q.for_each_tensor([&](const TensorRef& r) {
      for (auto& e : r.data) e = v[i++];
    });
    return loss_of(q, y, target, 0.1);
  };
  const auto coords = oracle::sample_coords(flat.size(), 50, 9);
  CHECK(oracle::rel_error(gflat, oracle::fd_gradient(f, flat, coords, 1e-6), coords) <= 1e-4);
}

TEST_CASE("translation covariance") {
  NetHyper h = toy(3);
  auto p = init_ista(random_dictionary<Real>(h, 11), h);
  jitter(p, 12);
  const auto y = oracle::random_planes<Real>(12, 12, 1, 13);
  const auto x = groupcdl_apply(p, y, {0.1, false, {}});
  const auto xs = groupcdl_apply(p, circshift(y, 2, 4), {0.1, false, {}});
  CHECK(oracle::max_abs_diff(xs.vec(), circshift(x, 2, 4).vec()) <= 1e-8);

  h.stride = 1;
  auto p1 = init_ista(random_dictionary<Real>(h, 14), h);
  jitter(p1, 15);
  const auto x1 = groupcdl_apply(p1, y, {0.1, false, {}});
  const auto xs1 = groupcdl_apply(p1, circshift(y, 1, -1), {0.1, false, {}});
  CHECK(oracle::max_abs_diff(xs1.vec(), circshift(x1, 1, -1).vec()) <= 1e-8);
}

TEST_CASE("elementwise mode with tau1 == 0 ignores sigma") {
  auto h = toy(3, ThresholdMode::elementwise);
  auto p = init_ista(random_dictionary<Real>(h, 21), h);
  const auto y = oracle::random_planes<Real>(8, 8, 1, 22);
  CHECK(groupcdl_apply(p, y, {0.0, false, {}}) == groupcdl_apply(p, y, {0.3, false, {}}));
}

TEST_CASE("forward is deterministic") {
  NetHyper h;
  auto p = init_ista(random_dictionary<Real>(h, 31), h);
  const auto y = oracle::random_planes<Real>(16, 16, 1, 32);
  CHECK(groupcdl_apply(p, y, {0.1, false, {}}) == groupcdl_apply(p, y, {0.1, false, {}}));
}

TEST_CASE("checkpoint round trip") {
  const auto dir = std::filesystem::temp_directory_path();
  NetHyper h;
  auto p = init_ista(random_dictionary<Real>(h, 41), h);
  jitter(p, 42);
  ExtraTensors extra{{"adam.step", {7.0}}, {"adam.m.d", std::vector<Real>(3, 0.5)}};
  save_checkpoint(dir / "gcdl_rt.gcdl", p, extra);
  ExtraTensors back;
  const auto q = load_checkpoint<Real>(dir / "gcdl_rt.gcdl", &back);
  CHECK(q == p);
  CHECK(back.size() == 2);
  CHECK_FALSE(checkpoint_is_complex(dir / "gcdl_rt.gcdl"));

  auto pc = init_ista(random_dictionary<Complex>(h, 43), h);
  save_checkpoint(dir / "gcdl_rt_c.gcdl", pc);
  CHECK(load_checkpoint<Complex>(dir / "gcdl_rt_c.gcdl") == pc);
  CHECK(checkpoint_is_complex(dir / "gcdl_rt_c.gcdl"));
  CHECK_THROWS_AS(load_checkpoint<Real>(dir / "gcdl_rt_c.gcdl"), ValidationError);
}
