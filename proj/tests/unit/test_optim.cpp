#include <cmath>

#include "doctest.h"
#include "groupcdl/core/noise.hpp"
#include "groupcdl/optim/optim.hpp"
#include "support/oracles.hpp"
#include "support/problems.hpp"

using namespace gcdl;
using problems::planted;

TEST_CASE("every registered primitive passes its gradient check") {
  for (const auto& id : grad_check_ops()) {
    const Real tol = id.starts_with("network") ? 1e-4 : 1e-6;
    for (std::uint64_t seed : {1u, 2u}) {
      const Real err = grad_check(id, seed);
      INFO(id << " seed " << seed << " err " << err);
      CHECK(err <= tol);
    }
  }
  CHECK_THROWS_AS(grad_check("no_such_op"), ValidationError);
}

TEST_CASE("mse loss") {
  RealImage a(3, 3, 1), b(3, 3, 1);
  CHECK(mse_loss(a, a) == 0.0);
  b.at(0, 1, 1) = 0.1;
  CHECK(mse_loss(b, a) == doctest::Approx(0.01).epsilon(1e-12));
  const auto x = oracle::random_planes<Real>(4, 4, 1, 1), y = oracle::random_planes<Real>(4, 4, 1, 2);
  std::vector<Real> g;
  mse_loss(x, y, &g);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(g[i] == doctest::Approx(2 * (x.vec()[i] - y.vec()[i])));
  mse_loss(x, x, &g);
  for (Real v : g) CHECK(v == 0.0);
}

TEST_CASE("l1-ssim loss") {
  const auto x = oracle::random_planes<Real>(16, 16, 1, 3);
  RealImage xp = x;
  for (auto& v : xp.vec()) v = std::abs(v);
  CHECK(l1_ssim_loss(xp, xp, 0.5) == doctest::Approx(0.0).epsilon(1e-12));
  auto y = xp;
  for (auto& v : y.vec()) v += 0.1;
  CHECK(l1_ssim_loss(y, xp, 1.0) == doctest::Approx(0.1));
  // complex inputs use magnitudes
  ComplexImage c(16, 16, 1);
  for (std::size_t i = 0; i < c.size(); ++i) c.vec()[i] = std::polar(xp.vec()[i], 0.3 * static_cast<Real>(i));
  CHECK(l1_ssim_loss(c, xp, 0.5) <= 1e-12);
}

TEST_CASE("adam first step and zero gradient") {
  NetHyper h;
  h.M = 4;
  h.Mh = 2;
  h.K = 1;
  auto p = init_ista(random_dictionary<Real>(h, 1), h, {0.5, 0.5, 0.5, 2.0, 0});
  auto st = adam_init(p, 1e-3);
  ParamGrads zero;
  p.for_each_tensor([&](const TensorRef& r) { zero.emplace_back(r.data.size(), 0.0); });
  auto q = p;
  adam_step(st, zero, q);
  CHECK(q == p);

  auto st2 = adam_init(p, 1e-3);
  ParamGrads g = zero;
  // layer-0 tau0 sits at index 3 in tensor order (d, a, b, tau0, ...)
  for (auto& v : g[3]) v = 0.7;
  auto r = p;
  adam_step(st2, g, r);
  for (std::size_t i = 0; i < r.layers[0].thresholds.tau0.size(); ++i)
    CHECK(r.layers[0].thresholds.tau0[i] == doctest::Approx(0.5 - 1e-3).epsilon(1e-9));

  g[3][0] = NAN;
  auto before = r;
  auto st_before = st2;
  CHECK_THROWS_AS(adam_step(st2, g, r), NumericError);
  CHECK(r == before);
  CHECK(st2 == st_before);
}

TEST_CASE("project_params") {
  NetHyper h;
  h.M = 4;
  h.Mh = 2;
  h.K = 2;
  auto p = init_ista(random_dictionary<Real>(h, 2), h);
  auto q = p;
  project_params(q);
  CHECK(q == p);
  p.transforms.gamma = 1.3;
  p.transforms.w_beta[0] = -0.4;
  p.layers[1].thresholds.tau0[0] = -1;
  p.layers[0].rho[1] = -3;
  for (auto& w : p.d.weights) w *= 5;
  project_params(p);
  CHECK(p.transforms.gamma == 1.0);
  CHECK(p.transforms.w_beta[0] == 0.0);
  CHECK(p.layers[1].thresholds.tau0[0] == 0.0);
  CHECK(p.layers[0].rho[1] == 1e-6);
  for (int m = 0; m < p.d.subbands; ++m) CHECK(norm2<Real>(p.d.filter(m)) <= 1 + 1e-12);
  auto again = p;
  project_params(again);
  CHECK(again == p);
}

TEST_CASE("cosine schedule end points") {
  CHECK(cosine_lr(0, 100, 5e-4, 2e-6) == doctest::Approx(5e-4));
  CHECK(cosine_lr(99, 100, 5e-4, 2e-6) == doctest::Approx(2e-6));
  CHECK(cosine_lr(50, 101, 1.0, 0.0) == doctest::Approx(0.5));
}

TEST_CASE("pgm: large lambda keeps zero") {
  auto pr = planted(16, 4, 3, 1, 0.1, 5);
  const auto gz = conv_analysis(pr.y, pr.d.with_role(ConvRole::analysis));
  Real mx = 0;
  for (Real v : gz.vec()) mx = std::max(mx, std::abs(v));
  PgmOptions o;
  o.lambda = mx * 1.01;
  o.iters = 20;
  const auto res = pgm_solve(pr.y, pr.d, o);
  for (Real v : res.z.vec()) CHECK(v == 0.0);
}

TEST_CASE("pgm objective is monotone for eta = 0.9/L") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto pr = planted(16, 4, 3, 1 + s % 2, 0.1, 100 + s);
    auto y = awgn(pr.y, 0.05, s);
    PgmOptions o;
    o.lambda = 0.05;
    o.eta = 0.9 / conv_operator_norm_sq(pr.d, 16, 500, 1e-10);
    o.iters = 60;
    const auto res = pgm_solve(y, pr.d, o);
    for (std::size_t k = 1; k < res.objective.size(); ++k)
      CHECK(res.objective[k] <= res.objective[k - 1] * (1 + 1e-12));
  }
}

TEST_CASE("pgm with a group prior runs and shrinks") {
  auto pr = planted(16, 4, 3, 1, 0.1, 7);
  BccbPattern pat(16, 16, 3);
  const auto A = circ_uniform(pat);
  PgmOptions o;
  o.prior = PriorKind::group;
  o.adjacency = &A;
  o.lambda = 0.02;
  o.eta = 0.9;
  o.iters = 50;
  const auto res = pgm_solve(pr.y, pr.d, o);
  CHECK(res.objective.back() < res.objective.front());
}

TEST_CASE("pgm divergence is reported") {
  auto pr = planted(16, 4, 3, 1, 0.1, 9);
  PgmOptions o;
  o.lambda = 0.0;
  o.eta = 50.0;
  o.iters = 200;
  CHECK_THROWS_AS(pgm_solve(pr.y, pr.d, o), NumericError);
}

TEST_CASE("dictionary learning on a planted dictionary") {
  const int M = 4, p = 5;
  NetHyper h;
  h.M = M;
  h.p = p;
  h.stride = 1;
  const auto dtrue = random_dictionary<Real>(h, 77);
  std::vector<RealImage> data;
  std::mt19937_64 rng(78);
  std::bernoulli_distribution on(0.03);
  std::uniform_real_distribution<Real> mag(0.5, 1.5);
  for (int i = 0; i < 6; ++i) {
    LatentCode<Real> z(24, 24, M);
    for (auto& v : z.vec())
      if (on(rng)) v = mag(rng);
    data.push_back(conv_synthesis(z, dtrue));
  }
  DictLearnOptions o;
  o.subbands = M;
  o.taps = p;
  o.lambda = 0.02;
  o.epochs = 40;
  o.pgm_iters = 40;
  o.seed = 3;
  const auto res = dict_learn(data, o);
  for (std::size_t k = 1; k < res.objective.size(); ++k) CHECK(res.objective[k] <= res.objective[k - 1] * (1 + 1e-9));
  for (int m = 0; m < res.d.subbands; ++m) CHECK(norm2<Real>(res.d.filter(m)) <= 1 + 1e-12);

  // planted objective: codes solved for the true dictionary
  PgmOptions po;
  po.lambda = o.lambda;
  po.eta = 0.95 / conv_operator_norm_sq(dtrue, 24);
  po.iters = 500;
  Real planted_obj = 0;
  for (const auto& y : data) planted_obj += pgm_solve(y, dtrue, po).objective.back();
  MESSAGE("learned " << res.objective.back() << " planted " << planted_obj);
  CHECK(res.objective.back() <= 1.1 * planted_obj);
  CHECK_THROWS_AS(dict_learn({}, o), ValidationError);
}

TEST_CASE("planted sparse code recovery") {
  // the acceptance-suite problem: 64x64, M = 16, 5% support, no noise
  auto pr = planted(64, 16, 3, 2, 0.05, 2024);
  PgmOptions o;
  o.lambda = 1e-6;
  o.eta = 1.0 / conv_operator_norm_sq(pr.d, 64, 500, 1e-12);
  o.iters = 500;
  const auto res = pgm_solve(pr.y, pr.d, o);
  const auto x = conv_synthesis(res.z, pr.d);
  Real num = 0, den = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    num += std::pow(x.vec()[i] - pr.y.vec()[i], 2);
    den += std::pow(pr.y.vec()[i], 2);
  }
  const Real rel = std::sqrt(num / den);
  std::size_t missed = 0;
  for (std::size_t i = 0; i < pr.z.size(); ++i)
    if (pr.z.vec()[i] != 0 && res.z.vec()[i] == 0) ++missed;
  MESSAGE("rel err " << rel << " missed " << missed);
  CHECK(rel <= 1e-3);
  CHECK(missed == 0);
  for (std::size_t k = 1; k < res.objective.size(); ++k) CHECK(res.objective[k] <= res.objective[k - 1] * (1 + 1e-12));
}
