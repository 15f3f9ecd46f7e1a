#include <cmath>
#include <random>

#include "groupcdl/optim/optim.hpp"

namespace gcdl {

namespace {

Real prior_value(const LatentCode<Real>& z, const PgmOptions& opt) {
  Real s = 0;
  if (opt.prior == PriorKind::l1) {
    for (Real v : z.vec()) s += std::abs(v);
    return s;
  }
  LatentCode<Real> sq(z.rows(), z.cols(), z.channels());
  for (std::size_t i = 0; i < sq.size(); ++i) sq.vec()[i] = z.vec()[i] * z.vec()[i];
  for (Real v : circ_att(*opt.adjacency, sq).vec()) s += std::sqrt(std::max(v, 0.0));
  return s;
}

void check_options(const PgmOptions& opt) {
  require(opt.eta > 0, "pgm: eta must be positive");
  require(opt.lambda >= 0, "pgm: lambda must be nonnegative");
  require(opt.iters >= 0, "pgm: iteration count must be nonnegative");
  require(opt.prior == PriorKind::l1 || opt.adjacency, "pgm: the group prior needs an adjacency");
}

}  // namespace

Real bpdn_objective(const Image<Real>& y, const ConvFilterBank<Real>& d, const LatentCode<Real>& z,
                    const PgmOptions& opt) {
  const auto x = conv_synthesis(z, d.with_role(ConvRole::synthesis));
  Real fit = 0;
  for (std::size_t i = 0; i < x.size(); ++i) fit += (x.vec()[i] - y.vec()[i]) * (x.vec()[i] - y.vec()[i]);
  return 0.5 * fit + opt.lambda * prior_value(z, opt);
}

PgmResult pgm_solve(const Image<Real>& y, const ConvFilterBank<Real>& d, const PgmOptions& opt) {
  check_options(opt);
  const auto syn = d.with_role(ConvRole::synthesis);
  const auto ana = d.with_role(ConvRole::analysis);
  const auto g = syn.geometry(y.rows(), y.cols());
  g.validate();
  require(y.channels() == d.channels, "pgm: channel mismatch");
  PgmResult res{LatentCode<Real>(g.code_rows(), g.code_cols(), d.subbands), {}};
  if (opt.init) {
    require(opt.init->same_shape(res.z), "pgm: warm start has the wrong shape");
    res.z = *opt.init;
  }
  const std::vector<Real> tau(d.subbands, opt.eta * opt.lambda);
  res.objective.push_back(bpdn_objective(y, syn, res.z, opt));
  const Real start = res.objective.front();
  for (int k = 0; k < opt.iters; ++k) {
    auto r = conv_synthesis(res.z, syn);
    for (std::size_t i = 0; i < r.size(); ++i) r.vec()[i] -= y.vec()[i];
    const auto grad = conv_analysis(r, ana);
    auto v = res.z;
    for (std::size_t i = 0; i < v.size(); ++i) v.vec()[i] -= opt.eta * grad.vec()[i];
    res.z = opt.prior == PriorKind::l1 ? soft_threshold(v, tau) : group_threshold_classical(v, tau, *opt.adjacency);
    const Real obj = bpdn_objective(y, syn, res.z, opt);
    res.objective.push_back(obj);
    if (!std::isfinite(obj) || (start > 0 && obj > 10 * start))
      throw NumericError("pgm: diverged at iteration " + std::to_string(k + 1));
  }
  return res;
}

DictLearnResult dict_learn(const std::vector<RealImage>& dataset, const DictLearnOptions& opt,
                           const ConvFilterBank<Real>* init) {
  require(!dataset.empty(), "dict_learn: empty dataset");
  require(opt.epochs >= 1 && opt.pgm_iters >= 1 && opt.dict_steps >= 1, "dict_learn: counts must be positive");
  const int C = dataset.front().channels();
  ConvFilterBank<Real> d;
  if (init) {
    d = init->with_role(ConvRole::synthesis);
  } else {
    d = ConvFilterBank<Real>(opt.subbands, C, opt.taps, opt.stride, ConvRole::synthesis);
    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<Real> nd;
    for (auto& w : d.weights) w = nd(rng);
    for (int m = 0; m < d.subbands; ++m) {
      auto f = d.filter(m);
      const Real n = norm2<Real>(f);
      for (auto& v : f) v /= n;
    }
  }
  const int grid = dataset.front().rows();
  std::vector<LatentCode<Real>> codes;
  for (const auto& y : dataset) {
    const auto g = d.geometry(y.rows(), y.cols());
    g.validate();
    codes.emplace_back(g.code_rows(), g.code_cols(), d.subbands);
  }
  PgmOptions popt;
  popt.lambda = opt.lambda;
  auto data_term = [&](const ConvFilterBank<Real>& dd) {
    Real s = 0;
    for (std::size_t n = 0; n < dataset.size(); ++n) {
      const auto x = conv_synthesis(codes[n], dd);
      for (std::size_t i = 0; i < x.size(); ++i) s += 0.5 * std::pow(x.vec()[i] - dataset[n].vec()[i], 2);
    }
    return s;
  };
  auto l1_term = [&] {
    Real s = 0;
    for (const auto& z : codes)
      for (Real v : z.vec()) s += std::abs(v);
    return opt.lambda * s;
  };

  DictLearnResult res;
  Real step = 1.0;
  for (int e = 0; e < opt.epochs; ++e) {
    // sparse coding, warm started
    // the power-iteration estimate of L can sit slightly below the true value
    popt.eta = 0.95 / std::max(conv_operator_norm_sq(d, grid), 1e-12);
    popt.iters = opt.pgm_iters;
    for (std::size_t n = 0; n < dataset.size(); ++n) {
      popt.init = &codes[n];
      codes[n] = pgm_solve(dataset[n], d, popt).z;
    }
    popt.init = nullptr;
    // projected gradient on D with backtracking on the data term
    for (int s = 0; s < opt.dict_steps; ++s) {
      std::vector<Real> grad(d.weights.size(), 0.0);
      for (std::size_t n = 0; n < dataset.size(); ++n) {
        auto r = conv_synthesis(codes[n], d);
        for (std::size_t i = 0; i < r.size(); ++i) r.vec()[i] -= dataset[n].vec()[i];
        conv_synthesis_weight_grad<Real>(d.geometry(r.rows(), r.cols()), codes[n].data(), r.data(), grad);
      }
      const Real f0 = data_term(d);
      step *= 2;
      for (int bt = 0; bt < 40; ++bt) {
        auto trial = d;
        for (std::size_t i = 0; i < grad.size(); ++i) trial.weights[i] -= step * grad[i];
        trial = project_unit_norm(trial);
        if (data_term(trial) <= f0) {
          d = trial;
          break;
        }
        step *= 0.5;
      }
    }
    res.objective.push_back(data_term(d) + l1_term());
  }
  res.d = d;
  return res;
}

}  // namespace gcdl
