#include "groupcdl/cli/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>

#include "groupcdl/cli/corpus.hpp"
#include "groupcdl/core/metrics.hpp"
#include "groupcdl/core/noise.hpp"
#include "groupcdl/optim/ops.hpp"

namespace gcdl {

namespace {

// held-out data never shares seeds with training draws
constexpr std::uint64_t kValSalt = 0x5EEDFACEull;

Real sigma_unit(Real s8) { return s8 / 255.0; }

template <Scalar T>
GroupCdlParams<T> initial_model(const RunConfig& cfg) {
  return init_ista(random_dictionary<T>(cfg.arch, cfg.train.init_seed), cfg.arch,
                   IstaInit{.rho = cfg.train.init_rho, .seed = cfg.train.init_seed});
}

// One training draw: builds the loss on the tape and reports the sigma used.
template <Scalar T>
using SampleFn = std::function<ad::Var(ad::Tape&, const ParamVars&, const GroupCdlParams<T>&, int step, int index,
                                       Real& sigma)>;

struct Snapshot {
  int step = 0;
  AdamState adam;
};

template <Scalar T>
void write_checkpoint(const std::filesystem::path& path, const GroupCdlParams<T>& params, const AdamState& st,
                      int step, Real lr_scale, int recoveries) {
  ExtraTensors extra;
  extra.emplace_back("adam.step", std::vector<Real>{static_cast<Real>(st.step)});
  extra.emplace_back("adam.lr", std::vector<Real>{st.lr});
  for (std::size_t i = 0; i < st.m.size(); ++i) {
    extra.emplace_back("adam.m." + std::to_string(i), st.m[i]);
    extra.emplace_back("adam.v." + std::to_string(i), st.v[i]);
  }
  extra.emplace_back("train.step", std::vector<Real>{static_cast<Real>(step)});
  extra.emplace_back("train.lr_scale", std::vector<Real>{lr_scale});
  extra.emplace_back("train.recoveries", std::vector<Real>{static_cast<Real>(recoveries)});
  save_checkpoint(path, params, extra);
}

const std::vector<Real>& find_extra(const ExtraTensors& e, const std::string& name) {
  for (const auto& [k, v] : e)
    if (k == name) return v;
  throw ValidationError("checkpoint: missing record '" + name + "' needed to resume");
}

template <Scalar T>
TrainReport train_loop(const RunConfig& cfg, GroupCdlParams<T>& params, const TrainOutputs& out,
                       const SampleFn<T>& sample, const std::function<Real(const GroupCdlParams<T>&)>& validate) {
  const auto& tc = cfg.train;
  TrainReport rep;
  AdamState st = adam_init(params, tc.lr_max);
  int step = 0;
  Real lr_scale = 1.0;

  if (!out.resume.empty()) {
    ExtraTensors extra;
    auto loaded = load_checkpoint<T>(out.resume, &extra);
    require(loaded.hyper == params.hyper, "train: checkpoint architecture differs from the config");
    params = std::move(loaded);
    st.step = static_cast<std::int64_t>(find_extra(extra, "adam.step").at(0));
    st.lr = find_extra(extra, "adam.lr").at(0);
    for (std::size_t i = 0; i < st.m.size(); ++i) {
      st.m[i] = find_extra(extra, "adam.m." + std::to_string(i));
      st.v[i] = find_extra(extra, "adam.v." + std::to_string(i));
      require(st.m[i].size() == st.v[i].size(), "checkpoint: optimizer moments do not match the parameters");
    }
    step = static_cast<int>(find_extra(extra, "train.step").at(0));
    lr_scale = find_extra(extra, "train.lr_scale").at(0);
    rep.nan_recoveries = static_cast<int>(find_extra(extra, "train.recoveries").at(0));
  }

  std::ofstream log;
  if (!out.log_csv.empty()) {
    const bool append = !out.resume.empty() && std::filesystem::exists(out.log_csv);
    log.open(out.log_csv, append ? std::ios::app : std::ios::trunc);
    require(static_cast<bool>(log), "train: cannot open log " + out.log_csv.string());
    if (!append) log << "step,loss,psnr_val,lr,sigma_range\n";
    log << std::setprecision(10);
  }

  auto good_params = params;
  Snapshot good{step, st};
  const int end = out.stop_after ? std::min(tc.steps, step + *out.stop_after) : tc.steps;

  while (step < end) {
    const Real warm = tc.warmup_steps > 0 ? std::min(1.0, (step + 1.0) / tc.warmup_steps) : 1.0;
    const Real lr = lr_scale * warm * cosine_lr(step, tc.steps, tc.lr_max, tc.lr_min);
    ParamGrads grads;
    Real loss = 0, s_lo = 1e300, s_hi = 0;
    bool finite = true;
    for (int b = 0; b < tc.batch && finite; ++b) {
      ad::Tape tape;
      const auto vars = bind_params(tape, params, true);
      Real sigma = 0;
      const ad::Var l = sample(tape, vars, params, step, b, sigma);
      const Real lv = tape.scalar(l) / tc.batch;
      s_lo = std::min(s_lo, sigma * 255);
      s_hi = std::max(s_hi, sigma * 255);
      if (!std::isfinite(lv)) {
        finite = false;
        break;
      }
      loss += lv;
      tape.backward(l);
      auto g = collect_grads(tape, vars, params);
      if (grads.empty()) {
        grads = std::move(g);
      } else {
        for (std::size_t i = 0; i < g.size(); ++i)
          for (std::size_t j = 0; j < g[i].size(); ++j) grads[i][j] += g[i][j];
      }
    }
    if (finite) {
      for (auto& gi : grads)
        for (auto& v : gi) v /= tc.batch;
      st.lr = lr;
      try {
        adam_step(st, grads, params);
      } catch (const NumericError&) {
        finite = false;
      }
    }
    if (!finite) {
      // restore the last good state and halve the learning rate
      if (++rep.nan_recoveries > tc.nan_retries)
        throw NumericError("train: non-finite loss at step " + std::to_string(step) + ", retries exhausted");
      params = good_params;
      st = good.adam;
      step = good.step;
      lr_scale *= 0.5;
      continue;
    }
    ++step;

    TrainLogRow row{step, loss, std::numeric_limits<Real>::quiet_NaN(), lr, s_lo, s_hi};
    if (step % tc.val_every == 0 || step == end) row.psnr_val = validate(params);
    rep.log.push_back(row);
    if (log.is_open()) {
      log << row.step << ',' << row.loss << ',';
      if (!std::isnan(row.psnr_val)) log << row.psnr_val;
      log << ',' << row.lr << ',' << std::fixed << std::setprecision(2) << row.sigma_lo << '-' << row.sigma_hi
          << std::defaultfloat << std::setprecision(10) << '\n';
    }
    if (step % tc.checkpoint_every == 0 || step == end) {
      good_params = params;
      good = {step, st};
      if (!out.checkpoint.empty()) write_checkpoint(out.checkpoint, params, st, step, lr_scale, rep.nan_recoveries);
    }
  }
  rep.final_step = step;
  return rep;
}

}  // namespace

std::vector<DenoiseSample> denoise_validation_set(const RunConfig& cfg, Real sigma_8bit, int count) {
  const auto imgs = make_corpus(cfg.data.corpus == "phantoms" ? "phantoms" : cfg.data.corpus, count, cfg.data.size,
                                cfg.seed ^ kValSalt);
  std::vector<DenoiseSample> out;
  for (std::size_t i = 0; i < imgs.size(); ++i) {
    DenoiseSample s;
    s.clean = imgs[i];
    s.sigma = sigma_unit(sigma_8bit);
    s.noisy = awgn(s.clean, s.sigma, mix_seed(cfg.seed ^ kValSalt, 1, i));
    out.push_back(std::move(s));
  }
  return out;
}

MriSystem mri_system(const RunConfig& cfg, int accel, std::uint64_t sens_seed) {
  const int n = cfg.data.size;
  const Real cf = std::min(cfg.mri.center_frac, 1.0 / accel);
  const auto lines = accel == 1 ? std::vector<std::uint8_t>(n, 1) : gen_cartesian_mask(n, accel, cf, cfg.mri.mask_seed);
  return MriSystem::cartesian(lines, n, gen_sens_maps(n, n, cfg.mri.coils, sens_seed));
}

std::vector<MriSample> mri_validation_set(const RunConfig& cfg, Real sigma_8bit, int count, int accel) {
  std::vector<MriSample> out;
  for (int i = 0; i < count; ++i) {
    const auto key = mix_seed(cfg.seed ^ kValSalt, 2, i);
    MriSample s;
    s.clean = gen_phantom(cfg.data.size, key);
    s.sys = mri_system(cfg, accel, key + 1);
    s.sigma = sigma_unit(sigma_8bit);
    s.y = simulate_kspace(s.clean, s.sys, s.sigma, key + 2);
    out.push_back(std::move(s));
  }
  return out;
}

GroupCdlParams<Real> initial_denoiser(const RunConfig& cfg) { return initial_model<Real>(cfg); }

GroupCdlParams<Complex> initial_mri_model(const RunConfig& cfg) {
  auto h = cfg;
  h.arch.channels = 1;
  return initial_model<Complex>(h);
}

Real evaluate_denoiser(const GroupCdlParams<Real>& params, const std::vector<DenoiseSample>& set, bool blind,
                       bool estimate) {
  Real total = 0;
  for (const auto& s : set) {
    const Real sigma = estimate ? estimate_noise(s.noisy) : s.sigma;
    total += psnr(groupcdl_apply(params, s.noisy, {sigma, blind, {}}), s.clean);
  }
  return total / static_cast<Real>(set.size());
}

Real evaluate_mri(const GroupCdlParams<Complex>& params, const std::vector<MriSample>& set, bool blind) {
  Real total = 0;
  for (const auto& s : set) total += psnr(magnitude(groupcdl_mri_apply(params, s.y, s.sigma, s.sys, blind)), magnitude(s.clean));
  return total / static_cast<Real>(set.size());
}

TrainReport train_denoiser(const RunConfig& cfg, GroupCdlParams<Real>& params, const TrainOutputs& out) {
  cfg.validate();
  const auto corpus = make_corpus(cfg.data.corpus, cfg.data.count, cfg.data.size, cfg.seed);
  const auto val = denoise_validation_set(cfg, cfg.noise.eval, cfg.train.val_images);
  const bool blind = cfg.noise.blind;
  const auto& tc = cfg.train;

  SampleFn<Real> sample = [&](ad::Tape& t, const ParamVars& v, const GroupCdlParams<Real>& p, int step, int b,
                              Real& sigma) {
    std::mt19937_64 rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(step), static_cast<std::uint64_t>(b)));
    const auto& img = corpus[std::uniform_int_distribution<std::size_t>(0, corpus.size() - 1)(rng)];
    const RealImage x = augment(img, tc.crop, rng);
    sigma = sigma_unit(std::uniform_real_distribution<Real>(cfg.noise.train_min, cfg.noise.train_max)(rng));
    const RealImage y = awgn(x, sigma, rng());
    const ad::Var xhat = groupcdl_forward(t, v, p, y, {sigma, blind, {}});
    return tc.loss == "mse" ? ad::sum_squares(t, xhat, x.vec()) : ad::l1_ssim(t, xhat, x, tc.l1_weight);
  };
  auto rep = train_loop<Real>(cfg, params, out, sample,
                              [&](const GroupCdlParams<Real>& p) { return evaluate_denoiser(p, val, blind); });
  rep.val_psnr = evaluate_denoiser(params, val, blind);
  Real base = 0;
  for (const auto& s : val) base += psnr(s.noisy, s.clean);
  rep.baseline_psnr = base / static_cast<Real>(val.size());
  return rep;
}

TrainReport train_mri(const RunConfig& cfg, GroupCdlParams<Complex>& params, const TrainOutputs& out) {
  cfg.validate();
  require(cfg.data.size % cfg.arch.stride == 0, "train_mri: data.size must be a multiple of s_c");
  const auto val = mri_validation_set(cfg, cfg.noise.eval, cfg.train.val_images, cfg.mri.accel);
  const bool blind = cfg.noise.blind;
  const auto& tc = cfg.train;

  SampleFn<Complex> sample = [&](ad::Tape& t, const ParamVars& v, const GroupCdlParams<Complex>& p, int step, int b,
                                 Real& sigma) {
    const auto key = mix_seed(cfg.seed, static_cast<std::uint64_t>(step), static_cast<std::uint64_t>(b));
    std::mt19937_64 rng(key);
    const auto x = gen_phantom(cfg.data.size, rng());
    const auto sys = mri_system(cfg, cfg.mri.accel, rng());
    sigma = sigma_unit(std::uniform_real_distribution<Real>(cfg.noise.train_min, cfg.noise.train_max)(rng));
    const auto y = simulate_kspace(x, sys, sigma, rng());
    const ad::Var xhat = groupcdl_mri_forward(t, v, p, y, sigma, sys, blind);
    if (tc.loss == "mse") {
      std::vector<Real> target(as_real(std::span<const Complex>(x.vec())).begin(),
                               as_real(std::span<const Complex>(x.vec())).end());
      return ad::sum_squares(t, xhat, target);
    }
    return ad::l1_ssim(t, xhat, magnitude(x), tc.l1_weight);
  };
  auto rep = train_loop<Complex>(cfg, params, out, sample,
                                 [&](const GroupCdlParams<Complex>& p) { return evaluate_mri(p, val, blind); });
  rep.val_psnr = evaluate_mri(params, val, blind);
  Real base = 0;
  for (const auto& s : val) base += psnr(magnitude(zero_filled(s.y, s.sys)), magnitude(s.clean));
  rep.baseline_psnr = base / static_cast<Real>(val.size());
  return rep;
}

}  // namespace gcdl
