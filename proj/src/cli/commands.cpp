#include "groupcdl/cli/commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include "CLI11.hpp"
#include "groupcdl/cli/bench.hpp"
#include "groupcdl/cli/corpus.hpp"
#include "groupcdl/cli/plot.hpp"
#include "groupcdl/cli/train.hpp"
#include "groupcdl/core/metrics.hpp"
#include "groupcdl/core/noise.hpp"
#include "json.hpp"

namespace gcdl {

namespace fs = std::filesystem;

namespace {

fs::path out_dir(const RunConfig& cfg) {
  fs::path d(cfg.out_dir);
  fs::create_directories(d);
  return d;
}

void write_metrics(const fs::path& dir, const Metrics& m) {
  nlohmann::json j(m);
  std::ofstream(dir / "metrics.json") << j.dump(2) << "\n";
}

std::ofstream open_csv(const fs::path& path, const std::string& header) {
  std::ofstream os(path);
  require(static_cast<bool>(os), "cannot open for writing: " + path.string());
  os << std::setprecision(10) << header << "\n";
  return os;
}

std::string stem(const std::string& name, std::size_t i) {
  return name.empty() ? "img" + std::to_string(i) : fs::path(name).stem().string();
}

Real mean(const std::vector<Real>& v) {
  Real s = 0;
  for (Real x : v) s += x;
  return v.empty() ? 0 : s / static_cast<Real>(v.size());
}

}  // namespace

Metrics cmd_train(const RunConfig& cfg) {
  cfg.validate();
  const auto dir = out_dir(cfg);
  save_config(dir / "config.json", cfg);
  TrainOutputs o;
  o.log_csv = dir / "train_log.csv";
  o.checkpoint = dir / "model.gcdl";
  if (!cfg.checkpoint.empty() && fs::exists(cfg.checkpoint)) o.resume = cfg.checkpoint;

  TrainReport rep;
  if (cfg.train.problem == Problem::denoise) {
    auto p = initial_denoiser(cfg);
    rep = train_denoiser(cfg, p, o);
  } else {
    auto p = initial_mri_model(cfg);
    rep = train_mri(cfg, p, o);
  }
  Metrics m{{"val_psnr", rep.val_psnr},
            {"baseline_psnr", rep.baseline_psnr},
            {"gain_db", rep.val_psnr - rep.baseline_psnr},
            {"nan_recoveries", rep.nan_recoveries},
            {"steps", rep.final_step}};
  if (!rep.log.empty()) m["final_loss"] = rep.log.back().loss;
  write_metrics(dir, m);
  return m;
}

Metrics cmd_denoise(const RunConfig& cfg) {
  cfg.validate();
  require(!cfg.checkpoint.empty() && fs::exists(cfg.checkpoint), "denoise: checkpoint not found: " + cfg.checkpoint);
  require(!checkpoint_is_complex(cfg.checkpoint), "denoise: checkpoint holds a complex (CS-MRI) model");
  const auto params = load_checkpoint<Real>(cfg.checkpoint);
  const auto dir = out_dir(cfg);
  const Real sigma = cfg.noise.eval / 255.0;
  const bool blind = cfg.noise.blind;

  std::vector<std::pair<std::string, RealImage>> inputs;
  if (cfg.data.inputs.empty()) {
    for (auto& s : denoise_validation_set(cfg, 0, cfg.data.count)) inputs.emplace_back("", std::move(s.clean));
  } else {
    for (const auto& p : cfg.data.inputs) inputs.emplace_back(p, read_image(p));
  }

  auto csv = open_csv(dir / "denoise_metrics.csv", "index,name,sigma,sigma_hat,psnr_noisy,psnr,ssim");
  std::vector<Real> ps, ss, pn;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto& [name, img] = inputs[i];
    require(img.channels() == params.hyper.channels, "denoise: image channels differ from the model");
    const bool ref = !cfg.data.inputs_noisy;
    const RealImage noisy = ref ? awgn(img, sigma, mix_seed(cfg.seed, 3, i)) : img;
    const Real sig_hat = cfg.noise.use_true_sigma ? sigma : estimate_noise(noisy);
    const RealImage out = groupcdl_apply(params, noisy, {sig_hat, blind, {}});
    const auto base = dir / stem(name, i);
    write_png(base.string() + "_denoised.png", out);
    write_cimg(base.string() + "_denoised.cimg", out);
    csv << i << ',' << stem(name, i) << ',' << sigma << ',' << sig_hat << ',';
    if (ref) {
      write_png(base.string() + "_noisy.png", noisy);
      pn.push_back(psnr(noisy, img));
      ps.push_back(psnr(out, img));
      ss.push_back(ssim(out, img));
      csv << pn.back() << ',' << ps.back() << ',' << ss.back() << '\n';
    } else {
      csv << ",,\n";
    }
  }
  Metrics m{{"images", static_cast<Real>(inputs.size())}};
  if (!ps.empty()) {
    m["psnr"] = mean(ps);
    m["ssim"] = mean(ss);
    m["psnr_noisy"] = mean(pn);
    csv << "mean,," << sigma << ",," << m["psnr_noisy"] << ',' << m["psnr"] << ',' << m["ssim"] << '\n';
  }
  write_metrics(dir, m);
  return m;
}

Metrics cmd_csmri(const RunConfig& cfg) {
  cfg.validate();
  require(!cfg.checkpoint.empty() && fs::exists(cfg.checkpoint), "csmri: checkpoint not found: " + cfg.checkpoint);
  require(checkpoint_is_complex(cfg.checkpoint), "csmri: checkpoint holds a real-valued model");
  const auto params = load_checkpoint<Complex>(cfg.checkpoint);
  const auto dir = out_dir(cfg);
  const bool blind = cfg.noise.blind;

  std::vector<std::pair<std::string, MriSample>> cases;
  if (cfg.data.inputs.empty()) {
    for (auto& s : mri_validation_set(cfg, cfg.noise.eval, cfg.data.count, cfg.mri.accel)) cases.emplace_back("", std::move(s));
  } else {
    // <name>.cksp with a mask chunk; optional <name>.sens.cimg and <name>.truth.cimg
    for (const auto& p : cfg.data.inputs) {
      auto f = read_cksp(p);
      require(!f.mask.empty(), "csmri: " + p + " has no MASK chunk");
      MriSample s;
      const fs::path base = fs::path(p).replace_extension();
      const fs::path sens = base.string() + ".sens.cimg", truth = base.string() + ".truth.cimg";
      s.sys.n1 = f.data.rows();
      s.sys.n2 = f.data.cols();
      s.sys.mask = f.mask;
      if (fs::exists(sens)) {
        s.sys.sens = read_cimg_complex(sens);
      } else {
        require(f.data.channels() == 1, "csmri: multi-coil input needs " + sens.string());
        s.sys.sens = ComplexImage(s.sys.n1, s.sys.n2, 1, std::vector<Complex>(f.data.plane_size(), 1.0));
      }
      require(s.sys.sens.channels() == f.data.channels(), "csmri: coil count differs between k-space and maps");
      s.sys.validate();
      if (fs::exists(truth)) s.clean = read_cimg_complex(truth);
      s.y = std::move(f.data);
      s.sigma = cfg.noise.eval / 255.0;
      cases.emplace_back(p, std::move(s));
    }
  }

  auto csv = open_csv(dir / "csmri_metrics.csv", "index,name,accel,psnr_zf,ssim_zf,psnr,ssim");
  std::vector<Real> pz, sz, pr, sr;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& [name, s] = cases[i];
    const auto zf = magnitude(zero_filled(s.y, s.sys));
    const auto rec = magnitude(groupcdl_mri_apply(params, s.y, s.sigma, s.sys, blind));
    const auto base = (dir / stem(name, i)).string();
    write_png(base + "_recon.png", rec);
    write_png(base + "_zf.png", zf);
    write_cimg(base + "_recon.cimg", rec);
    csv << i << ',' << stem(name, i) << ',' << cfg.mri.accel << ',';
    if (!s.clean.empty()) {
      const auto truth = magnitude(s.clean);
      RealImage err(rec.rows(), rec.cols(), 1);
      for (std::size_t k = 0; k < err.size(); ++k) err.vec()[k] = std::abs(rec.vec()[k] - truth.vec()[k]);
      write_png(base + "_error.png", heatmap(err, 0.2));
      pz.push_back(psnr(zf, truth));
      sz.push_back(ssim(zf, truth));
      pr.push_back(psnr(rec, truth));
      sr.push_back(ssim(rec, truth));
      csv << pz.back() << ',' << sz.back() << ',' << pr.back() << ',' << sr.back() << '\n';
    } else {
      csv << ",,,\n";
    }
  }
  Metrics m{{"images", static_cast<Real>(cases.size())}, {"accel", static_cast<Real>(cfg.mri.accel)}};
  if (!pr.empty()) {
    m["psnr_zf"] = mean(pz);
    m["ssim_zf"] = mean(sz);
    m["psnr"] = mean(pr);
    m["ssim"] = mean(sr);
    csv << "mean,," << cfg.mri.accel << ',' << m["psnr_zf"] << ',' << m["ssim_zf"] << ',' << m["psnr"] << ','
        << m["ssim"] << '\n';
  }
  write_metrics(dir, m);
  return m;
}

Metrics cmd_bench(const RunConfig& cfg) {
  cfg.validate();
  const auto dir = out_dir(cfg);
  const auto rows = run_bench(cfg.bench, cfg.seed);
  auto csv = open_csv(dir / "bench.csv",
                      "W,s_w,burden_analytic,burden_counted,seconds_circatt,seconds_pbda,ratio,consensus_gap,"
                      "pbda_vs_circatt_rms");
  PlotSeries analytic{{}, {}, {0.1, 0.3, 0.8}, false}, measured{{}, {}, {0.85, 0.2, 0.1}, true};
  Metrics m;
  for (const auto& r : rows) {
    csv << r.W << ',' << r.s_w << ',' << r.burden_analytic << ',' << r.burden_counted << ',' << r.seconds_circatt
        << ',' << r.seconds_pbda << ',' << r.ratio << ',' << r.consensus_gap << ',' << r.pbda_vs_circatt_rms << '\n';
    analytic.x.push_back(r.W);
    analytic.y.push_back(r.burden_analytic);
    measured.x.push_back(r.W);
    measured.y.push_back(r.ratio);
    const std::string k = "W" + std::to_string(r.W) + ".";
    m[k + "burden_analytic"] = r.burden_analytic;
    m[k + "ratio"] = r.ratio;
    m[k + "consensus_gap"] = r.consensus_gap;
  }
  write_line_plot(dir / "bench.png", {analytic, measured}, 640, 400, true);
  write_metrics(dir, m);
  return m;
}

Metrics cmd_gradcheck(const RunConfig& cfg) {
  cfg.validate();
  const auto dir = out_dir(cfg);
  const auto ops = cfg.gradcheck.ops.empty() ? grad_check_ops() : cfg.gradcheck.ops;
  auto csv = open_csv(dir / "gradcheck.csv", "op,seed,rel_err,tol,pass");
  Real failures = 0, worst = 0;
  for (const auto& op : ops) {
    const Real tol = op.starts_with("network") ? cfg.gradcheck.network_tol : cfg.gradcheck.tol;
    const Real err = grad_check(op, cfg.seed, cfg.gradcheck.eps);
    const bool ok = err <= tol;
    if (!ok) failures += 1;
    worst = std::max(worst, err);
    csv << op << ',' << cfg.seed << ',' << err << ',' << tol << ',' << (ok ? 1 : 0) << '\n';
  }
  Metrics m{{"ops", static_cast<Real>(ops.size())}, {"failures", failures}, {"worst_rel_err", worst}};
  write_metrics(dir, m);
  return m;
}

Metrics run_task(const RunConfig& cfg) {
  switch (cfg.task) {
    case Task::train: return cmd_train(cfg);
    case Task::denoise: return cmd_denoise(cfg);
    case Task::csmri: return cmd_csmri(cfg);
    case Task::bench: return cmd_bench(cfg);
    case Task::gradcheck: return cmd_gradcheck(cfg);
  }
  throw ValidationError("unknown task");
}

int run_cli(int argc, char** argv) {
  CLI::App app{"GroupCDL: circulant-sparse attention denoising and CS-MRI"};
  std::string command, config_path, checkpoint, out;
  std::uint64_t seed = 0;
  bool blind = false;
  app.add_option("command", command, "train | denoise | csmri | bench | gradcheck")
      ->required()
      ->check(CLI::IsMember({"train", "denoise", "csmri", "bench", "gradcheck"}));
  app.add_option("--config", config_path, "JSON run configuration")->required();
  auto* seed_opt = app.add_option("--seed", seed, "override the run seed");
  auto* ckpt_opt = app.add_option("--checkpoint", checkpoint, "model checkpoint (resume source for train)");
  auto* out_opt = app.add_option("--out", out, "output directory");
  app.add_flag("--blind", blind, "noise-blind thresholds (sigma ignored)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    RunConfig cfg = load_config(config_path);
    cfg.task = parse_task(command);
    if (*seed_opt) cfg.seed = seed;
    if (*ckpt_opt) cfg.checkpoint = checkpoint;
    if (*out_opt) cfg.out_dir = out;
    if (blind) cfg.noise.blind = true;
    cfg.validate();
    const auto m = run_task(cfg);
    for (const auto& [k, v] : m) std::cout << k << " = " << std::setprecision(8) << v << "\n";
    if (cfg.task == Task::gradcheck && m.at("failures") > 0) {
      std::cerr << "gradcheck: " << m.at("failures") << " op(s) over tolerance\n";
      return 3;
    }
    return 0;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace gcdl
