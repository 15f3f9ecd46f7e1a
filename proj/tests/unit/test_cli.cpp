#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "doctest.h"
#include "groupcdl/cli/bench.hpp"
#include "groupcdl/cli/commands.hpp"
#include "groupcdl/cli/corpus.hpp"
#include "groupcdl/cli/plot.hpp"
#include "groupcdl/cli/train.hpp"
#include "groupcdl/core/io.hpp"

using namespace gcdl;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("gcdl_cli_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

RunConfig tiny_config() {
  RunConfig c;
  c.arch.K = 2;
  c.arch.M = 4;
  c.arch.Mh = 2;
  c.arch.W = 3;
  c.train.steps = 6;
  c.train.batch = 2;
  c.train.crop = 16;
  c.train.val_every = 3;
  c.train.val_images = 2;
  c.data.count = 4;
  c.data.size = 24;
  c.seed = 11;
  return c;
}

}  // namespace

TEST_CASE("config json round trip") {
  RunConfig c = tiny_config();
  c.task = Task::bench;
  c.arch.mode = ThresholdMode::elementwise;
  c.noise.blind = true;
  c.train.loss = "l1_ssim";
  c.data.inputs = {"a.png", "b.cimg"};
  c.bench.windows = {7, 15};
  c.gradcheck.ops = {"circ_row_softmax"};
  c.checkpoint = "m.gcdl";
  c.train.warmup_steps = 50;
  c.train.init_rho = 0.25;
  CHECK(config_from_json(config_to_json(c)) == c);
  CHECK(config_from_json("{}") == RunConfig{});
}

TEST_CASE("config rejects unknown keys and bad values") {
  CHECK_THROWS_AS(config_from_json(R"({"arch": {"P": 3}})"), ValidationError);
  CHECK_THROWS_AS(config_from_json(R"({"wat": 1})"), ValidationError);
  CHECK_THROWS_AS(config_from_json(R"({"arch": {"p": 4}})"), ValidationError);
  CHECK_THROWS_AS(config_from_json(R"({"train": {"loss": "huber"}})"), ValidationError);
  CHECK_THROWS_AS(config_from_json("{"), ValidationError);
  CHECK_THROWS_AS(parse_task("fit"), ValidationError);
}

TEST_CASE("corpus is deterministic and in range") {
  const auto a = make_corpus("textures", 3, 32, 5);
  const auto b = make_corpus("textures", 3, 32, 5);
  const auto c = make_corpus("textures", 3, 32, 6);
  REQUIRE(a.size() == 3);
  CHECK(a == b);
  CHECK_FALSE(a == c);
  for (const auto& img : a)
    for (Real v : img.vec()) CHECK((v >= 0 && v <= 1));
  CHECK(mix_seed(1, 2, 3) == mix_seed(1, 2, 3));
  CHECK(mix_seed(1, 2, 3) != mix_seed(1, 3, 2));
}

TEST_CASE("dihedral group") {
  const auto x = gen_texture(16, 3);
  CHECK(dihedral(dihedral(x, 1, false), 3, false) == x);
  CHECK(dihedral(dihedral(x, 0, true), 0, true) == x);
  CHECK(dihedral(x, 0, false) == x);
  std::mt19937_64 rng(1);
  const auto y = augment(x, 8, rng);
  CHECK(y.rows() == 8);
  CHECK(y.cols() == 8);
}

TEST_CASE("burden factor") {
  CHECK(burden_factor(45, 7) == doctest::Approx(41.3265).epsilon(1e-4));
  CHECK(burden_factor(7, 7) == 1.0);
  CHECK_THROWS_AS(burden_factor(0, 1), ValidationError);
}

TEST_CASE("pbda reference") {
  const auto y = bench_input(20, 2, 4);
  PbdaStats st;
  SUBCASE("identity attention returns the input") {
    const auto out = cmd_pbda_reference(y, 5, 2, AttentionKind::identity, &st);
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(out.vec()[i] == doctest::Approx(y.vec()[i]).epsilon(1e-14));
    CHECK(st.windows == 100);
    CHECK(st.pixels_processed == 100 * 25);
    CHECK(st.consensus_gap < 1e-12);
  }
  SUBCASE("tiling windows with uniform attention give block means") {
    const auto out = cmd_pbda_reference(y, 5, 5, AttentionKind::uniform, &st);
    CHECK(st.windows == 16);
    for (int c = 0; c < 2; ++c)
      for (int br = 0; br < 4; ++br)
        for (int bc = 0; bc < 4; ++bc) {
          Real m = 0;
          for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 5; ++j) m += y.at(c, br * 5 + i, bc * 5 + j);
          m /= 25;
          for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 5; ++j) CHECK(out.at(c, br * 5 + i, bc * 5 + j) == doctest::Approx(m).epsilon(1e-13));
        }
  }
  SUBCASE("overlapping windows disagree") {
    const auto out = cmd_pbda_reference(y, 5, 2, AttentionKind::similarity, &st);
    CHECK(st.consensus_gap > 1e-3);
    const auto ref = circatt_reference(y, 5, AttentionKind::similarity);
    Real diff = 0;
    for (std::size_t i = 0; i < y.size(); ++i) diff = std::max(diff, std::abs(out.vec()[i] - ref.vec()[i]));
    CHECK(diff > 1e-6);
  }
  SUBCASE("circatt identity and uniform") {
    const auto id = circatt_reference(y, 5, AttentionKind::identity);
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(id.vec()[i] == doctest::Approx(y.vec()[i]).epsilon(1e-14));
    const auto un = circatt_reference(y, 3, AttentionKind::uniform);
    Real m = 0;
    for (int a = -1; a <= 1; ++a)
      for (int b = -1; b <= 1; ++b) m += y.at(1, (7 + a) % 20, (0 + b + 20) % 20);
    CHECK(un.at(1, 7, 0) == doctest::Approx(m / 9).epsilon(1e-13));
  }
}

TEST_CASE("bench rows") {
  BenchConfig bc;
  bc.size = 28;
  bc.s_w = 3;
  bc.windows = {3, 9};
  bc.channels = 2;
  const auto rows = run_bench(bc, 1);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].burden_analytic == 1.0);
  CHECK(rows[1].burden_analytic == 9.0);
  // ceil(28/3)^2 windows of W^2 pixels
  CHECK(rows[1].burden_counted == doctest::Approx(100.0 * 81 / (28 * 28)));
  CHECK(rows[1].seconds_pbda > 0);
  CHECK(rows[1].consensus_gap > 0);
}

TEST_CASE("plots render") {
  PlotSeries s{{1, 2, 3, 4}, {1, 10, 100, 1000}, {1, 0, 0}};
  const auto img = render_line_plot({s}, 200, 120, true);
  CHECK(img.rows() == 120);
  CHECK(img.cols() == 200);
  CHECK(img.channels() == 3);
  int red = 0;
  for (int r = 0; r < 120; ++r)
    for (int c = 0; c < 200; ++c)
      if (img.at(0, r, c) > 0.9 && img.at(1, r, c) < 0.1) ++red;
  CHECK(red > 50);
  RealImage v(4, 4, 1);
  v.at(0, 1, 1) = 2;
  const auto h = heatmap(v, 1);
  CHECK(h.at(0, 1, 1) == 1.0);
  CHECK(h.at(0, 0, 0) == 0.0);
  const auto d = scratch("plot");
  write_line_plot(d / "p.png", {s}, 200, 120, false);
  CHECK(read_image(d / "p.png").rows() == 120);
}

TEST_CASE("training resumes bit-exactly") {
  const auto d = scratch("resume");
  auto cfg = tiny_config();

  auto p0 = initial_denoiser(cfg);
  const auto full = train_denoiser(cfg, p0, {d / "full.csv", d / "full.gcdl", {}, {}});
  CHECK(full.final_step == 6);

  auto p1 = initial_denoiser(cfg);
  const auto half = train_denoiser(cfg, p1, {d / "part.csv", d / "part.gcdl", {}, 3});
  CHECK(half.final_step == 3);
  auto p2 = initial_denoiser(cfg);
  const auto rest = train_denoiser(cfg, p2, {d / "part.csv", d / "part.gcdl", d / "part.gcdl", {}});
  CHECK(rest.final_step == 6);

  CHECK(p0 == p2);
  CHECK(slurp(d / "full.gcdl") == slurp(d / "part.gcdl"));
  CHECK(full.val_psnr == rest.val_psnr);
  CHECK(full.log.back().loss == rest.log.back().loss);
}

TEST_CASE("warmup ramps the learning rate") {
  auto cfg = tiny_config();
  cfg.train.steps = 4;
  cfg.train.warmup_steps = 4;
  auto p = initial_denoiser(cfg);
  const auto rep = train_denoiser(cfg, p, {});
  REQUIRE(rep.log.size() == 4);
  for (int k = 0; k < 4; ++k)
    CHECK(rep.log[k].lr == doctest::Approx((k + 1) / 4.0 * cosine_lr(k, 4, cfg.train.lr_max, cfg.train.lr_min)));
  cfg.train.warmup_steps = -1;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
}

TEST_CASE("training rejects a mismatched resume checkpoint") {
  const auto d = scratch("mismatch");
  auto cfg = tiny_config();
  cfg.train.steps = 1;
  auto p = initial_denoiser(cfg);
  train_denoiser(cfg, p, {{}, d / "m.gcdl", {}, {}});
  cfg.arch.M = 8;
  auto q = initial_denoiser(cfg);
  CHECK_THROWS_AS(train_denoiser(cfg, q, {{}, {}, d / "m.gcdl", {}}), ValidationError);
}

TEST_CASE("training gives up after repeated non-finite losses") {
  const auto d = scratch("nan");
  // every crop sees the NaN
  RealImage bad(16, 16, 1, std::vector<Real>(16 * 16, 0.5));
  bad.at(0, 3, 3) = std::nan("");
  write_cimg(d / "bad.cimg", bad);
  auto cfg = tiny_config();
  cfg.data.corpus = d.string();
  cfg.data.count = 1;
  cfg.train.nan_retries = 2;
  auto p = initial_denoiser(cfg);
  const auto before = p;
  CHECK_THROWS_AS(train_denoiser(cfg, p, {}), NumericError);
  CHECK(p == before);
}

TEST_CASE("cli exit codes") {
  const auto d = scratch("exit");
  auto cfg = tiny_config();
  cfg.gradcheck.ops = {"soft_threshold"};
  save_config(d / "c.json", cfg);
  std::ofstream(d / "bad.json") << R"({"arch": {"K": 0}})";
  const std::string out = (d / "o").string(), c = (d / "c.json").string(), bad = (d / "bad.json").string();

  auto run = [](std::vector<std::string> args) {
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return run_cli(static_cast<int>(argv.size()), argv.data());
  };
  CHECK(run({"groupcdl", "gradcheck", "--config", c, "--out", out}) == 0);
  CHECK(fs::exists(d / "o" / "gradcheck.csv"));
  CHECK(run({"groupcdl", "gradcheck", "--config", bad}) == 2);
  CHECK(run({"groupcdl", "nope", "--config", c}) == 2);
  CHECK(run({"groupcdl", "denoise", "--config", c, "--checkpoint", (d / "none.gcdl").string()}) == 2);
}

TEST_CASE("denoise and csmri commands write their outputs") {
  const auto d = scratch("cmds");
  auto cfg = tiny_config();
  cfg.train.steps = 2;
  cfg.out_dir = (d / "train").string();
  cmd_train(cfg);
  CHECK(fs::exists(d / "train" / "model.gcdl"));
  CHECK(fs::exists(d / "train" / "train_log.csv"));
  CHECK(load_config(d / "train" / "config.json") == cfg);

  cfg.checkpoint = (d / "train" / "model.gcdl").string();
  cfg.data.count = 2;
  cfg.out_dir = (d / "den").string();
  const auto m = cmd_denoise(cfg);
  CHECK(m.at("images") == 2);
  CHECK(std::isfinite(m.at("psnr")));
  CHECK(fs::exists(d / "den" / "img0_denoised.png"));
  CHECK(fs::exists(d / "den" / "denoise_metrics.csv"));
  cfg.out_dir = (d / "den2").string();
  cmd_denoise(cfg);
  CHECK(slurp(d / "den" / "img1_denoised.cimg") == slurp(d / "den2" / "img1_denoised.cimg"));
  CHECK_THROWS_AS(cmd_csmri(cfg), ValidationError);

  auto mc = tiny_config();
  mc.train.problem = Problem::csmri;
  mc.train.steps = 2;
  mc.data.size = 16;
  mc.data.count = 2;
  mc.mri.coils = 2;
  mc.out_dir = (d / "mtrain").string();
  cmd_train(mc);
  mc.checkpoint = (d / "mtrain" / "model.gcdl").string();
  mc.out_dir = (d / "mri").string();
  const auto r = cmd_csmri(mc);
  CHECK(r.at("images") == 2);
  CHECK(std::isfinite(r.at("psnr")));
  CHECK(fs::exists(d / "mri" / "img0_error.png"));
  CHECK_THROWS_AS(cmd_denoise(mc), ValidationError);
}
