#include "groupcdl/cli/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace gcdl {

using nlohmann::json;

namespace {

const char* kTaskNames[] = {"train", "denoise", "csmri", "bench", "gradcheck"};

// Reads obj[key] into v when present; unknown keys are reported by the caller.
template <class V>
void get(const json& obj, const char* key, V& v, std::set<std::string>& seen) {
  seen.insert(key);
  if (!obj.contains(key)) return;
  try {
    v = obj.at(key).get<V>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: bad value for '") + key + "': " + e.what());
  }
}

void reject_unknown(const json& obj, const std::set<std::string>& seen, const std::string& where) {
  for (const auto& [k, v] : obj.items())
    if (!seen.contains(k)) throw ValidationError("config: unknown key '" + where + k + "'");
}

json section(const json& root, const char* key) {
  if (!root.contains(key)) return json::object();
  const auto& s = root.at(key);
  if (!s.is_object()) throw ValidationError(std::string("config: '") + key + "' must be an object");
  return s;
}

}  // namespace

std::string to_string(Task t) { return kTaskNames[static_cast<int>(t)]; }

Task parse_task(const std::string& s) {
  for (int i = 0; i < 5; ++i)
    if (s == kTaskNames[i]) return static_cast<Task>(i);
  throw ValidationError("config: unknown task '" + s + "'");
}

void RunConfig::validate() const {
  arch.validate();
  require(noise.train_min >= 0 && noise.train_max >= noise.train_min && noise.eval >= 0,
          "config: noise levels must satisfy 0 <= train_min <= train_max, eval >= 0");
  require(train.steps >= 0 && train.batch >= 1, "config: train.steps >= 0 and train.batch >= 1 required");
  require(train.crop >= arch.stride && train.crop % arch.stride == 0, "config: train.crop must be a multiple of s_c");
  require(train.lr_max > 0 && train.lr_min >= 0 && train.lr_min <= train.lr_max, "config: need 0 <= lr_min <= lr_max");
  require(train.loss == "mse" || train.loss == "l1_ssim", "config: train.loss must be mse or l1_ssim");
  require(train.l1_weight >= 0 && train.l1_weight <= 1, "config: train.l1_weight must lie in [0, 1]");
  require(train.init_rho > 0, "config: train.init_rho must be positive");
  require(train.warmup_steps >= 0, "config: train.warmup_steps must be nonnegative");
  require(train.val_every >= 1 && train.val_images >= 1, "config: val_every and val_images must be positive");
  require(train.nan_retries >= 0 && train.checkpoint_every >= 1, "config: bad nan_retries / checkpoint_every");
  require(data.count >= 1 && data.size >= 8, "config: data.count >= 1 and data.size >= 8 required");
  require(train.problem == Problem::csmri || data.size >= train.crop, "config: data.size must be >= train.crop");
  require(mri.accel >= 1 && mri.center_frac >= 0 && mri.center_frac <= 1.0 / mri.accel && mri.coils >= 1,
          "config: mri needs accel >= 1, 0 <= center_frac <= 1/accel, coils >= 1");
  require(bench.size >= 8 && bench.s_w >= 1 && bench.channels >= 1 && bench.reps >= 1 && !bench.windows.empty(),
          "config: bad bench section");
  for (int w : bench.windows)
    require(w % 2 == 1 && w >= bench.s_w && w <= bench.size, "config: bench windows must be odd, >= s_w, <= size");
  require(gradcheck.eps > 0 && gradcheck.tol > 0 && gradcheck.network_tol > 0, "config: bad gradcheck section");
}

std::string config_to_json(const RunConfig& c) {
  json j;
  j["task"] = to_string(c.task);
  j["arch"] = {{"p", c.arch.p},
               {"K", c.arch.K},
               {"M", c.arch.M},
               {"M_h", c.arch.Mh},
               {"W", c.arch.W},
               {"dK", c.arch.dK},
               {"s_c", c.arch.stride},
               {"channels", c.arch.channels},
               {"mode", c.arch.mode == ThresholdMode::group ? "group" : "elementwise"},
               {"sigma_scale", c.arch.sigma_scale}};
  j["noise"] = {{"train_min", c.noise.train_min},
                {"train_max", c.noise.train_max},
                {"eval", c.noise.eval},
                {"blind", c.noise.blind},
                {"use_true_sigma", c.noise.use_true_sigma}};
  const auto& t = c.train;
  j["train"] = {{"problem", t.problem == Problem::denoise ? "denoise" : "csmri"},
                {"steps", t.steps},
                {"batch", t.batch},
                {"crop", t.crop},
                {"lr_max", t.lr_max},
                {"lr_min", t.lr_min},
                {"warmup_steps", t.warmup_steps},
                {"loss", t.loss},
                {"l1_weight", t.l1_weight},
                {"val_every", t.val_every},
                {"val_images", t.val_images},
                {"nan_retries", t.nan_retries},
                {"checkpoint_every", t.checkpoint_every},
                {"init_seed", t.init_seed},
                {"init_rho", t.init_rho}};
  j["data"] = {{"corpus", c.data.corpus},
               {"count", c.data.count},
               {"size", c.data.size},
               {"inputs", c.data.inputs},
               {"inputs_noisy", c.data.inputs_noisy}};
  j["mri"] = {{"accel", c.mri.accel},
              {"center_frac", c.mri.center_frac},
              {"coils", c.mri.coils},
              {"mask_seed", c.mri.mask_seed}};
  j["bench"] = {{"size", c.bench.size},
                {"s_w", c.bench.s_w},
                {"windows", c.bench.windows},
                {"channels", c.bench.channels},
                {"reps", c.bench.reps}};
  j["gradcheck"] = {{"ops", c.gradcheck.ops},
                    {"eps", c.gradcheck.eps},
                    {"tol", c.gradcheck.tol},
                    {"network_tol", c.gradcheck.network_tol}};
  j["seed"] = c.seed;
  j["checkpoint"] = c.checkpoint;
  j["out_dir"] = c.out_dir;
  return j.dump(2);
}

RunConfig config_from_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: invalid JSON: ") + e.what());
  }
  require(root.is_object(), "config: top level must be an object");
  RunConfig c;
  std::set<std::string> seen;

  std::string task = to_string(c.task);
  get(root, "task", task, seen);
  c.task = parse_task(task);
  get(root, "seed", c.seed, seen);
  get(root, "checkpoint", c.checkpoint, seen);
  get(root, "out_dir", c.out_dir, seen);
  for (const char* s : {"arch", "noise", "train", "data", "mri", "bench", "gradcheck"}) seen.insert(s);
  reject_unknown(root, seen, "");

  {
    const auto a = section(root, "arch");
    std::set<std::string> sk;
    std::string mode = "group";
    get(a, "p", c.arch.p, sk);
    get(a, "K", c.arch.K, sk);
    get(a, "M", c.arch.M, sk);
    get(a, "M_h", c.arch.Mh, sk);
    get(a, "W", c.arch.W, sk);
    get(a, "dK", c.arch.dK, sk);
    get(a, "s_c", c.arch.stride, sk);
    get(a, "channels", c.arch.channels, sk);
    get(a, "mode", mode, sk);
    get(a, "sigma_scale", c.arch.sigma_scale, sk);
    reject_unknown(a, sk, "arch.");
    require(mode == "group" || mode == "elementwise", "config: arch.mode must be group or elementwise");
    c.arch.mode = mode == "group" ? ThresholdMode::group : ThresholdMode::elementwise;
  }
  {
    const auto n = section(root, "noise");
    std::set<std::string> sk;
    get(n, "train_min", c.noise.train_min, sk);
    get(n, "train_max", c.noise.train_max, sk);
    get(n, "eval", c.noise.eval, sk);
    get(n, "blind", c.noise.blind, sk);
    get(n, "use_true_sigma", c.noise.use_true_sigma, sk);
    reject_unknown(n, sk, "noise.");
  }
  {
    const auto t = section(root, "train");
    std::set<std::string> sk;
    std::string problem = "denoise";
    get(t, "problem", problem, sk);
    require(problem == "denoise" || problem == "csmri", "config: train.problem must be denoise or csmri");
    c.train.problem = problem == "denoise" ? Problem::denoise : Problem::csmri;
    get(t, "steps", c.train.steps, sk);
    get(t, "batch", c.train.batch, sk);
    get(t, "crop", c.train.crop, sk);
    get(t, "lr_max", c.train.lr_max, sk);
    get(t, "lr_min", c.train.lr_min, sk);
    get(t, "warmup_steps", c.train.warmup_steps, sk);
    get(t, "loss", c.train.loss, sk);
    get(t, "l1_weight", c.train.l1_weight, sk);
    get(t, "val_every", c.train.val_every, sk);
    get(t, "val_images", c.train.val_images, sk);
    get(t, "nan_retries", c.train.nan_retries, sk);
    get(t, "checkpoint_every", c.train.checkpoint_every, sk);
    get(t, "init_seed", c.train.init_seed, sk);
    get(t, "init_rho", c.train.init_rho, sk);
    reject_unknown(t, sk, "train.");
  }
  {
    const auto d = section(root, "data");
    std::set<std::string> sk;
    get(d, "corpus", c.data.corpus, sk);
    get(d, "count", c.data.count, sk);
    get(d, "size", c.data.size, sk);
    get(d, "inputs", c.data.inputs, sk);
    get(d, "inputs_noisy", c.data.inputs_noisy, sk);
    reject_unknown(d, sk, "data.");
  }
  {
    const auto m = section(root, "mri");
    std::set<std::string> sk;
    get(m, "accel", c.mri.accel, sk);
    get(m, "center_frac", c.mri.center_frac, sk);
    get(m, "coils", c.mri.coils, sk);
    get(m, "mask_seed", c.mri.mask_seed, sk);
    reject_unknown(m, sk, "mri.");
  }
  {
    const auto b = section(root, "bench");
    std::set<std::string> sk;
    get(b, "size", c.bench.size, sk);
    get(b, "s_w", c.bench.s_w, sk);
    get(b, "windows", c.bench.windows, sk);
    get(b, "channels", c.bench.channels, sk);
    get(b, "reps", c.bench.reps, sk);
    reject_unknown(b, sk, "bench.");
  }
  {
    const auto g = section(root, "gradcheck");
    std::set<std::string> sk;
    get(g, "ops", c.gradcheck.ops, sk);
    get(g, "eps", c.gradcheck.eps, sk);
    get(g, "tol", c.gradcheck.tol, sk);
    get(g, "network_tol", c.gradcheck.network_tol, sk);
    reject_unknown(g, sk, "gradcheck.");
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ValidationError("cannot open config: " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return config_from_json(ss.str());
}

void save_config(const std::filesystem::path& path, const RunConfig& c) {
  std::ofstream os(path);
  if (!os) throw ValidationError("cannot open for writing: " + path.string());
  os << config_to_json(c) << "\n";
}

}  // namespace gcdl
