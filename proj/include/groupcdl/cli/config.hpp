#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "groupcdl/net/network.hpp"

namespace gcdl {

enum class Task { train, denoise, csmri, bench, gradcheck };
/// What cmd_train fits: a real denoiser or a complex CS-MRI model.
enum class Problem { denoise, csmri };

std::string to_string(Task t);
Task parse_task(const std::string& s);

/// Noise levels are given in 8-bit units (divided by 255 internally).
struct NoiseConfig {
  Real train_min = 20;
  Real train_max = 30;
  Real eval = 25;
  bool blind = false;
  /// Feed the true sigma at inference instead of estimate_noise().
  bool use_true_sigma = false;

  bool operator==(const NoiseConfig&) const = default;
};

struct TrainConfig {
  Problem problem = Problem::denoise;
  int steps = 2000;
  int batch = 8;
  int crop = 32;
  Real lr_max = 5e-4;
  Real lr_min = 2e-6;
  /// Linear ramp of the first steps up to the cosine schedule.
  int warmup_steps = 0;
  std::string loss = "mse";  // mse | l1_ssim
  Real l1_weight = 0.5;
  int val_every = 250;
  int val_images = 8;
  int nan_retries = 3;
  int checkpoint_every = 500;
  std::uint64_t init_seed = 1;
  /// Initial adjacency temperature rho (all layers and heads).
  Real init_rho = 1.0;

  bool operator==(const TrainConfig&) const = default;
};

struct DataConfig {
  std::string corpus = "textures";  // textures | phantoms | directory of .png/.cimg
  int count = 64;
  int size = 64;
  /// Explicit inputs for denoise/csmri; synthetic held-out images when empty.
  std::vector<std::string> inputs;
  bool inputs_noisy = false;

  bool operator==(const DataConfig&) const = default;
};

struct MriConfig {
  int accel = 4;
  Real center_frac = 0.08;
  int coils = 4;
  std::uint64_t mask_seed = 0;

  bool operator==(const MriConfig&) const = default;
};

struct BenchConfig {
  int size = 256;
  int s_w = 7;
  std::vector<int> windows{45};
  int channels = 4;
  int reps = 1;

  bool operator==(const BenchConfig&) const = default;
};

struct GradcheckConfig {
  std::vector<std::string> ops;  // all registered ops when empty
  Real eps = 1e-6;
  Real tol = 1e-6;
  Real network_tol = 1e-4;

  bool operator==(const GradcheckConfig&) const = default;
};

struct RunConfig {
  Task task = Task::train;
  NetHyper arch;
  NoiseConfig noise;
  TrainConfig train;
  DataConfig data;
  MriConfig mri;
  BenchConfig bench;
  GradcheckConfig gradcheck;
  std::uint64_t seed = 0;
  std::string checkpoint;
  std::string out_dir = "out";

  void validate() const;
  bool operator==(const RunConfig&) const = default;
};

std::string config_to_json(const RunConfig& c);
/// Missing keys keep their defaults; unknown keys and bad values raise
/// ValidationError.
RunConfig config_from_json(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const RunConfig& c);

}  // namespace gcdl
