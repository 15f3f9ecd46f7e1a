#pragma once

#include <filesystem>
#include <limits>
#include <optional>
#include <vector>

#include "groupcdl/cli/config.hpp"
#include "groupcdl/mri/mri.hpp"
#include "groupcdl/optim/optim.hpp"

namespace gcdl {

struct TrainLogRow {
  int step = 0;
  Real loss = 0;
  Real psnr_val = std::numeric_limits<Real>::quiet_NaN();  // NaN on steps without validation
  Real lr = 0;
  Real sigma_lo = 0;  // batch sigma range, 8-bit units
  Real sigma_hi = 0;
};

struct TrainReport {
  std::vector<TrainLogRow> log;
  Real val_psnr = 0;       // model on the held-out set
  Real baseline_psnr = 0;  // noisy input (denoise) or zero-filled (csmri)
  int nan_recoveries = 0;
  int final_step = 0;
};

/// Where a run writes its artifacts; empty paths disable the output.
struct TrainOutputs {
  std::filesystem::path log_csv;
  std::filesystem::path checkpoint;
  /// Resume from this checkpoint (parameters plus optimizer state).
  std::filesystem::path resume;
  /// Stop after this many steps of the schedule (schedule length unchanged).
  std::optional<int> stop_after;
};

/// Held-out set shared by training validation and the evaluation commands.
struct DenoiseSample {
  RealImage clean, noisy;
  Real sigma = 0;  // [0, 1] units
};
std::vector<DenoiseSample> denoise_validation_set(const RunConfig& cfg, Real sigma_8bit, int count);

struct MriSample {
  ComplexImage clean;
  MriSystem sys;
  Kspace y;
  Real sigma = 0;
};
/// Held-out phantoms with the configured mask (accel, center_frac, mask_seed).
std::vector<MriSample> mri_validation_set(const RunConfig& cfg, Real sigma_8bit, int count, int accel);
MriSystem mri_system(const RunConfig& cfg, int accel, std::uint64_t sens_seed);

GroupCdlParams<Real> initial_denoiser(const RunConfig& cfg);
GroupCdlParams<Complex> initial_mri_model(const RunConfig& cfg);

/// Mean PSNR of the model over a validation set (sigma fed as given unless
/// `estimate` is set, or ignored for blind models).
Real evaluate_denoiser(const GroupCdlParams<Real>& params, const std::vector<DenoiseSample>& set, bool blind,
                       bool estimate = false);
Real evaluate_mri(const GroupCdlParams<Complex>& params, const std::vector<MriSample>& set, bool blind);

TrainReport train_denoiser(const RunConfig& cfg, GroupCdlParams<Real>& params, const TrainOutputs& out = {});
TrainReport train_mri(const RunConfig& cfg, GroupCdlParams<Complex>& params, const TrainOutputs& out = {});

}  // namespace gcdl
