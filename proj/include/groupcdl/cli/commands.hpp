#pragma once

#include <map>
#include <string>

#include "groupcdl/cli/config.hpp"

namespace gcdl {

/// Named scalar results of a command (also written to <out>/metrics.json).
using Metrics = std::map<std::string, Real>;

/// Trains per cfg.train.problem. Writes config.json, train_log.csv and
/// model.gcdl under cfg.out_dir; resumes when cfg.checkpoint names an
/// existing file.
Metrics cmd_train(const RunConfig& cfg);
/// Denoises data.inputs (or held-out synthetic images) with cfg.checkpoint.
Metrics cmd_denoise(const RunConfig& cfg);
/// Reconstructs held-out phantoms (or CKSP inputs) at cfg.mri.accel.
Metrics cmd_csmri(const RunConfig& cfg);
Metrics cmd_bench(const RunConfig& cfg);
/// "failures" counts ops over tolerance.
Metrics cmd_gradcheck(const RunConfig& cfg);

Metrics run_task(const RunConfig& cfg);

/// groupcdl <train|denoise|csmri|bench|gradcheck> --config <path> [--seed N]
///   [--checkpoint <path>] [--out <dir>] [--blind]
/// Returns 0 on success, 2 on validation errors, 3 on numeric failures.
int run_cli(int argc, char** argv);

}  // namespace gcdl
