#pragma once

#include <cstdint>
#include <vector>

#include "groupcdl/cli/config.hpp"

namespace gcdl {

/// Pixels-processed overhead of overlapping-window attention, W^2 / s_w^2.
Real burden_factor(int W, int s_w);

enum class AttentionKind { similarity, uniform, identity };

struct PbdaStats {
  std::int64_t windows = 0;
  std::int64_t pixels_processed = 0;  // windows * W^2
  /// RMS spread of the per-window estimates around their average.
  Real consensus_gap = 0;
};

/// Patch-based dense attention: W x W windows at stride s_w (circular wrap),
/// dense attention inside each window with k = q = v = y, outputs averaged on
/// overlaps.
RealImage cmd_pbda_reference(const RealImage& y, int W, int s_w, AttentionKind kind, PbdaStats* stats = nullptr);

/// The same attention as one circulant-sparse operator over the whole image.
RealImage circatt_reference(const RealImage& y, int W, AttentionKind kind);

struct BenchRow {
  int W = 0;
  int s_w = 0;
  Real burden_analytic = 0;
  Real burden_counted = 0;  // PbDA pixels processed / (n1 n2 W^2)
  Real seconds_circatt = 0;
  Real seconds_pbda = 0;
  Real ratio = 0;
  Real consensus_gap = 0;
  Real pbda_vs_circatt_rms = 0;
};

/// Structured test input for the bench (tiled texture features).
RealImage bench_input(int n, int channels, std::uint64_t seed);
std::vector<BenchRow> run_bench(const BenchConfig& cfg, std::uint64_t seed);

}  // namespace gcdl
