#pragma once

// End-to-end desk experiments: synthesize, build the cost volume, fit the
// head, predict and evaluate. Used by the CLI and the acceptance tests.

#include <optional>
#include <string>
#include <vector>

#include "cdisp/io.hpp"
#include "cdisp/metrics.hpp"
#include "cdisp/stereo.hpp"

namespace cdisp {

/// Origin 0 and a 24 pixel range: bins of `bin_size` pixels, 24 / bin_size
/// of them.
GridSpec desk_grid(double bin_size = 2.0);

/// "w1", "w2sq", "kl-laplace", "kl-gaussian", "smooth-l1". Throws InvalidInput.
LossConfig parse_loss(const std::string& name);
std::string loss_name(const LossConfig& config);
/// "mean-grid", "mean-mixture", "mode-offset". Throws InvalidInput.
Readout parse_readout(const std::string& name);
std::string readout_name(Readout readout);

/// Atoms start at value(i) + s/2 when offsets are trained, so the costs are
/// sampled there; without offsets they sit on the bin values.
double cost_shift_for(const GridSpec& grid, bool offsets);

struct PipelineConfig {
  GridSpec grid = desk_grid();
  int window = 5;
  bool offsets = true;
  LossConfig loss;
  Readout readout = Readout::ModeOffset;
  bool multimodal = false;
  int mm_k = 3;
  double mm_alpha = 0.8;
  int steps = 2000;
  double step_size = 0.02;
  std::uint64_t seed = 0;
  // Defaults to the bin size.
  std::optional<double> boundary_threshold;
};

struct PipelineRun {
  TrainedModel model;
  FitResult fit;
  DisparityMap prediction;
  EvalReport report;
};

CostVolume model_cost_volume(const StereoPair& pair, const TrainedModel& model);
PipelineRun run_pipeline(const StereoPair& pair, const PipelineConfig& config);

struct AblationRow {
  std::string config;
  double epe = 0.0;
  double pe1 = 0.0;
  double pe3 = 0.0;
  double boundary_epe = 0.0;
};

struct AblationOptions {
  int steps = 2000;
  double step_size = 0.02;
  std::uint64_t seed = 0;
  bool core_only = false;  // just the offsets x loss grid
};

/// Rows, in order: the 2 x 2 grid {w1, regression} x {offsets, none}, then
/// bin sizes 1, 2, 4 and losses w1, w2sq, kl-laplace (both with offsets and
/// mode readout).
std::vector<AblationRow> run_ablation(const SceneSpec& scene, const AblationOptions& options);
std::string ablation_csv(const std::vector<AblationRow>& rows);

}  // namespace cdisp
