#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "cdisp/distribution.hpp"
#include "cdisp/groundtruth.hpp"

namespace cdisp {

/// Metrics over one pixel population. `pe` maps a pixel threshold k to the
/// percentage of pixels whose error exceeds k.
struct MetricSet {
  double epe = 0.0;
  std::map<double, double> pe;
  std::optional<double> rmse;
  std::optional<double> absr;

  friend bool operator==(const MetricSet&, const MetricSet&) = default;
};

struct EvalReport {
  MetricSet overall;
  std::optional<MetricSet> boundary;
  std::size_t total = 0;
  std::size_t valid = 0;
  std::size_t boundary_count = 0;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

// Every metric averages over pixels valid in both maps (further restricted by
// `mask` when one is given) and throws EmptySet if none remain.

double epe(const DisparityMap& pred, const DisparityMap& gt,
           std::span<const std::uint8_t> mask = {});

/// Percentage of pixels with |pred - gt| > k (strict).
double pixel_threshold_error(const DisparityMap& pred, const DisparityMap& gt, double k,
                             std::span<const std::uint8_t> mask = {});

double rmse_depth(const DisparityMap& pred_z, const DisparityMap& gt_z,
                  std::span<const std::uint8_t> mask = {});
/// Throws Domain if a ground-truth depth in the population is not positive.
double absr_depth(const DisparityMap& pred_z, const DisparityMap& gt_z,
                  std::span<const std::uint8_t> mask = {});

/// Valid pixels whose largest absolute difference to a valid 4-neighbor
/// exceeds `threshold`, dilated by one pixel (3 x 3).
std::vector<std::uint8_t> boundary_mask(const DisparityMap& gt, double threshold);

/// Disparity maps to depth maps; pixels with non-positive disparity become
/// invalid.
DisparityMap to_depth(const DisparityMap& disparity, const CameraRig& rig);

struct EvalOptions {
  std::vector<double> pe_thresholds{1.0, 3.0};
  std::optional<CameraRig> rig;
  std::optional<double> boundary_threshold;
};

EvalReport evaluate(const DisparityMap& pred, const DisparityMap& gt, const EvalOptions& options = {});

}  // namespace cdisp
