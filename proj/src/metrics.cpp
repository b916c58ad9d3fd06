#include "cdisp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cdisp/error.hpp"

namespace cdisp {
namespace {

void require_same_shape(const DisparityMap& a, const DisparityMap& b) {
  if (a.width != b.width || a.height != b.height) {
    throw Error(ErrorCode::InvalidInput, "map shapes differ: " + std::to_string(a.width) + "x" +
                                             std::to_string(a.height) + " vs " +
                                             std::to_string(b.width) + "x" + std::to_string(b.height));
  }
}

// Calls fn(pred, gt) for every pixel in the population, row-major, and
// returns how many there were.
template <typename Fn>
std::size_t for_common(const DisparityMap& pred, const DisparityMap& gt,
                       std::span<const std::uint8_t> mask, Fn&& fn) {
  require_same_shape(pred, gt);
  if (!mask.empty() && mask.size() != gt.size()) {
    throw Error(ErrorCode::InvalidInput, "evaluation mask size does not match the maps");
  }
  std::size_t count = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!pred.valid[i] || !gt.valid[i] || (!mask.empty() && !mask[i])) continue;
    fn(pred.values[i], gt.values[i]);
    ++count;
  }
  if (count == 0) throw Error(ErrorCode::EmptySet, "no pixels with ground truth to evaluate");
  return count;
}

}  // namespace

double epe(const DisparityMap& pred, const DisparityMap& gt, std::span<const std::uint8_t> mask) {
  double sum = 0.0;
  const std::size_t n = for_common(pred, gt, mask, [&](double p, double g) { sum += std::fabs(p - g); });
  return sum / static_cast<double>(n);
}

double pixel_threshold_error(const DisparityMap& pred, const DisparityMap& gt, double k,
                             std::span<const std::uint8_t> mask) {
  if (!(k > 0.0)) throw Error(ErrorCode::Domain, "pixel threshold k must be positive");
  std::size_t bad = 0;
  const std::size_t n = for_common(pred, gt, mask, [&](double p, double g) {
    if (std::fabs(p - g) > k) ++bad;
  });
  return 100.0 * static_cast<double>(bad) / static_cast<double>(n);
}

double rmse_depth(const DisparityMap& pred_z, const DisparityMap& gt_z,
                  std::span<const std::uint8_t> mask) {
  double sum = 0.0;
  const std::size_t n = for_common(pred_z, gt_z, mask, [&](double p, double g) { sum += (p - g) * (p - g); });
  return std::sqrt(sum / static_cast<double>(n));
}

double absr_depth(const DisparityMap& pred_z, const DisparityMap& gt_z,
                  std::span<const std::uint8_t> mask) {
  double sum = 0.0;
  const std::size_t n = for_common(pred_z, gt_z, mask, [&](double p, double g) {
    if (!(g > 0.0)) throw Error(ErrorCode::Domain, "ground-truth depth must be positive for ABSR");
    sum += std::fabs(p - g) / g;
  });
  return sum / static_cast<double>(n);
}

std::vector<std::uint8_t> boundary_mask(const DisparityMap& gt, double threshold) {
  std::vector<std::uint8_t> edge(gt.size(), 0);
  constexpr int du[] = {1, -1, 0, 0};
  constexpr int dv[] = {0, 0, 1, -1};
  for (int v = 0; v < gt.height; ++v) {
    for (int u = 0; u < gt.width; ++u) {
      if (!gt.is_valid(u, v)) continue;
      double jump = 0.0;
      for (int n = 0; n < 4; ++n) {
        if (gt.is_valid(u + du[n], v + dv[n])) {
          jump = std::max(jump, std::fabs(gt.at(u, v) - gt.at(u + du[n], v + dv[n])));
        }
      }
      if (jump > threshold) edge[gt.index(u, v)] = 1;
    }
  }
  std::vector<std::uint8_t> mask(gt.size(), 0);
  for (int v = 0; v < gt.height; ++v) {
    for (int u = 0; u < gt.width; ++u) {
      if (!edge[gt.index(u, v)]) continue;
      for (int y = std::max(0, v - 1); y <= std::min(gt.height - 1, v + 1); ++y) {
        for (int x = std::max(0, u - 1); x <= std::min(gt.width - 1, u + 1); ++x) {
          mask[gt.index(x, y)] = 1;
        }
      }
    }
  }
  return mask;
}

DisparityMap to_depth(const DisparityMap& disparity, const CameraRig& rig) {
  DisparityMap depth = disparity;
  for (std::size_t i = 0; i < depth.size(); ++i) {
    if (!depth.valid[i]) continue;
    if (depth.values[i] > 0.0) {
      depth.values[i] = disparity_to_depth(depth.values[i], rig);
    } else {
      depth.valid[i] = 0;
      depth.values[i] = 0.0;
    }
  }
  return depth;
}

namespace {

MetricSet metric_set(const DisparityMap& pred, const DisparityMap& gt, const EvalOptions& options,
                     std::span<const std::uint8_t> mask) {
  MetricSet out;
  out.epe = epe(pred, gt, mask);
  for (double k : options.pe_thresholds) out.pe[k] = pixel_threshold_error(pred, gt, k, mask);
  if (options.rig) {
    const DisparityMap pz = to_depth(pred, *options.rig);
    const DisparityMap gz = to_depth(gt, *options.rig);
    out.rmse = rmse_depth(pz, gz, mask);
    out.absr = absr_depth(pz, gz, mask);
  }
  return out;
}

}  // namespace

EvalReport evaluate(const DisparityMap& pred, const DisparityMap& gt, const EvalOptions& options) {
  require_same_shape(pred, gt);
  EvalReport report;
  report.total = gt.size();
  for (std::size_t i = 0; i < gt.size(); ++i) report.valid += (pred.valid[i] && gt.valid[i]) ? 1 : 0;
  report.overall = metric_set(pred, gt, options, {});
  if (options.boundary_threshold) {
    std::vector<std::uint8_t> mask = boundary_mask(gt, *options.boundary_threshold);
    for (std::size_t i = 0; i < mask.size(); ++i) {
      mask[i] = mask[i] && pred.valid[i] && gt.valid[i];
      report.boundary_count += mask[i];
    }
    if (report.boundary_count > 0) report.boundary = metric_set(pred, gt, options, mask);
  }
  return report;
}

}  // namespace cdisp
