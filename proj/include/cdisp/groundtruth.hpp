#pragma once

#include <cstdint>
#include <vector>

#include "cdisp/transport.hpp"

namespace cdisp {

/// Row-major H x W map of disparities (pixels) or depths (meters) with a
/// validity mask. Invalid entries carry no data.
struct DisparityMap {
  int width = 0;
  int height = 0;
  std::vector<double> values;
  std::vector<std::uint8_t> valid;

  DisparityMap() = default;
  DisparityMap(int w, int h, double fill = 0.0, bool is_valid = true)
      : width(w),
        height(h),
        values(static_cast<std::size_t>(w) * h, fill),
        valid(static_cast<std::size_t>(w) * h, is_valid ? 1 : 0) {}

  std::size_t index(int u, int v) const noexcept {
    return static_cast<std::size_t>(v) * width + u;
  }
  bool in_bounds(int u, int v) const noexcept {
    return u >= 0 && v >= 0 && u < width && v < height;
  }
  bool is_valid(int u, int v) const noexcept { return in_bounds(u, v) && valid[index(u, v)] != 0; }
  double at(int u, int v) const noexcept { return values[index(u, v)]; }
  std::size_t size() const noexcept { return values.size(); }
};

/// Point mass at the ground truth of column u, row v.
DiracMixture unimodal_target(const DisparityMap& map, int u, int v);

/// Patch target: the center value weighted alpha and each valid neighbor of
/// the k x k window weighted (1 - alpha) / (k^2 - 1), renormalized over the
/// neighbors that exist; coincident values merge.
DiracMixture multimodal_target(const DisparityMap& map, int u, int v, int k = 3, double alpha = 0.8);

}  // namespace cdisp
