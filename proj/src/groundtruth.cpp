#include "cdisp/groundtruth.hpp"

#include <string>

#include "cdisp/error.hpp"

namespace cdisp {
namespace {

void require_valid_center(const DisparityMap& map, int u, int v) {
  if (!map.is_valid(u, v)) {
    throw Error(ErrorCode::MissingGroundTruth,
                "no ground truth at (" + std::to_string(u) + ", " + std::to_string(v) + ")");
  }
}

}  // namespace

DiracMixture unimodal_target(const DisparityMap& map, int u, int v) {
  require_valid_center(map, u, v);
  return DiracMixture::dirac(map.at(u, v));
}

DiracMixture multimodal_target(const DisparityMap& map, int u, int v, int k, double alpha) {
  if (k < 1 || k % 2 == 0) throw Error(ErrorCode::Domain, "patch size k must be odd and >= 1");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw Error(ErrorCode::Domain, "alpha must lie in (0, 1]");
  require_valid_center(map, u, v);

  std::vector<double> locations{map.at(u, v)};
  std::vector<double> weights{alpha};
  if (k > 1 && alpha < 1.0) {
    const double neighbor = (1.0 - alpha) / (k * k - 1);
    const int r = k / 2;
    for (int dv = -r; dv <= r; ++dv) {
      for (int du = -r; du <= r; ++du) {
        if ((du == 0 && dv == 0) || !map.is_valid(u + du, v + dv)) continue;
        locations.push_back(map.at(u + du, v + dv));
        weights.push_back(neighbor);
      }
    }
  }
  return DiracMixture::make(locations, weights);
}

}  // namespace cdisp
