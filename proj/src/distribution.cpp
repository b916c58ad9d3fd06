#include "cdisp/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cdisp/error.hpp"

namespace cdisp {

void GridSpec::validate() const {
  if (!std::isfinite(origin) || !(bin_size > 0.0) || !std::isfinite(bin_size) || count < 2) {
    throw Error(ErrorCode::Domain, "grid needs finite origin, bin_size > 0 and count >= 2");
  }
}

GridSpec GridSpec::default_disparity() {
  return {0.0, 2.0, 96, DomainKind::DisparityPixels};
}

GridSpec GridSpec::default_depth() {
  return {0.0, 1.0, 80, DomainKind::DepthMeters};
}

void validate(const PixelView& pd, const GridSpec& grid) {
  const auto n = static_cast<std::size_t>(grid.count);
  if (pd.costs.size() != n || pd.raw_offsets.size() != n) {
    throw Error(ErrorCode::InvalidInput,
                "pixel distribution has " + std::to_string(pd.costs.size()) + " costs and " +
                    std::to_string(pd.raw_offsets.size()) + " offsets for a " +
                    std::to_string(n) + "-bin grid");
  }
  if (!(pd.temperature > 0.0) || !std::isfinite(pd.temperature)) {
    throw Error(ErrorCode::InvalidInput, "temperature must be positive and finite");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(pd.costs[i]) || !std::isfinite(pd.raw_offsets[i])) {
      throw Error(ErrorCode::InvalidInput, "non-finite cost or offset at bin " + std::to_string(i));
    }
  }
}

double clip_offset(double raw, double bin_size) noexcept {
  return std::clamp(raw, 0.0, bin_size);
}

bool offset_active(double raw, double bin_size) noexcept {
  return raw > 0.0 && raw < bin_size;
}

void probabilities_into(const PixelView& pd, std::span<double> out) {
  const double lowest = *std::min_element(pd.costs.begin(), pd.costs.end());
  double total = 0.0;
  for (std::size_t i = 0; i < pd.costs.size(); ++i) {
    out[i] = std::exp(-(pd.costs[i] - lowest) / pd.temperature);
    total += out[i];
  }
  for (std::size_t i = 0; i < pd.costs.size(); ++i) out[i] /= total;
}

std::vector<double> probabilities(const PixelDistribution& pd) {
  if (pd.costs.empty() || pd.costs.size() != pd.raw_offsets.size()) {
    throw Error(ErrorCode::InvalidInput, "pixel distribution needs matching, nonempty costs and offsets");
  }
  if (!(pd.temperature > 0.0)) throw Error(ErrorCode::InvalidInput, "temperature must be positive");
  for (double c : pd.costs) {
    if (!std::isfinite(c)) throw Error(ErrorCode::InvalidInput, "non-finite cost");
  }
  std::vector<double> out(pd.costs.size());
  probabilities_into(pd.view(), out);
  return out;
}

void atom_locations_into(const PixelView& pd, const GridSpec& grid, std::span<double> out) {
  for (std::size_t i = 0; i < pd.raw_offsets.size(); ++i) {
    out[i] = grid.value(static_cast<int>(i)) + clip_offset(pd.raw_offsets[i], grid.bin_size);
  }
}

DiracMixture to_mixture(const PixelDistribution& pd, const GridSpec& grid) {
  validate(pd.view(), grid);
  std::vector<double> probs(pd.costs.size());
  std::vector<double> atoms(pd.costs.size());
  probabilities_into(pd.view(), probs);
  atom_locations_into(pd.view(), grid, atoms);
  return DiracMixture::make(atoms, probs);
}

double mean_readout_grid(const PixelDistribution& pd, const GridSpec& grid) {
  validate(pd.view(), grid);
  std::vector<double> probs(pd.costs.size());
  probabilities_into(pd.view(), probs);
  double mean = 0.0;
  for (int i = 0; i < grid.count; ++i) mean += probs[i] * grid.value(i);
  return mean;
}

double mean_readout_mixture(const PixelDistribution& pd, const GridSpec& grid) {
  validate(pd.view(), grid);
  std::vector<double> probs(pd.costs.size());
  std::vector<double> atoms(pd.costs.size());
  probabilities_into(pd.view(), probs);
  atom_locations_into(pd.view(), grid, atoms);
  double mean = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) mean += probs[i] * atoms[i];
  return mean;
}

int mode_bin(const PixelView& pd) noexcept {
  // argmax of softmax(-c/t) is argmin of c; min_element keeps the first tie.
  return static_cast<int>(std::min_element(pd.costs.begin(), pd.costs.end()) - pd.costs.begin());
}

double mode_readout(const PixelDistribution& pd, const GridSpec& grid) {
  validate(pd.view(), grid);
  const int best = mode_bin(pd.view());
  return grid.value(best) + clip_offset(pd.raw_offsets[best], grid.bin_size);
}

double disparity_to_depth(double disparity, const CameraRig& rig) {
  if (!(disparity > 0.0)) throw Error(ErrorCode::Domain, "disparity must be positive to convert to depth");
  return rig.focal_length * rig.baseline / disparity;
}

double depth_to_disparity(double depth, const CameraRig& rig) {
  if (!(depth > 0.0)) throw Error(ErrorCode::Domain, "depth must be positive to convert to disparity");
  return rig.focal_length * rig.baseline / depth;
}

}  // namespace cdisp
