#pragma once

// The per-pixel output representation: a categorical distribution over a
// uniform bin grid plus one clipped sub-bin offset per bin, which together
// describe a shifted Dirac mixture.

#include <span>
#include <vector>

#include "cdisp/transport.hpp"

namespace cdisp {

enum class DomainKind { DisparityPixels, DepthMeters };

struct GridSpec {
  double origin = 0.0;
  double bin_size = 2.0;
  int count = 96;
  DomainKind kind = DomainKind::DisparityPixels;

  /// Left edge of bin i; its cell is [value(i), value(i) + bin_size).
  double value(int i) const noexcept { return origin + i * bin_size; }
  double upper() const noexcept { return origin + count * bin_size; }

  /// Throws Domain unless bin_size > 0, count >= 2 and origin is finite.
  void validate() const;

  /// [0, 191] pixels, bins of 2 pixels.
  static GridSpec default_disparity();
  /// [0, 80] meters, bins of 1 meter.
  static GridSpec default_depth();

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Non-owning view of one pixel's network outputs.
struct PixelView {
  std::span<const double> costs;
  std::span<const double> raw_offsets;
  double temperature = 1.0;
};

/// Owning per-pixel prediction: matching costs (lower is better), pre-clip
/// offsets and the softmax temperature.
struct PixelDistribution {
  std::vector<double> costs;
  std::vector<double> raw_offsets;
  double temperature = 1.0;

  PixelView view() const noexcept { return {costs, raw_offsets, temperature}; }
};

struct CameraRig {
  double focal_length = 1.0;  // pixels
  double baseline = 1.0;      // meters
};

/// Throws InvalidInput if lengths disagree with the grid, the temperature is
/// not positive, or any cost or offset is non-finite.
void validate(const PixelView& pd, const GridSpec& grid);

/// clip(raw, 0, s).
double clip_offset(double raw, double bin_size) noexcept;
/// True where the clip is the identity, i.e. raw lies in the open (0, s).
bool offset_active(double raw, double bin_size) noexcept;

/// softmax(-costs / temperature), max-subtracted. Writes into `out`.
void probabilities_into(const PixelView& pd, std::span<double> out);
std::vector<double> probabilities(const PixelDistribution& pd);

/// Shifted atom locations value(i) + clip(raw_offsets[i], 0, s).
void atom_locations_into(const PixelView& pd, const GridSpec& grid, std::span<double> out);

DiracMixture to_mixture(const PixelDistribution& pd, const GridSpec& grid);

/// sum_i prob_i * value(i): the categorical mean over unshifted bins.
double mean_readout_grid(const PixelDistribution& pd, const GridSpec& grid);
/// sum_i prob_i * atom_i: the mean of the shifted mixture.
double mean_readout_mixture(const PixelDistribution& pd, const GridSpec& grid);

/// Index of the most probable bin; ties go to the smallest index.
int mode_bin(const PixelView& pd) noexcept;
/// Location of the most probable shifted atom.
double mode_readout(const PixelDistribution& pd, const GridSpec& grid);

double disparity_to_depth(double disparity, const CameraRig& rig);
double depth_to_disparity(double depth, const CameraRig& rig);

}  // namespace cdisp
