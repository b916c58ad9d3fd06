#pragma once

// Desk-scale stereo pipeline: layered synthetic scenes with exact sub-pixel
// ground truth, SAD block-matching cost volumes, and a small trainable head
// (a shared linear offset predictor plus a softmax temperature) fitted by
// deterministic gradient descent on frozen costs.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cdisp/distribution.hpp"
#include "cdisp/groundtruth.hpp"
#include "cdisp/losses.hpp"

namespace cdisp {

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major

  GrayImage() = default;
  GrayImage(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, 0) {}

  std::uint8_t at(int u, int v) const noexcept {
    return pixels[static_cast<std::size_t>(v) * width + u];
  }
  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

enum class Shape { Rectangle, Ellipse };

/// A fronto-parallel layer. (x, y) is the center and (w, h) the full extent
/// in left-image pixel coordinates.
struct SceneObject {
  Shape shape = Shape::Rectangle;
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;
  double disparity = 0.0;

  bool covers(double u, double v) const noexcept;
  friend bool operator==(const SceneObject&, const SceneObject&) = default;
};

struct TextureSpec {
  double noise_amplitude = 0.15;  // std of the intensity texture, in [0, 1] units
  double smoothing_radius = 1.5;  // Gaussian sigma of the texture, in pixels
  friend bool operator==(const TextureSpec&, const TextureSpec&) = default;
};

struct SceneSpec {
  int width = 128;
  int height = 96;
  double background_disparity = 3.3;
  std::vector<SceneObject> objects;
  TextureSpec texture;
  std::uint64_t seed = 7;

  /// Throws Spec on nonpositive sizes, negative or non-finite disparities,
  /// disparities that leave no overlap with the right image, or negative
  /// texture parameters.
  void validate() const;

  friend bool operator==(const SceneSpec&, const SceneSpec&) = default;

  /// 128 x 96, one rectangle and one ellipse.
  static SceneSpec default_scene();
  /// Several thin, staggered objects; a large share of pixels sit near depth
  /// discontinuities.
  static SceneSpec boundary_heavy_scene();
};

/// Throws Spec unless every disparity lies inside the grid range and each
/// object differs from the background by at least two bins.
void validate_for_grid(const SceneSpec& spec, const GridSpec& grid);

struct StereoPair {
  GrayImage left;
  GrayImage right;
  DisparityMap gt;  // left view; right-occluded pixels invalid
};

StereoPair synth_scene(const SceneSpec& spec);

/// H x W x B matching costs, bin-major per pixel.
struct CostVolume {
  int width = 0;
  int height = 0;
  int bins = 0;
  std::vector<double> costs;

  std::span<const double> pixel(std::size_t index) const noexcept {
    return {costs.data() + index * bins, static_cast<std::size_t>(bins)};
  }
  std::span<const double> pixel(int u, int v) const noexcept {
    return pixel(static_cast<std::size_t>(v) * width + u);
  }
};

/// Mean absolute intensity difference (intensities scaled to [0, 1]) over a
/// window x window block between left(u, v) and right(u - d, v), with
/// d = grid.value(i) + sample_shift. Fractional d resamples the right image
/// linearly. Samples falling outside the right image take the worst
/// difference seen in the same window; a window entirely outside takes the
/// pixel's worst cost over the other bins.
CostVolume cost_volume_sad(const GrayImage& left, const GrayImage& right, const GridSpec& grid,
                           int window, double sample_shift = 0.0);

inline constexpr int kHeadFeatures = 5;

/// raw_offset(bin i) = weights . features(i) + bias, where features(i) are
/// the pixel's normalized costs at bins i-2 .. i+2 (edges replicated).
/// The softmax temperature is exp(log_temperature).
struct OffsetHead {
  std::array<double, kHeadFeatures> weights{};
  double bias = 0.0;
  double log_temperature = 0.0;

  double temperature() const noexcept;

  /// Zero weights, bias s/2 (every atom starts mid-cell), temperature 1.
  static OffsetHead initial(const GridSpec& grid);
  /// A head whose offsets are identically zero.
  static OffsetHead no_offsets();

  friend bool operator==(const OffsetHead&, const OffsetHead&) = default;
};

/// Per-pixel cost normalization used for head features:
/// (c - min) / (mean - min + 1e-6).
void normalized_costs_into(std::span<const double> costs, std::span<double> out);
void head_offsets_into(const OffsetHead& head, std::span<const double> normalized,
                       std::span<double> raw_offsets);

struct FitOptions {
  LossConfig loss;
  bool train_offsets = true;
  bool multimodal = false;
  int mm_k = 3;
  double mm_alpha = 0.8;
  int steps = 2000;
  double step_size = 0.02;
  std::uint64_t seed = 0;
  // 0 uses every valid pixel each step; otherwise a seeded minibatch.
  int batch_pixels = 0;
  // Also record the uni-modal W1 loss of the current parameters each step.
  bool track_unimodal_w1 = false;
};

struct FitResult {
  OffsetHead head;
  std::vector<double> trace;             // training loss before each update
  std::vector<double> unimodal_w1_trace; // filled when track_unimodal_w1
};

/// Gradient descent on (head weights, bias, log temperature) minimizing the
/// mean loss over valid ground-truth pixels. Throws EmptySet if none.
FitResult fit(const CostVolume& cv, const DisparityMap& gt, const GridSpec& grid,
              const FitOptions& options);

enum class Readout { MeanGrid, MeanMixture, ModeOffset };

DisparityMap predict(const CostVolume& cv, const OffsetHead& head, const GridSpec& grid,
                     Readout readout);

/// Everything needed to rebuild the cost volume and apply a fitted head.
struct TrainedModel {
  GridSpec grid;
  int window = 5;
  double cost_shift = 0.0;
  bool offsets = true;
  std::string loss = "w1";
  OffsetHead head;

  friend bool operator==(const TrainedModel&, const TrainedModel&) = default;
};

}  // namespace cdisp
