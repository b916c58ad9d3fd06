#pragma once

// Training objectives over (costs, raw offsets) with analytic gradients.
//
// Every loss returns its value together with d/d costs and d/d raw_offsets.
// Offsets only receive gradient where the clip to [0, s] is the identity;
// |x| kinks and coincident CDF atoms take the zero subgradient.

#include <cstdint>
#include <span>
#include <vector>

#include "cdisp/distribution.hpp"
#include "cdisp/transport.hpp"

namespace cdisp {

struct LossGrad {
  double value = 0.0;
  std::vector<double> d_costs;
  std::vector<double> d_raw_offsets;
};

enum class WpOrder { W1, W2Squared };

enum class LossKind { W1, W2Squared, KlLaplace, KlGaussian, SmoothL1 };

struct LossConfig {
  LossKind kind = LossKind::W1;
  // Laplace scale or Gaussian sigma for the smoothed KL losses.
  double smoothing = 1.0;
  // KL: full log-sum-exp form, or the one-hot classification + offset
  // regression reduction.
  bool kl_exact = true;
  // SmoothL1: regress the mean of the shifted mixture instead of the mean
  // over unshifted bin values.
  bool regress_mixture_mean = false;
};

/// Reusable scratch buffers for the span-based kernels.
struct LossWorkspace {
  std::vector<double> probs;
  std::vector<double> atoms;
  std::vector<double> scratch;
  std::vector<std::size_t> order;
  std::vector<double> suffix;
};

/// Joint Wasserstein loss against a point target: sum_i p_i |c_i - t|^p
/// for W1, and the same with squared distances for W2^2 (no root).
LossGrad wp_loss_dirac(const PixelDistribution& pd, const GridSpec& grid, double target,
                       WpOrder order);

/// W1 between the shifted mixture and an arbitrary target mixture, as the
/// area between the two CDFs.
LossGrad w1_loss_mm(const PixelDistribution& pd, const GridSpec& grid, const DiracMixture& target);

struct SmoothL1 {
  double value = 0.0;
  double d_pred = 0.0;
};

/// 0.5 e^2 for |e| < 1, |e| - 0.5 otherwise, with e = pred - target.
SmoothL1 smooth_l1_regression(double pred, double target);

/// Smooth-L1 of the mean readout, differentiated through the softmax.
LossGrad smooth_l1_mean_loss(const PixelDistribution& pd, const GridSpec& grid, double target,
                             bool mixture_mean);

/// KL against a Laplace-smoothed prediction. `exact` evaluates
/// -log sum_i p_i Lap(t - c_i; scale); otherwise the one-hot reduction
/// -log p_bin + |t - c_bin| / scale + log(2 scale).
LossGrad kl_laplace_loss(const PixelDistribution& pd, const GridSpec& grid, double target,
                         double scale, bool exact);

/// Gaussian counterpart of kl_laplace_loss; the reduction's regression term is
/// (t - c_bin)^2 / (2 sigma^2) and its constant log(sigma sqrt(2 pi)).
LossGrad kl_gaussian_loss(const PixelDistribution& pd, const GridSpec& grid, double target,
                          double sigma, bool exact);

/// Bin whose cell [value(i), value(i) + s) contains `target`; the upper grid
/// edge maps to the last bin. Throws Domain outside the grid.
int target_bin(const GridSpec& grid, double target);

/// Span-level dispatcher used by the trainer. Writes gradients into
/// d_costs / d_raw_offsets (sized to the grid) and returns the loss value.
/// Point-target losses require a single-atom target; W1 with several target
/// atoms uses the CDF-area form. No input validation is done here.
double loss_into(const PixelView& pd, const GridSpec& grid, const DiracMixture& target,
                 const LossConfig& config, std::span<double> d_costs,
                 std::span<double> d_raw_offsets, LossWorkspace& ws);

LossGrad evaluate_loss(const PixelDistribution& pd, const GridSpec& grid, const DiracMixture& target,
                       const LossConfig& config);

struct BatchLoss {
  double value = 0.0;
  std::vector<LossGrad> grads;  // one per pixel, zero for invalid pixels
};

/// Mean loss over pixels with valid[i] != 0, reduced in index order.
/// Throws EmptySet when no pixel is valid.
BatchLoss batch_loss(std::span<const PixelDistribution> field, const GridSpec& grid,
                     std::span<const DiracMixture> targets, std::span<const std::uint8_t> valid,
                     const LossConfig& config);

}  // namespace cdisp
