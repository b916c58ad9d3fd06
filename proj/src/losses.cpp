#include "cdisp/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "cdisp/error.hpp"

namespace cdisp {
namespace {

double sign(double x) noexcept { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

void prepare(const PixelView& pd, const GridSpec& grid, LossWorkspace& ws) {
  const std::size_t n = pd.costs.size();
  ws.probs.resize(n);
  ws.atoms.resize(n);
  probabilities_into(pd, ws.probs);
  atom_locations_into(pd, grid, ws.atoms);
}

// d/d cost_e from d/d logit_e with logits = -cost / temperature.
void logits_to_costs(std::span<double> grad, double temperature) {
  for (double& g : grad) g = -g / temperature;
}

double wp_dirac_kernel(const PixelView& pd, const GridSpec& grid, double target, WpOrder order,
                       std::span<double> d_costs, std::span<double> d_off, LossWorkspace& ws) {
  prepare(pd, grid, ws);
  const std::size_t n = pd.costs.size();
  ws.scratch.resize(n);
  double value = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = ws.atoms[i] - target;
    ws.scratch[i] = order == WpOrder::W1 ? std::fabs(e) : e * e;
    value += ws.probs[i] * ws.scratch[i];
    const double slope = order == WpOrder::W1 ? sign(e) : 2.0 * e;
    d_off[i] = offset_active(pd.raw_offsets[i], grid.bin_size) ? ws.probs[i] * slope : 0.0;
  }
  for (std::size_t i = 0; i < n; ++i) d_costs[i] = ws.probs[i] * (ws.scratch[i] - value);
  logits_to_costs(d_costs, pd.temperature);
  return value;
}

// Area between the predicted and target CDFs. Both atom sets are merged into
// one sorted sweep; each interval between consecutive points contributes
// |F - G| * length.
double w1_mm_kernel(const PixelView& pd, const GridSpec& grid, const DiracMixture& target,
                    std::span<double> d_costs, std::span<double> d_off, LossWorkspace& ws) {
  prepare(pd, grid, ws);
  const std::size_t n = pd.costs.size();
  const auto& tx = target.supports();
  const auto& tw = target.weights();
  const std::size_t m = tx.size();

  // Sweep order: predicted atoms are encoded as [0, n), target atoms as
  // [n, n + m). Target atoms are already sorted.
  ws.order.resize(n);
  for (std::size_t i = 0; i < n; ++i) ws.order[i] = i;
  std::sort(ws.order.begin(), ws.order.end(), [&](std::size_t a, std::size_t b) {
    return ws.atoms[a] < ws.atoms[b] || (ws.atoms[a] == ws.atoms[b] && a < b);
  });
  std::vector<std::size_t>& sweep = ws.order;
  sweep.resize(n + m);
  std::copy_backward(sweep.begin(), sweep.begin() + static_cast<std::ptrdiff_t>(n), sweep.end());
  {
    std::size_t i = m;  // predicted entries now live in [m, m + n)
    std::size_t j = 0;
    std::size_t k = 0;
    while (i < m + n || j < m) {
      if (j == m || (i < m + n && ws.atoms[sweep[i]] <= tx[j])) {
        sweep[k++] = sweep[i++];
      } else {
        sweep[k++] = n + j++;
      }
    }
  }
  auto location = [&](std::size_t id) { return id < n ? ws.atoms[id] : tx[id - n]; };

  // Forward pass: CDF values after each point, interval signs and the value.
  const std::size_t total = n + m;
  ws.scratch.resize(total);  // sign of F - G on the interval after point k
  ws.suffix.assign(total + 1, 0.0);
  double f = 0.0;
  double g = 0.0;
  double value = 0.0;
  for (std::size_t k = 0; k < total; ++k) {
    const std::size_t id = sweep[k];
    const double f_before = f;
    if (id < n) {
      f += ws.probs[id];
    } else {
      g += tw[id - n];
    }
    const double length = k + 1 < total ? location(sweep[k + 1]) - location(id) : 0.0;
    ws.scratch[k] = sign(f - g);
    value += std::fabs(f - g) * length;
    if (id < n) {
      // Moving the atom right replaces F_after by F_before on a sliver of
      // the following interval. Coincident points get the zero subgradient.
      const bool isolated = (k == 0 || location(sweep[k - 1]) != location(id)) &&
                            (k + 1 == total || location(sweep[k + 1]) != location(id));
      const double slope = isolated ? std::fabs(f_before - g) - std::fabs(f - g) : 0.0;
      d_off[id] = offset_active(pd.raw_offsets[id], grid.bin_size) ? slope : 0.0;
    }
  }
  // d value / d weight_j = sum of signed interval lengths right of atom j.
  for (std::size_t k = total; k-- > 0;) {
    const double length = k + 1 < total ? location(sweep[k + 1]) - location(sweep[k]) : 0.0;
    ws.suffix[k] = ws.suffix[k + 1] + ws.scratch[k] * length;
  }
  double avg = 0.0;
  for (std::size_t k = 0; k < total; ++k) {
    const std::size_t id = sweep[k];
    if (id < n) {
      d_costs[id] = ws.suffix[k];
      avg += ws.probs[id] * ws.suffix[k];
    }
  }
  for (std::size_t i = 0; i < n; ++i) d_costs[i] = ws.probs[i] * (d_costs[i] - avg);
  logits_to_costs(d_costs, pd.temperature);
  return value;
}

double smooth_l1_kernel(const PixelView& pd, const GridSpec& grid, double target, bool mixture_mean,
                        std::span<double> d_costs, std::span<double> d_off, LossWorkspace& ws) {
  prepare(pd, grid, ws);
  const std::size_t n = pd.costs.size();
  if (!mixture_mean) {
    for (std::size_t i = 0; i < n; ++i) ws.atoms[i] = grid.value(static_cast<int>(i));
  }
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += ws.probs[i] * ws.atoms[i];
  const SmoothL1 r = smooth_l1_regression(mean, target);
  for (std::size_t i = 0; i < n; ++i) {
    d_costs[i] = r.d_pred * ws.probs[i] * (ws.atoms[i] - mean);
    d_off[i] = mixture_mean && offset_active(pd.raw_offsets[i], grid.bin_size)
                   ? r.d_pred * ws.probs[i]
                   : 0.0;
  }
  logits_to_costs(d_costs, pd.temperature);
  return r.value;
}

enum class Kernel { Laplace, Gaussian };

// -log sum_i p_i k(t - c_i), k a normalized Laplace or Gaussian density.
double kl_kernel(const PixelView& pd, const GridSpec& grid, double target, double scale,
                 bool exact, Kernel kernel, std::span<double> d_costs, std::span<double> d_off,
                 LossWorkspace& ws) {
  prepare(pd, grid, ws);
  const std::size_t n = pd.costs.size();
  const double log_norm = kernel == Kernel::Laplace
                              ? std::log(2.0 * scale)
                              : std::log(scale * std::sqrt(2.0 * std::numbers::pi));
  auto penalty = [&](double e) {
    return kernel == Kernel::Laplace ? std::fabs(e) / scale : e * e / (2.0 * scale * scale);
  };
  auto penalty_slope = [&](double e) {
    return kernel == Kernel::Laplace ? sign(e) / scale : e / (scale * scale);
  };

  // log p_i = z_i - logsumexp(z), z = -cost / temperature.
  const double lowest = *std::min_element(pd.costs.begin(), pd.costs.end());
  double partition = 0.0;
  for (std::size_t i = 0; i < n; ++i) partition += std::exp(-(pd.costs[i] - lowest) / pd.temperature);
  auto log_prob = [&](std::size_t i) {
    return -(pd.costs[i] - lowest) / pd.temperature - std::log(partition);
  };

  if (!exact) {
    const auto bin = static_cast<std::size_t>(target_bin(grid, target));
    const double e = ws.atoms[bin] - target;
    for (std::size_t i = 0; i < n; ++i) {
      d_costs[i] = ((i == bin ? 1.0 : 0.0) - ws.probs[i]) / pd.temperature;
      d_off[i] = 0.0;
    }
    if (offset_active(pd.raw_offsets[bin], grid.bin_size)) d_off[bin] = penalty_slope(e);
    return -log_prob(bin) + penalty(target - ws.atoms[bin]) + log_norm;
  }

  ws.scratch.resize(n);
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    ws.scratch[i] = log_prob(i) - penalty(target - ws.atoms[i]);
    top = std::max(top, ws.scratch[i]);
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += std::exp(ws.scratch[i] - top);
  const double lse = top + std::log(sum);
  for (std::size_t i = 0; i < n; ++i) {
    const double resp = std::exp(ws.scratch[i] - lse);
    d_costs[i] = (resp - ws.probs[i]) / pd.temperature;
    d_off[i] = offset_active(pd.raw_offsets[i], grid.bin_size)
                   ? resp * penalty_slope(ws.atoms[i] - target)
                   : 0.0;
  }
  return -lse + log_norm;
}

LossGrad make_grad(std::size_t n) {
  LossGrad out;
  out.d_costs.assign(n, 0.0);
  out.d_raw_offsets.assign(n, 0.0);
  return out;
}

void require_finite_target(double target) {
  if (!std::isfinite(target)) throw Error(ErrorCode::InvalidInput, "loss target must be finite");
}

const DiracMixture& require_point_target(const DiracMixture& target) {
  if (target.size() != 1) {
    throw Error(ErrorCode::InvalidInput, "this loss needs a single-atom target");
  }
  return target;
}

}  // namespace

int target_bin(const GridSpec& grid, double target) {
  if (!(target >= grid.origin && target <= grid.upper())) {
    throw Error(ErrorCode::Domain,
                "target " + std::to_string(target) + " lies outside the grid range");
  }
  const int bin = static_cast<int>(std::floor((target - grid.origin) / grid.bin_size));
  return std::clamp(bin, 0, grid.count - 1);
}

SmoothL1 smooth_l1_regression(double pred, double target) {
  const double e = pred - target;
  if (std::fabs(e) < 1.0) return {0.5 * e * e, e};
  return {std::fabs(e) - 0.5, sign(e)};
}

LossGrad wp_loss_dirac(const PixelDistribution& pd, const GridSpec& grid, double target,
                       WpOrder order) {
  validate(pd.view(), grid);
  require_finite_target(target);
  LossWorkspace ws;
  LossGrad out = make_grad(pd.costs.size());
  out.value = wp_dirac_kernel(pd.view(), grid, target, order, out.d_costs, out.d_raw_offsets, ws);
  return out;
}

LossGrad w1_loss_mm(const PixelDistribution& pd, const GridSpec& grid, const DiracMixture& target) {
  validate(pd.view(), grid);
  LossWorkspace ws;
  LossGrad out = make_grad(pd.costs.size());
  out.value = w1_mm_kernel(pd.view(), grid, target, out.d_costs, out.d_raw_offsets, ws);
  return out;
}

LossGrad smooth_l1_mean_loss(const PixelDistribution& pd, const GridSpec& grid, double target,
                             bool mixture_mean) {
  validate(pd.view(), grid);
  require_finite_target(target);
  LossWorkspace ws;
  LossGrad out = make_grad(pd.costs.size());
  out.value = smooth_l1_kernel(pd.view(), grid, target, mixture_mean, out.d_costs,
                               out.d_raw_offsets, ws);
  return out;
}

LossGrad kl_laplace_loss(const PixelDistribution& pd, const GridSpec& grid, double target,
                         double scale, bool exact) {
  validate(pd.view(), grid);
  require_finite_target(target);
  if (!(scale > 0.0)) throw Error(ErrorCode::Domain, "Laplace scale must be positive");
  target_bin(grid, target);
  LossWorkspace ws;
  LossGrad out = make_grad(pd.costs.size());
  out.value = kl_kernel(pd.view(), grid, target, scale, exact, Kernel::Laplace, out.d_costs,
                        out.d_raw_offsets, ws);
  return out;
}

LossGrad kl_gaussian_loss(const PixelDistribution& pd, const GridSpec& grid, double target,
                          double sigma, bool exact) {
  validate(pd.view(), grid);
  require_finite_target(target);
  if (!(sigma > 0.0)) throw Error(ErrorCode::Domain, "Gaussian sigma must be positive");
  target_bin(grid, target);
  LossWorkspace ws;
  LossGrad out = make_grad(pd.costs.size());
  out.value = kl_kernel(pd.view(), grid, target, sigma, exact, Kernel::Gaussian, out.d_costs,
                        out.d_raw_offsets, ws);
  return out;
}

double loss_into(const PixelView& pd, const GridSpec& grid, const DiracMixture& target,
                 const LossConfig& config, std::span<double> d_costs,
                 std::span<double> d_raw_offsets, LossWorkspace& ws) {
  switch (config.kind) {
    case LossKind::W1:
      if (target.size() == 1) {
        return wp_dirac_kernel(pd, grid, target.supports()[0], WpOrder::W1, d_costs, d_raw_offsets, ws);
      }
      return w1_mm_kernel(pd, grid, target, d_costs, d_raw_offsets, ws);
    case LossKind::W2Squared:
      return wp_dirac_kernel(pd, grid, require_point_target(target).supports()[0],
                             WpOrder::W2Squared, d_costs, d_raw_offsets, ws);
    case LossKind::KlLaplace:
      return kl_kernel(pd, grid, require_point_target(target).supports()[0], config.smoothing,
                       config.kl_exact, Kernel::Laplace, d_costs, d_raw_offsets, ws);
    case LossKind::KlGaussian:
      return kl_kernel(pd, grid, require_point_target(target).supports()[0], config.smoothing,
                       config.kl_exact, Kernel::Gaussian, d_costs, d_raw_offsets, ws);
    case LossKind::SmoothL1:
      return smooth_l1_kernel(pd, grid, require_point_target(target).supports()[0],
                              config.regress_mixture_mean, d_costs, d_raw_offsets, ws);
  }
  throw Error(ErrorCode::InvalidInput, "unknown loss kind");
}

LossGrad evaluate_loss(const PixelDistribution& pd, const GridSpec& grid, const DiracMixture& target,
                       const LossConfig& config) {
  validate(pd.view(), grid);
  if (config.kind == LossKind::KlLaplace || config.kind == LossKind::KlGaussian) {
    if (!(config.smoothing > 0.0)) throw Error(ErrorCode::Domain, "KL smoothing must be positive");
    target_bin(grid, require_point_target(target).supports()[0]);
  }
  LossWorkspace ws;
  LossGrad out = make_grad(pd.costs.size());
  out.value = loss_into(pd.view(), grid, target, config, out.d_costs, out.d_raw_offsets, ws);
  return out;
}

BatchLoss batch_loss(std::span<const PixelDistribution> field, const GridSpec& grid,
                     std::span<const DiracMixture> targets, std::span<const std::uint8_t> valid,
                     const LossConfig& config) {
  if (field.size() != targets.size() || field.size() != valid.size()) {
    throw Error(ErrorCode::InvalidInput, "batch field, targets and mask sizes disagree");
  }
  BatchLoss out;
  out.grads.reserve(field.size());
  std::size_t count = 0;
  for (std::size_t i = 0; i < field.size(); ++i) {
    if (!valid[i]) {
      out.grads.push_back(make_grad(field[i].costs.size()));
      continue;
    }
    out.grads.push_back(evaluate_loss(field[i], grid, targets[i], config));
    out.value += out.grads.back().value;
    ++count;
  }
  if (count == 0) throw Error(ErrorCode::EmptySet, "batch has no valid pixels");
  const double inv = 1.0 / static_cast<double>(count);
  out.value *= inv;
  for (std::size_t i = 0; i < field.size(); ++i) {
    if (!valid[i]) continue;
    for (double& g : out.grads[i].d_costs) g *= inv;
    for (double& g : out.grads[i].d_raw_offsets) g *= inv;
  }
  return out;
}

}  // namespace cdisp
