#include "cdisp/transport.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cdisp/error.hpp"

namespace cdisp {
namespace {

void require_exponent(double p) {
  if (!(p >= 1.0) || !std::isfinite(p)) {
    throw Error(ErrorCode::Domain, "transport exponent p must be >= 1, got " + std::to_string(p));
  }
}

// |x|^p with the two exponents used by the losses evaluated exactly.
double abs_pow(double x, double p) {
  const double a = std::fabs(x);
  if (p == 1.0) return a;
  if (p == 2.0) return a * a;
  return std::pow(a, p);
}

double root(double sum, double p) {
  if (p == 1.0) return sum;
  if (p == 2.0) return std::sqrt(sum);
  return std::pow(sum, 1.0 / p);
}

std::vector<double> cumulative_weights(const std::vector<double>& weights) {
  std::vector<double> cum(weights.size());
  std::partial_sum(weights.begin(), weights.end(), cum.begin());
  cum.back() = 1.0;
  return cum;
}

}  // namespace

DiracMixture DiracMixture::make(std::span<const double> locations,
                                std::span<const double> weights) {
  if (locations.empty() || locations.size() != weights.size()) {
    throw Error(ErrorCode::InvalidDistribution,
                "mixture needs equally sized, nonempty location and weight lists");
  }
  double total = 0.0;
  std::vector<std::size_t> order;
  order.reserve(locations.size());
  for (std::size_t i = 0; i < locations.size(); ++i) {
    if (!std::isfinite(locations[i]) || !std::isfinite(weights[i]) || weights[i] < 0.0) {
      throw Error(ErrorCode::InvalidDistribution,
                  "mixture atom " + std::to_string(i) + " has a non-finite location or invalid weight");
    }
    if (weights[i] > 0.0) {
      order.push_back(i);
      total += weights[i];
    }
  }
  if (order.empty() || !(total > 0.0)) {
    throw Error(ErrorCode::InvalidDistribution, "mixture weights sum to zero");
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return locations[a] < locations[b]; });

  DiracMixture mix;
  double anchor = 0.0;
  for (std::size_t idx : order) {
    const double x = locations[idx];
    if (!mix.supports_.empty() && x - anchor <= kMergeTolerance) {
      mix.weights_.back() += weights[idx];
      continue;
    }
    anchor = x;
    mix.supports_.push_back(x);
    mix.weights_.push_back(weights[idx]);
  }
  for (double& w : mix.weights_) w /= total;
  return mix;
}

DiracMixture DiracMixture::dirac(double location) {
  const double one = 1.0;
  return make(std::span(&location, 1), std::span(&one, 1));
}

DiracMixture DiracMixture::shifted(double delta) const {
  DiracMixture out = *this;
  for (double& x : out.supports_) x += delta;
  return out;
}

DiracMixture DiracMixture::scaled(double factor) const {
  if (!(factor > 0.0) || !std::isfinite(factor)) {
    throw Error(ErrorCode::Domain, "scale factor must be positive and finite");
  }
  DiracMixture out = *this;
  for (double& x : out.supports_) x *= factor;
  return out;
}

double StepCdf::operator()(double x) const {
  const auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), x);
  if (it == breakpoints.begin()) return 0.0;
  return cumulative[static_cast<std::size_t>(it - breakpoints.begin()) - 1];
}

StepCdf cdf(const DiracMixture& mix) {
  return StepCdf{mix.supports(), cumulative_weights(mix.weights())};
}

double quantile(const DiracMixture& mix, double q) {
  if (!(q >= 0.0 && q <= 1.0)) {
    throw Error(ErrorCode::Domain, "quantile level must lie in [0, 1]");
  }
  const std::vector<double> cum = cumulative_weights(mix.weights());
  const auto it = std::lower_bound(cum.begin(), cum.end(), q);
  return mix.supports()[static_cast<std::size_t>(it - cum.begin())];
}

double wp_to_dirac(const DiracMixture& mix, double target, double p) {
  require_exponent(p);
  if (!std::isfinite(target)) {
    throw Error(ErrorCode::InvalidInput, "transport target must be finite");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < mix.size(); ++i) {
    sum += mix.weights()[i] * abs_pow(mix.supports()[i] - target, p);
  }
  return root(sum, p);
}

double wp_general(const DiracMixture& a, const DiracMixture& b, double p) {
  require_exponent(p);
  const std::vector<double> ca = cumulative_weights(a.weights());
  const std::vector<double> cb = cumulative_weights(b.weights());
  const auto& xa = a.supports();
  const auto& xb = b.supports();

  double sum = 0.0;
  double level = 0.0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < ca.size() && j < cb.size()) {
    const double next = std::min(ca[i], cb[j]);
    if (next > level) sum += (next - level) * abs_pow(xa[i] - xb[j], p);
    level = std::max(level, next);
    if (ca[i] <= next) ++i;
    if (cb[j] <= next) ++j;
  }
  return root(sum, p);
}

double w1_cdf_area(const DiracMixture& a, const DiracMixture& b) {
  const auto& xa = a.supports();
  const auto& xb = b.supports();
  const auto& wa = a.weights();
  const auto& wb = b.weights();

  double fa = 0.0;
  double fb = 0.0;
  double area = 0.0;
  std::size_t i = 0;
  std::size_t j = 0;
  double x = std::min(xa.front(), xb.front());
  while (i < xa.size() || j < xb.size()) {
    while (i < xa.size() && xa[i] <= x) fa += wa[i++];
    while (j < xb.size() && xb[j] <= x) fb += wb[j++];
    if (i == xa.size() && j == xb.size()) break;
    double next = i < xa.size() ? xa[i] : xb[j];
    if (j < xb.size()) next = std::min(next, xb[j]);
    area += std::fabs(fa - fb) * (next - x);
    x = next;
  }
  return area;
}

double oracle_wp_naive(const DiracMixture& a, const DiracMixture& b, double p) {
  require_exponent(p);
  // Common refinement of [0, 1]: every partial sum of either weight list.
  std::vector<double> levels{0.0, 1.0};
  double acc = 0.0;
  for (double w : a.weights()) levels.push_back(acc += w);
  acc = 0.0;
  for (double w : b.weights()) levels.push_back(acc += w);
  std::sort(levels.begin(), levels.end());

  // Quantile at an interior point of a segment, by a fresh linear scan.
  auto scan = [](const DiracMixture& m, double q) {
    double mass = 0.0;
    for (std::size_t k = 0; k < m.size(); ++k) {
      mass += m.weights()[k];
      if (mass >= q) return m.supports()[k];
    }
    return m.supports().back();
  };

  double total = 0.0;
  for (std::size_t k = 1; k < levels.size(); ++k) {
    const double lo = std::min(levels[k - 1], 1.0);
    const double hi = std::min(levels[k], 1.0);
    if (hi <= lo) continue;
    const double mid = 0.5 * (lo + hi);
    total += (hi - lo) * std::pow(std::fabs(scan(a, mid) - scan(b, mid)), p);
  }
  return std::pow(total, 1.0 / p);
}

}  // namespace cdisp
