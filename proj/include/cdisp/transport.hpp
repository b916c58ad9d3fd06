#pragma once

// Exact optimal transport between finite probability measures on the real
// line. Everything here works on sorted atoms, so the distances cost one
// merge pass once the mixtures are built.

#include <span>
#include <vector>

namespace cdisp {

// Locations closer than this are fused into a single atom.
inline constexpr double kMergeTolerance = 1e-12;
// Allowed drift of the weight sum before renormalization.
inline constexpr double kWeightSumTolerance = 1e-9;

/// A finite discrete probability measure: strictly increasing supports with
/// positive weights that sum to one.
class DiracMixture {
 public:
  /// Canonicalizes (locations, weights): sorts, fuses coincident locations,
  /// drops zero weights and renormalizes. Throws InvalidDistribution on
  /// empty input, negative or non-finite values, or an all-zero weight vector.
  static DiracMixture make(std::span<const double> locations,
                           std::span<const double> weights);

  static DiracMixture dirac(double location);

  std::size_t size() const noexcept { return supports_.size(); }
  const std::vector<double>& supports() const noexcept { return supports_; }
  const std::vector<double>& weights() const noexcept { return weights_; }

  /// Same weights, every support moved by `delta`.
  DiracMixture shifted(double delta) const;
  /// Same weights, every support multiplied by `factor` > 0.
  DiracMixture scaled(double factor) const;

  friend bool operator==(const DiracMixture&, const DiracMixture&) = default;

 private:
  DiracMixture() = default;

  std::vector<double> supports_;
  std::vector<double> weights_;
};

inline DiracMixture make_mixture(std::span<const double> locations,
                                 std::span<const double> weights) {
  return DiracMixture::make(locations, weights);
}

/// Right-continuous step CDF. cumulative[i] is the mass at or left of
/// breakpoints[i]; the last entry is exactly 1.
struct StepCdf {
  std::vector<double> breakpoints;
  std::vector<double> cumulative;

  double operator()(double x) const;
};

StepCdf cdf(const DiracMixture& mix);

/// Generalized inverse CDF: the smallest support x with cdf(x) >= q.
double quantile(const DiracMixture& mix, double q);

/// (sum_i w_i |x_i - target|^p)^(1/p): the distance to a point mass.
double wp_to_dirac(const DiracMixture& mix, double target, double p);

/// W_p through the quantile functions, integrating |A^-1 - B^-1|^p over the
/// merged partition of [0, 1] induced by both cumulative weight sequences.
double wp_general(const DiracMixture& a, const DiracMixture& b, double p);

/// W_1 as the area between the two CDFs.
double w1_cdf_area(const DiracMixture& a, const DiracMixture& b);

/// Quadratic reference implementation of wp_general that shares no code with
/// it. Used by the check suites and tests.
double oracle_wp_naive(const DiracMixture& a, const DiracMixture& b, double p);

}  // namespace cdisp
