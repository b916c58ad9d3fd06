#pragma once

// Self-check suites behind `cdisp check`: transport oracles, finite-difference
// gradient checks of every loss, and the exact vs one-hot KL comparison.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cdisp/losses.hpp"

namespace cdisp {

struct SuiteResult {
  std::string name;
  std::size_t instances = 0;  // instances actually checked
  double max_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

/// Signature of loss_into; the gradient suites take one so tests can inject a
/// broken kernel.
using LossKernel = std::function<double(const PixelView&, const GridSpec&, const DiracMixture&,
                                        const LossConfig&, std::span<double>, std::span<double>,
                                        LossWorkspace&)>;

struct CheckOptions {
  std::uint64_t seed = 1;
  int transport_pairs = 1000;
  int max_atoms = 64;
  int gradient_instances = 200;
  int kl_instances = 500;
  LossKernel kernel;  // empty means loss_into
};

/// Pairs of random mixtures; the three W1 routes and the two W2 routes must
/// agree to 1e-12, and wp_to_dirac must match wp_general on a point mass.
std::vector<SuiteResult> transport_suites(const CheckOptions& options);

/// Central differences with h = 1e-6 on every cost and raw offset. The error
/// of one coordinate is |analytic - numeric| / max(1, |analytic|, |numeric|).
/// Instances within 1e-3 of a kink (clip bounds, |x| at zero, coincident CDF
/// atoms, F = G plateaus) are redrawn.
std::vector<SuiteResult> gradient_suites(const CheckOptions& options);

/// Exact vs one-hot KL-Laplace on pixels whose target bin holds >= 0.999 of
/// the mass, plus the term-by-term decomposition of the one-hot form.
std::vector<SuiteResult> kl_suites(const CheckOptions& options);

std::vector<SuiteResult> run_checks(const CheckOptions& options);

/// One line per suite: "<PASS|FAIL> <name> n=<instances> max_err=<e> tol=<t>".
std::string format_checks(const std::vector<SuiteResult>& results);

}  // namespace cdisp
