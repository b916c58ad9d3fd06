#include "cdisp/checks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <sstream>

#include "cdisp/error.hpp"

namespace cdisp {
namespace {

constexpr double kFdStep = 1e-6;
constexpr double kKinkMargin = 1e-3;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }
  bool coin(double p = 0.5) { return uniform(0.0, 1.0) < p; }

 private:
  std::mt19937_64 engine_;
};

DiracMixture random_mixture(Rng& rng, int max_atoms) {
  const int n = rng.integer(1, max_atoms);
  // Lattice locations produce ties and shared supports between the pair.
  const bool lattice = rng.coin(0.3);
  std::vector<double> x(n);
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) {
    x[i] = lattice ? static_cast<double>(rng.integer(-10, 10)) : rng.uniform(-10.0, 10.0);
    w[i] = rng.coin(0.05) ? 0.0 : rng.uniform(0.01, 1.0);
  }
  if (std::all_of(w.begin(), w.end(), [](double v) { return v == 0.0; })) w[0] = 1.0;
  return DiracMixture::make(x, w);
}

SuiteResult finish(std::string name, std::size_t n, double err, double tol) {
  return SuiteResult{std::move(name), n, err, tol, n > 0 && err <= tol};
}

struct Instance {
  GridSpec grid;
  PixelDistribution pd;
  std::vector<double> target_x;
  std::vector<double> target_w;
};

struct GradientCase {
  const char* name;
  LossConfig config;
  bool multimodal;
  double tolerance;
};

bool near_clip(const Instance& in) {
  for (double r : in.pd.raw_offsets) {
    if (std::fabs(r) < kKinkMargin || std::fabs(r - in.grid.bin_size) < kKinkMargin) return true;
  }
  return false;
}

// True if any two of the predicted and target atoms are within the margin,
// or the two CDFs come within the margin of each other on an interval.
bool near_cdf_kink(const Instance& in, const DiracMixture& target) {
  const auto& pd = in.pd;
  std::vector<double> atoms(pd.costs.size());
  std::vector<double> probs(pd.costs.size());
  atom_locations_into(pd.view(), in.grid, atoms);
  probabilities_into(pd.view(), probs);
  struct Point {
    double x;
    double df;
    double dg;
  };
  std::vector<Point> points;
  for (std::size_t i = 0; i < atoms.size(); ++i) points.push_back({atoms[i], probs[i], 0.0});
  for (std::size_t j = 0; j < target.size(); ++j) points.push_back({target.supports()[j], 0.0, target.weights()[j]});
  std::sort(points.begin(), points.end(), [](const Point& a, const Point& b) { return a.x < b.x; });
  double f = 0.0;
  double g = 0.0;
  for (std::size_t k = 0; k < points.size(); ++k) {
    if (k + 1 < points.size() && points[k + 1].x - points[k].x < kKinkMargin) return true;
    f += points[k].df;
    g += points[k].dg;
    if (k + 1 < points.size() && std::fabs(f - g) < kKinkMargin) return true;
  }
  return false;
}

bool near_point_kink(const Instance& in, double target) {
  std::vector<double> atoms(in.pd.costs.size());
  atom_locations_into(in.pd.view(), in.grid, atoms);
  return std::any_of(atoms.begin(), atoms.end(), [&](double a) { return std::fabs(a - target) < kKinkMargin; });
}

Instance draw_instance(Rng& rng, bool multimodal) {
  static constexpr double kBinSizes[] = {0.5, 1.0, 2.0, 3.0};
  Instance in;
  in.grid.origin = rng.uniform(-5.0, 5.0);
  in.grid.bin_size = kBinSizes[rng.integer(0, 3)];
  in.grid.count = rng.integer(2, 24);
  const int n = in.grid.count;
  const double s = in.grid.bin_size;
  in.pd.temperature = std::exp(rng.uniform(-1.0, 1.0));
  in.pd.costs.resize(n);
  in.pd.raw_offsets.resize(n);
  for (int i = 0; i < n; ++i) {
    in.pd.costs[i] = rng.uniform(-2.0, 2.0);
    in.pd.raw_offsets[i] = rng.uniform(-0.5 * s, 1.5 * s);
  }
  const int m = multimodal ? rng.integer(1, 9) : 1;
  for (int j = 0; j < m; ++j) {
    in.target_x.push_back(rng.uniform(in.grid.origin, in.grid.upper()));
    in.target_w.push_back(rng.uniform(0.05, 1.0));
  }
  return in;
}

bool excluded(const Instance& in, const GradientCase& c, const DiracMixture& target) {
  if (near_clip(in)) return true;
  if (c.multimodal) return near_cdf_kink(in, target);
  const bool abs_kink = c.config.kind == LossKind::W1 || c.config.kind == LossKind::KlLaplace;
  return abs_kink && near_point_kink(in, target.supports()[0]);
}

SuiteResult gradient_suite(const GradientCase& c, const CheckOptions& options, const LossKernel& kernel,
                           std::uint64_t salt) {
  Rng rng(options.seed * 1000003u + salt);
  LossWorkspace ws;
  double worst = 0.0;
  std::size_t checked = 0;
  int attempts = 0;
  while (checked < static_cast<std::size_t>(options.gradient_instances) &&
         attempts < 100 * options.gradient_instances) {
    ++attempts;
    Instance in = draw_instance(rng, c.multimodal);
    const DiracMixture target = DiracMixture::make(in.target_x, in.target_w);
    if (excluded(in, c, target)) continue;
    const std::size_t n = in.pd.costs.size();
    std::vector<double> d_costs(n);
    std::vector<double> d_raw(n);
    std::vector<double> tmp_c(n);
    std::vector<double> tmp_r(n);
    kernel(in.pd.view(), in.grid, target, c.config, d_costs, d_raw, ws);

    auto value_at = [&]() { return kernel(in.pd.view(), in.grid, target, c.config, tmp_c, tmp_r, ws); };
    auto check = [&](double& slot, double analytic) {
      const double saved = slot;
      slot = saved + kFdStep;
      const double up = value_at();
      slot = saved - kFdStep;
      const double down = value_at();
      slot = saved;
      const double numeric = (up - down) / (2.0 * kFdStep);
      const double err = std::fabs(analytic - numeric) / std::max({1.0, std::fabs(analytic), std::fabs(numeric)});
      worst = std::max(worst, err);
    };
    for (std::size_t i = 0; i < n; ++i) check(in.pd.costs[i], d_costs[i]);
    for (std::size_t i = 0; i < n; ++i) check(in.pd.raw_offsets[i], d_raw[i]);
    ++checked;
  }
  return finish(std::string("gradient/") + c.name, checked, worst, c.tolerance);
}

}  // namespace

std::vector<SuiteResult> transport_suites(const CheckOptions& options) {
  Rng rng(options.seed);
  double w1_err = 0.0;
  double w2_err = 0.0;
  double dirac_err = 0.0;
  for (int t = 0; t < options.transport_pairs; ++t) {
    const DiracMixture a = random_mixture(rng, options.max_atoms);
    const DiracMixture b = random_mixture(rng, options.max_atoms);
    const double general = wp_general(a, b, 1.0);
    const double area = w1_cdf_area(a, b);
    const double naive = oracle_wp_naive(a, b, 1.0);
    w1_err = std::max({w1_err, std::fabs(general - area), std::fabs(general - naive), std::fabs(area - naive)});
    w2_err = std::max(w2_err, std::fabs(wp_general(a, b, 2.0) - oracle_wp_naive(a, b, 2.0)));
    const double point = rng.uniform(-10.0, 10.0);
    for (double p : {1.0, 2.0}) {
      dirac_err = std::max(dirac_err,
                           std::fabs(wp_to_dirac(a, point, p) - wp_general(a, DiracMixture::dirac(point), p)));
    }
  }
  const auto n = static_cast<std::size_t>(options.transport_pairs);
  return {finish("transport/w1-three-routes", n, w1_err, 1e-12),
          finish("transport/w2-vs-naive", n, w2_err, 1e-12),
          finish("transport/dirac-closed-form", n, dirac_err, 1e-12)};
}

std::vector<SuiteResult> gradient_suites(const CheckOptions& options) {
  const LossKernel kernel = options.kernel ? options.kernel : LossKernel(loss_into);
  auto config = [](LossKind kind, bool exact = true, bool mixture_mean = false) {
    LossConfig c;
    c.kind = kind;
    c.kl_exact = exact;
    c.regress_mixture_mean = mixture_mean;
    return c;
  };
  const GradientCase cases[] = {
      {"w1-dirac", config(LossKind::W1), false, 1e-5},
      {"w2sq-dirac", config(LossKind::W2Squared), false, 1e-5},
      {"w1-mm", config(LossKind::W1), true, 1e-4},
      {"kl-laplace-exact", config(LossKind::KlLaplace), false, 1e-5},
      {"kl-gaussian-exact", config(LossKind::KlGaussian), false, 1e-5},
      {"smooth-l1-grid-mean", config(LossKind::SmoothL1), false, 1e-5},
      {"smooth-l1-mixture-mean", config(LossKind::SmoothL1, true, true), false, 1e-5},
  };
  std::vector<SuiteResult> out;
  std::uint64_t salt = 1;
  for (const GradientCase& c : cases) out.push_back(gradient_suite(c, options, kernel, salt++));
  return out;
}

std::vector<SuiteResult> kl_suites(const CheckOptions& options) {
  Rng rng(options.seed * 7919u + 3u);
  double agree_tol_ratio = 0.0;
  double decompose_err = 0.0;
  std::size_t n = 0;
  for (int t = 0; t < options.kl_instances; ++t) {
    GridSpec grid{0.0, 1.0, rng.integer(4, 32), DomainKind::DepthMeters};
    const double scale = 1.0;
    const double target = rng.uniform(grid.origin, grid.upper() - 1e-9);
    const int bin = target_bin(grid, target);
    PixelDistribution pd;
    pd.temperature = std::exp(rng.uniform(-1.0, 1.0));
    pd.costs.resize(grid.count);
    pd.raw_offsets.resize(grid.count);
    // Every other bin sits at least log(999 (B - 1)) logits above the target
    // bin, which leaves the target bin >= 0.999 of the mass.
    const double gap = std::log(999.0 * (grid.count - 1));
    for (int i = 0; i < grid.count; ++i) {
      pd.costs[i] = i == bin ? 0.0 : pd.temperature * (gap + rng.uniform(0.0, 4.0));
      pd.raw_offsets[i] = rng.uniform(-0.2, 1.2);
    }
    const std::vector<double> probs = probabilities(pd);
    if (probs[bin] < 0.999) continue;
    ++n;
    const double exact = kl_laplace_loss(pd, grid, target, scale, true).value;
    const double approx = kl_laplace_loss(pd, grid, target, scale, false).value;
    const double err = std::fabs(exact - approx);
    agree_tol_ratio = std::max(agree_tol_ratio, err / (1e-3 * (1.0 + std::fabs(exact))));

    const double atom = grid.value(bin) + clip_offset(pd.raw_offsets[bin], grid.bin_size);
    const double parts = -std::log(probs[bin]) + std::fabs(target - atom) / scale + std::log(2.0 * scale);
    decompose_err = std::max(decompose_err, std::fabs(approx - parts) / (1.0 + std::fabs(approx)));
  }
  // The agreement tolerance scales with the value, so report the worst
  // error-to-tolerance ratio against a bound of 1.
  SuiteResult agree = finish("kl/exact-vs-one-hot", n, agree_tol_ratio, 1.0);
  return {agree, finish("kl/one-hot-decomposition", n, decompose_err, 1e-12)};
}

std::vector<SuiteResult> run_checks(const CheckOptions& options) {
  std::vector<SuiteResult> all = transport_suites(options);
  for (auto& r : gradient_suites(options)) all.push_back(std::move(r));
  for (auto& r : kl_suites(options)) all.push_back(std::move(r));
  return all;
}

std::string format_checks(const std::vector<SuiteResult>& results) {
  std::ostringstream out;
  for (const SuiteResult& r : results) {
    char line[256];
    std::snprintf(line, sizeof line, "%s %s n=%zu max_err=%.3e tol=%.1e\n", r.passed ? "PASS" : "FAIL",
                  r.name.c_str(), r.instances, r.max_error, r.tolerance);
    out << line;
  }
  return out.str();
}

}  // namespace cdisp
