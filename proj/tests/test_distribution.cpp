#include <doctest.h>

#include <cmath>

#include "cdisp/distribution.hpp"
#include "cdisp/error.hpp"
#include "support/oracles.hpp"

using namespace cdisp;

namespace {

GridSpec grid(double origin, double s, int count) { return GridSpec{origin, s, count, DomainKind::DisparityPixels}; }

// Costs whose softmax at temperature 1 is exactly `probs` (up to rounding).
PixelDistribution from_probs(const std::vector<double>& probs, std::vector<double> raw = {}) {
  PixelDistribution pd;
  for (double p : probs) pd.costs.push_back(p > 0 ? -std::log(p) : 800.0);
  pd.raw_offsets = raw.empty() ? std::vector<double>(probs.size(), 0.0) : raw;
  return pd;
}

}  // namespace

TEST_CASE("grid values and validation") {
  const GridSpec g = GridSpec::default_disparity();
  CHECK(g.value(0) == 0.0);
  CHECK(g.value(95) == 190.0);
  CHECK(g.upper() == 192.0);
  CHECK(GridSpec::default_depth().upper() == 80.0);
  CHECK_THROWS_AS(grid(0, 0, 4).validate(), Error);
  CHECK_THROWS_AS(grid(0, 1, 1).validate(), Error);
  CHECK_THROWS_AS(grid(std::nan(""), 1, 4).validate(), Error);
}

TEST_CASE("probabilities") {
  PixelDistribution pd{{1, 1, 1, 1}, {0, 0, 0, 0}, 1.0};
  for (double p : probabilities(pd)) CHECK(p == 0.25);

  pd = {{0, 1}, {0, 0}, 1.0};
  const auto p = probabilities(pd);
  CHECK(p[0] == doctest::Approx(0.7311).epsilon(1e-4));
  CHECK(p[1] == doctest::Approx(0.2689).epsilon(1e-4));

  pd = {{0, 30, 40}, {0, 0, 0}, 1.0};
  CHECK(probabilities(pd)[0] >= 1 - 1e-6);

  pd = {{0, std::nan("")}, {0, 0}, 1.0};
  CHECK_THROWS_AS(probabilities(pd), Error);
  pd = {{0, 1}, {0, 0}, 0.0};
  CHECK_THROWS_AS(probabilities(pd), Error);
}

TEST_CASE("probabilities form a simplex and ignore constant shifts") {
  oracle::Gen gen(5);
  for (int t = 0; t < 200; ++t) {
    const int n = gen.integer(2, 40);
    PixelDistribution pd;
    pd.temperature = std::exp(gen.uniform(-2, 2));
    for (int i = 0; i < n; ++i) pd.costs.push_back(gen.uniform(-5, 5));
    pd.raw_offsets.assign(n, 0.0);
    const auto p = probabilities(pd);
    const auto ref = oracle::softmax_neg(pd.costs, pd.temperature);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      sum += p[i];
      CHECK(p[i] > 0.0);
      CHECK(p[i] < 1.0);
      CHECK(std::fabs(p[i] - ref[i]) <= 1e-14);
    }
    CHECK(std::fabs(sum - 1.0) <= 1e-12);

    // A constant shift of every cost leaves the distribution alone.
    PixelDistribution shifted = pd;
    for (double& c : shifted.costs) c += 64.0;
    const auto ps = probabilities(shifted);
    for (int i = 0; i < n; ++i) CHECK(std::fabs(ps[i] - p[i]) <= 1e-12);
    const GridSpec g = grid(0, 1, n);
    CHECK(mode_readout(shifted, g) == mode_readout(pd, g));
    CHECK(std::fabs(mean_readout_grid(shifted, g) - mean_readout_grid(pd, g)) <= 1e-10);
  }
}

TEST_CASE("to_mixture shifts and clips") {
  const GridSpec g = grid(0, 1, 4);
  PixelDistribution pd{{1, 1, 1, 1}, {0, 0, 0, 0}, 1.0};
  auto m = to_mixture(pd, g);
  CHECK(m.supports() == std::vector<double>{0, 1, 2, 3});
  for (double w : m.weights()) CHECK(w == 0.25);

  pd.raw_offsets = {0.5, 0.5, 0.5, 0.5};
  CHECK(to_mixture(pd, g).supports() == std::vector<double>{0.5, 1.5, 2.5, 3.5});

  pd.raw_offsets = {7, 0, 0, 0};
  m = to_mixture(pd, g);
  CHECK(m.supports() == std::vector<double>{1, 2, 3});
  CHECK(m.weights()[0] == doctest::Approx(0.5));

  CHECK(clip_offset(-1, 2) == 0.0);
  CHECK(clip_offset(3, 2) == 2.0);
  CHECK(clip_offset(1.25, 2) == 1.25);
  CHECK_FALSE(offset_active(0.0, 2));
  CHECK_FALSE(offset_active(2.0, 2));
  CHECK(offset_active(1e-9, 2));
}

TEST_CASE("mean and mode readouts") {
  const GridSpec g4 = grid(0, 1, 4);
  CHECK(mean_readout_grid(PixelDistribution{{1, 1, 1, 1}, {0, 0, 0, 0}, 1.0}, g4) == 1.5);

  const auto bimodal = from_probs({0.5, 0, 0, 0.5});
  CHECK(mean_readout_grid(bimodal, g4) == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(mode_readout(bimodal, g4) == 0.0);

  PixelDistribution peak{{5, 5, 0, 5}, {0, 0, 0, 0}, 1e-3};
  CHECK(mean_readout_grid(peak, grid(0, 2, 4)) == doctest::Approx(4.0).epsilon(1e-12));

  CHECK(mode_readout(from_probs({0.1, 0.7, 0.2}, {0, 0.8, 0}), grid(0, 2, 3)) == doctest::Approx(2.8).epsilon(1e-15));

  // 40% at 10 and 60% at 20: the mean is 16, a value neither mode supports.
  const auto two = from_probs({0.4, 0.6});
  CHECK(mean_readout_grid(two, grid(10, 10, 2)) == doctest::Approx(16.0).epsilon(1e-12));
  CHECK(mode_readout(two, grid(10, 10, 2)) == 20.0);
}

TEST_CASE("mode lies on the mixture support and the mean matches it without offsets") {
  oracle::Gen gen(17);
  for (int t = 0; t < 200; ++t) {
    const int n = gen.integer(2, 30);
    const GridSpec g = grid(gen.uniform(-5, 5), gen.uniform(0.5, 3), n);
    PixelDistribution pd;
    pd.temperature = std::exp(gen.uniform(-1, 1));
    for (int i = 0; i < n; ++i) {
      pd.costs.push_back(gen.uniform(-3, 3));
      pd.raw_offsets.push_back(gen.uniform(-0.5, 1.5) * g.bin_size);
    }
    const double mode = mode_readout(pd, g);
    CHECK(mode >= g.origin);
    CHECK(mode <= g.upper());
    const auto mix = to_mixture(pd, g);
    bool on_support = false;
    for (double x : mix.supports()) on_support |= std::fabs(x - mode) <= 1e-12;
    CHECK(on_support);

    // A monotone map of the costs keeps the argmin bin.
    PixelDistribution warped = pd;
    for (double& c : warped.costs) c = std::exp(c) * 3.0 + 1.0;
    CHECK(mode_bin(warped.view()) == mode_bin(pd.view()));

    PixelDistribution flat = pd;
    flat.raw_offsets.assign(n, 0.0);
    const auto fm = to_mixture(flat, g);
    double mean = 0.0;
    for (std::size_t i = 0; i < fm.size(); ++i) mean += fm.weights()[i] * fm.supports()[i];
    CHECK(std::fabs(mean - mean_readout_grid(flat, g)) <= 1e-10);
    CHECK(std::fabs(mean_readout_mixture(flat, g) - mean_readout_grid(flat, g)) <= 1e-12);
  }
}

TEST_CASE("disparity and depth conversions") {
  CHECK(disparity_to_depth(2, {100, 1}) == 50.0);
  CHECK(depth_to_disparity(disparity_to_depth(37.5, {700, 0.5}), {700, 0.5}) == doctest::Approx(37.5).epsilon(1e-12));
  CHECK(depth_to_disparity(35, {700, 0.5}) == doctest::Approx(10.0).epsilon(1e-12));
  CHECK_THROWS_AS(disparity_to_depth(0, {1, 1}), Error);
  CHECK_THROWS_AS(depth_to_disparity(-1, {1, 1}), Error);
}
