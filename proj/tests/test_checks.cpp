#include <doctest.h>

#include "cdisp/checks.hpp"

using namespace cdisp;

namespace {

CheckOptions quick(std::uint64_t seed) {
  CheckOptions o;
  o.seed = seed;
  o.transport_pairs = 200;
  o.gradient_instances = 40;
  o.kl_instances = 100;
  return o;
}

}  // namespace

TEST_CASE("every suite passes on the real kernels") {
  for (std::uint64_t seed : {1u, 2u, 99u}) {
    const auto results = run_checks(quick(seed));
    CHECK(results.size() >= 12);
    for (const auto& r : results) {
      INFO(r.name << " max_err=" << r.max_error);
      CHECK(r.passed);
      CHECK(r.instances > 0);
    }
  }
}

TEST_CASE("a sign-flipped offset gradient is caught") {
  CheckOptions o = quick(1);
  o.kernel = [](const PixelView& pd, const GridSpec& g, const DiracMixture& t, const LossConfig& c,
                std::span<double> dc, std::span<double> dr, LossWorkspace& ws) {
    const double v = loss_into(pd, g, t, c, dc, dr, ws);
    for (double& x : dr) x = -x;
    return v;
  };
  const auto results = gradient_suites(o);
  REQUIRE_FALSE(results.empty());
  for (const auto& r : results) {
    INFO(r.name);
    // The grid-mean regression never reads the offsets.
    CHECK(r.passed == (r.name.find("grid-mean") != std::string::npos));
  }
}

TEST_CASE("a dropped temperature factor is caught") {
  CheckOptions o = quick(3);
  o.kernel = [](const PixelView& pd, const GridSpec& g, const DiracMixture& t, const LossConfig& c,
                std::span<double> dc, std::span<double> dr, LossWorkspace& ws) {
    const double v = loss_into(pd, g, t, c, dc, dr, ws);
    for (double& x : dc) x *= pd.temperature;
    return v;
  };
  for (const auto& r : gradient_suites(o)) {
    INFO(r.name);
    CHECK_FALSE(r.passed);
  }
}

TEST_CASE("summary format") {
  const std::vector<SuiteResult> rs{{"a/b", 3, 1e-13, 1e-12, true}, {"c", 2, 1.0, 0.5, false}};
  const std::string s = format_checks(rs);
  CHECK(s.find("PASS a/b n=3") == 0);
  CHECK(s.find("FAIL c n=2") != std::string::npos);
}
