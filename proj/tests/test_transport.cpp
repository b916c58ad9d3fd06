#include <doctest.h>

#include <chrono>
#include <cmath>
#include <limits>

#include "cdisp/error.hpp"
#include "cdisp/transport.hpp"
#include "support/oracles.hpp"

using namespace cdisp;

namespace {

DiracMixture mix(std::vector<double> x, std::vector<double> w) { return DiracMixture::make(x, w); }
DiracMixture from(const oracle::Atoms& a) { return DiracMixture::make(a.x, a.w); }

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode{};
}

}  // namespace

TEST_CASE("make_mixture canonicalizes") {
  const auto m = mix({3, 1, 3}, {0.25, 0.5, 0.25});
  CHECK(m.supports() == std::vector<double>{1, 3});
  CHECK(m.weights() == std::vector<double>{0.5, 0.5});

  const auto single = mix({5}, {2.0});
  CHECK(single.supports() == std::vector<double>{5});
  CHECK(single.weights()[0] == 1.0);

  const auto dropped = mix({0, 1}, {0, 1});
  CHECK(dropped.supports() == std::vector<double>{1});
  CHECK(dropped.weights()[0] == 1.0);

  // Within the merge tolerance locations fuse.
  const auto fused = mix({2.0, 2.0 + 5e-13}, {1, 1});
  CHECK(fused.size() == 1);
}

TEST_CASE("make_mixture rejects bad input") {
  CHECK(code_of([] { mix({}, {}); }) == ErrorCode::InvalidDistribution);
  CHECK(code_of([] { mix({1, 2}, {0, 0}); }) == ErrorCode::InvalidDistribution);
  CHECK(code_of([] { mix({1, 2}, {-1, 2}); }) == ErrorCode::InvalidDistribution);
  CHECK(code_of([] { mix({1, 2}, {1}); }) == ErrorCode::InvalidDistribution);
  CHECK(code_of([] { mix({std::nan("")}, {1}); }) == ErrorCode::InvalidDistribution);
  CHECK(code_of([] { mix({1}, {std::numeric_limits<double>::infinity()}); }) == ErrorCode::InvalidDistribution);
}

TEST_CASE("cdf is right-continuous") {
  const auto d2 = DiracMixture::dirac(2.0);
  CHECK(cdf(d2)(1.9) == 0.0);
  CHECK(cdf(d2)(2.0) == 1.0);
  CHECK(cdf(mix({1, 4}, {0.3, 0.7}))(1.0) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(cdf(mix({0, 2}, {0.5, 0.5}))(1.0) == 0.5);
  CHECK(cdf(mix({0, 2}, {0.5, 0.5}))(-1.0) == 0.0);
  CHECK(cdf(mix({0, 2}, {0.5, 0.5}))(5.0) == 1.0);
}

TEST_CASE("quantile uses the smallest x with cdf >= q") {
  const auto m = mix({1, 4}, {0.3, 0.7});
  CHECK(quantile(m, 0.3) == 1.0);
  CHECK(quantile(m, 0.31) == 4.0);
  CHECK(quantile(m, 0.0) == 1.0);
  CHECK(quantile(m, 1.0) == 4.0);
  for (double q : {0.0, 0.2, 0.9, 1.0}) CHECK(quantile(DiracMixture::dirac(7.5), q) == 7.5);
  CHECK(code_of([&] { quantile(m, -0.01); }) == ErrorCode::Domain);
  CHECK(code_of([&] { quantile(m, 1.01); }) == ErrorCode::Domain);
}

TEST_CASE("wp_to_dirac closed form") {
  // Two-atom hand case: all 0.4 of mass at 10 travels 10 pixels.
  CHECK(wp_to_dirac(mix({10, 20}, {0.4, 0.6}), 20, 1) == 4.0);
  CHECK(oracle::w1_midpoint({{10, 20}, {0.4, 0.6}}, {{20}, {1}}) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(wp_to_dirac(DiracMixture::dirac(7.5), 7.5, 1) == 0.0);
  CHECK(wp_to_dirac(mix({0, 2}, {0.5, 0.5}), 1, 2) == 1.0);
  CHECK(code_of([] { wp_to_dirac(DiracMixture::dirac(0), 1, 0.5); }) == ErrorCode::Domain);
}

TEST_CASE("wp_general and w1_cdf_area examples") {
  const auto d0 = DiracMixture::dirac(0);
  const auto d3 = DiracMixture::dirac(3);
  for (double p : {1.0, 1.5, 2.0, 3.0}) {
    CHECK(wp_general(d0, d3, p) == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(oracle_wp_naive(d0, d3, p) == doctest::Approx(3.0).epsilon(1e-14));
  }
  CHECK(w1_cdf_area(d0, d3) == 3.0);
  CHECK(wp_general(mix({0, 1}, {0.5, 0.5}), DiracMixture::dirac(0.5), 1) == 0.5);
  CHECK(oracle_wp_naive(mix({0, 1}, {0.5, 0.5}), DiracMixture::dirac(0.5), 1) == 0.5);
  CHECK(w1_cdf_area(mix({0, 2}, {0.5, 0.5}), DiracMixture::dirac(1)) == 1.0);
  CHECK(oracle::w1_midpoint({{0, 2}, {0.5, 0.5}}, {{1}, {1}}) == 1.0);
  const auto a = mix({1, 4, 6}, {0.2, 0.5, 0.3});
  CHECK(wp_general(a, a, 1) == 0.0);
  CHECK(wp_general(a, a, 2) == 0.0);
  CHECK(oracle_wp_naive(DiracMixture::dirac(5), DiracMixture::dirac(5), 2) == 0.0);
  CHECK(code_of([&] { wp_general(a, a, 0.9); }) == ErrorCode::Domain);
  CHECK(code_of([&] { oracle_wp_naive(a, a, 0.9); }) == ErrorCode::Domain);
}

TEST_CASE("W1 routes agree with the midpoint oracle") {
  oracle::Gen gen(101);
  for (int t = 0; t < 300; ++t) {
    const auto a = gen.atoms(64);
    const auto b = gen.atoms(64);
    const double ref = oracle::w1_midpoint(a, b);
    CHECK(std::fabs(w1_cdf_area(from(a), from(b)) - ref) <= 1e-12);
    CHECK(std::fabs(wp_general(from(a), from(b), 1) - ref) <= 1e-12);
  }
}

TEST_CASE("metric properties on random mixtures") {
  oracle::Gen gen(202);
  for (int t = 0; t < 300; ++t) {
    const auto a = from(gen.atoms(32));
    const auto b = from(gen.atoms(32));
    const auto c = from(gen.atoms(32));
    for (double p : {1.0, 2.0}) {
      CHECK(wp_general(a, a, p) == 0.0);
      CHECK(std::fabs(wp_general(a, b, p) - wp_general(b, a, p)) <= 1e-12);
      CHECK(std::fabs(oracle_wp_naive(a, b, p) - oracle_wp_naive(b, a, p)) <= 1e-12);
      CHECK(wp_general(a, c, p) <= wp_general(a, b, p) + wp_general(b, c, p) + 1e-9);
    }
  }
}

TEST_CASE("point-mass equivalence, translation and scaling") {
  oracle::Gen gen(303);
  for (int t = 0; t < 300; ++t) {
    const auto atoms = gen.atoms(32);
    const auto a = from(atoms);
    const auto b = from(gen.atoms(32));
    const double target = gen.uniform(-10, 10);
    const double c = gen.uniform(-5, 5);
    const double lambda = gen.uniform(0.1, 4.0);
    for (double p : {1.0, 2.0}) {
      CHECK(std::fabs(wp_to_dirac(a, target, p) - wp_general(a, DiracMixture::dirac(target), p)) <= 1e-12);
      CHECK(std::fabs(wp_to_dirac(a.shifted(c), target + c, p) - wp_to_dirac(a, target, p)) <= 1e-12);
      CHECK(std::fabs(wp_to_dirac(a, target, p) - oracle::wp_point(atoms, target, p)) <= 1e-12);
    }
    CHECK(std::fabs(wp_general(a.scaled(lambda), b.scaled(lambda), 1) - lambda * wp_general(a, b, 1)) <= 1e-12);
  }
}

TEST_CASE("w1_cdf_area stays near n log n") {
  oracle::Gen gen(404);
  auto make = [&](int n) {
    std::vector<double> x(n), w(n);
    for (int i = 0; i < n; ++i) {
      x[i] = gen.uniform(-100, 100);
      w[i] = gen.uniform(0.1, 1);
    }
    return DiracMixture::make(x, w);
  };
  auto best = [&](const DiracMixture& a, const DiracMixture& b) {
    double t = 1e9;
    for (int r = 0; r < 7; ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      volatile double v = w1_cdf_area(a, b);
      (void)v;
      t = std::min(t, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    return t;
  };
  const auto a1 = make(1 << 14), b1 = make(1 << 14);
  const auto a2 = make(1 << 15), b2 = make(1 << 15);
  const double ratio = best(a2, b2) / best(a1, b1);
  MESSAGE("doubling ratio " << ratio);
  CHECK(ratio <= 2.5);
}
