#include <doctest.h>

#include "cdisp/error.hpp"
#include "cdisp/groundtruth.hpp"
#include "support/oracles.hpp"

using namespace cdisp;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode{};
}

}  // namespace

TEST_CASE("unimodal target") {
  DisparityMap m(3, 3, 12.25);
  m.valid[m.index(0, 0)] = 0;
  const auto t = unimodal_target(m, 1, 1);
  CHECK(t.size() == 1);
  CHECK(t.supports()[0] == 12.25);
  CHECK(code_of([&] { unimodal_target(m, 0, 0); }) == ErrorCode::MissingGroundTruth);
  CHECK(code_of([&] { unimodal_target(m, 5, 0); }) == ErrorCode::MissingGroundTruth);
}

TEST_CASE("multimodal target weights") {
  DisparityMap flat(3, 3, 10.0);
  auto t = multimodal_target(flat, 1, 1, 3, 0.8);
  CHECK(t.size() == 1);
  CHECK(t.weights()[0] == 1.0);

  DisparityMap ring(3, 3, 70.0);
  ring.values[ring.index(1, 1)] = 10.0;
  t = multimodal_target(ring, 1, 1, 3, 0.8);
  REQUIRE(t.size() == 2);
  CHECK(t.supports() == std::vector<double>{10, 70});
  CHECK(t.weights()[0] == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(t.weights()[1] == doctest::Approx(0.2).epsilon(1e-12));

  // At a corner only three neighbors exist; the weights renormalize.
  DisparityMap corner(4, 4, 70.0);
  corner.values[corner.index(0, 0)] = 10.0;
  t = multimodal_target(corner, 0, 0, 3, 0.8);
  REQUIRE(t.size() == 2);
  CHECK(t.weights()[0] == doctest::Approx(0.9143).epsilon(1e-4));
  CHECK(t.weights()[1] == doctest::Approx(3 * 0.02857).epsilon(1e-3));

  // Invalid neighbors count like missing ones.
  DisparityMap holes(3, 3, 70.0);
  holes.values[holes.index(1, 1)] = 10.0;
  for (int u = 0; u < 3; ++u) holes.valid[holes.index(u, 0)] = 0;
  t = multimodal_target(holes, 1, 1, 3, 0.8);
  CHECK(t.weights()[0] == doctest::Approx(0.8 / (0.8 + 5 * 0.025)).epsilon(1e-12));
}

TEST_CASE("multimodal target errors") {
  DisparityMap m(3, 3, 1.0);
  CHECK(code_of([&] { multimodal_target(m, 1, 1, 2, 0.8); }) == ErrorCode::Domain);
  CHECK(code_of([&] { multimodal_target(m, 1, 1, 0, 0.8); }) == ErrorCode::Domain);
  CHECK(code_of([&] { multimodal_target(m, 1, 1, 3, 0.0); }) == ErrorCode::Domain);
  CHECK(code_of([&] { multimodal_target(m, 1, 1, 3, 1.5); }) == ErrorCode::Domain);
  m.valid[m.index(1, 1)] = 0;
  CHECK(code_of([&] { multimodal_target(m, 1, 1, 3, 0.8); }) == ErrorCode::MissingGroundTruth);
}

TEST_CASE("multimodal target properties on random maps") {
  oracle::Gen gen(23);
  for (int t = 0; t < 100; ++t) {
    DisparityMap m(7, 6);
    for (std::size_t i = 0; i < m.size(); ++i) {
      m.values[i] = static_cast<double>(gen.integer(0, 4)) * 2.5;
      m.valid[i] = gen.coin(0.85) ? 1 : 0;
    }
    const int u = gen.integer(0, 6);
    const int v = gen.integer(0, 5);
    if (!m.is_valid(u, v)) continue;
    for (int k : {1, 3, 5}) {
      const auto mix = multimodal_target(m, u, v, k, 0.8);
      double sum = 0.0;
      for (double w : mix.weights()) sum += w;
      CHECK(std::fabs(sum - 1.0) <= 1e-9);
      // The center keeps the largest weight of any single pixel.
      double center = 0.0;
      for (std::size_t i = 0; i < mix.size(); ++i) {
        if (mix.supports()[i] == m.at(u, v)) center = mix.weights()[i];
      }
      CHECK(center >= 0.8 - 1e-12);
    }
    CHECK(multimodal_target(m, u, v, 3, 1.0) == unimodal_target(m, u, v));
  }

  DisparityMap flat(9, 9, 4.5);
  for (int k : {1, 3, 5, 7}) {
    for (double a : {0.3, 0.8, 1.0}) CHECK(multimodal_target(flat, 4, 4, k, a).size() == 1);
  }
}
