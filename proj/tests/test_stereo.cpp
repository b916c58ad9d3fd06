#include <doctest.h>

#include <cmath>
#include <set>

#include "cdisp/error.hpp"
#include "cdisp/experiments.hpp"
#include "cdisp/stereo.hpp"

using namespace cdisp;

namespace {

SceneSpec small_scene() {
  SceneSpec spec;
  spec.width = 56;
  spec.height = 40;
  spec.background_disparity = 2.0;
  spec.objects = {{Shape::Rectangle, 30.0, 20.0, 20.0, 18.0, 10.5}};
  spec.seed = 3;
  return spec;
}

CostVolume uniform_volume(int w, int h, int bins, double value) {
  CostVolume cv{w, h, bins, {}};
  cv.costs.assign(static_cast<std::size_t>(w) * h * bins, value);
  return cv;
}

}  // namespace

TEST_CASE("scene specs validate") {
  SceneSpec spec = small_scene();
  CHECK_NOTHROW(spec.validate());
  CHECK_NOTHROW(validate_for_grid(spec, desk_grid()));
  spec.width = 0;
  CHECK_THROWS_AS(spec.validate(), Error);
  spec = small_scene();
  spec.objects[0].disparity = -1;
  CHECK_THROWS_AS(spec.validate(), Error);
  spec = small_scene();
  spec.objects[0].disparity = 30;
  CHECK_THROWS_AS(validate_for_grid(spec, desk_grid()), Error);
  spec = small_scene();
  spec.objects[0].disparity = 4.5;  // closer than two bins to the background
  CHECK_THROWS_AS(validate_for_grid(spec, desk_grid()), Error);
  CHECK_NOTHROW(validate_for_grid(SceneSpec::default_scene(), desk_grid()));
  CHECK_NOTHROW(validate_for_grid(SceneSpec::boundary_heavy_scene(), desk_grid()));
}

TEST_CASE("synthesis") {
  SceneSpec flat;
  flat.width = 32;
  flat.height = 24;
  flat.background_disparity = 0.0;
  const auto zero = synth_scene(flat);
  CHECK(zero.left == zero.right);
  for (std::size_t i = 0; i < zero.gt.size(); ++i) {
    CHECK(zero.gt.values[i] == 0.0);
    CHECK(zero.gt.valid[i] == 1);
  }

  const auto pair = synth_scene(small_scene());
  std::set<double> seen;
  for (std::size_t i = 0; i < pair.gt.size(); ++i) {
    if (pair.gt.valid[i]) seen.insert(pair.gt.values[i]);
  }
  CHECK(seen == std::set<double>{2.0, 10.5});
  // Right-occluded pixels exist next to the object's left edge.
  std::size_t invalid = 0;
  for (auto v : pair.gt.valid) invalid += v == 0;
  CHECK(invalid > 0);

  const auto again = synth_scene(small_scene());
  CHECK(again.left == pair.left);
  CHECK(again.right == pair.right);
  CHECK(again.gt.values == pair.gt.values);
  CHECK(again.gt.valid == pair.gt.valid);

  SceneSpec other = small_scene();
  other.seed = 4;
  CHECK_FALSE(synth_scene(other).left == pair.left);
}

TEST_CASE("SAD cost volume") {
  SceneSpec flat;
  flat.width = 32;
  flat.height = 24;
  flat.background_disparity = 0.0;
  const auto pair = synth_scene(flat);
  const GridSpec g = desk_grid();
  const auto cv = cost_volume_sad(pair.left, pair.left, g, 5);
  CHECK(cv.bins == 12);
  for (int v = 2; v < 22; ++v) {
    for (int u = 2; u < 30; ++u) CHECK(cv.pixel(u, v)[0] == 0.0);
  }

  GrayImage gray(20, 10);
  for (auto& p : gray.pixels) p = 128;
  const auto flat_cv = cost_volume_sad(gray, gray, g, 5);
  for (double c : flat_cv.costs) CHECK(c == flat_cv.costs[0]);

  GrayImage tiny(3, 3);
  CHECK_THROWS_AS(cost_volume_sad(tiny, tiny, g, 5), Error);
  CHECK_THROWS_AS(cost_volume_sad(gray, gray, g, 4), Error);

  SceneSpec four = small_scene();
  four.background_disparity = 12.0;
  four.objects[0].disparity = 4.0;
  const auto p4 = synth_scene(four);
  const auto cv4 = cost_volume_sad(p4.left, p4.right, g, 5);
  int checked = 0;
  for (int v = 0; v < four.height; ++v) {
    for (int u = 0; u < four.width; ++u) {
      bool interior = true;
      for (int dv = -3; dv <= 3 && interior; ++dv) {
        for (int du = -7; du <= 3 && interior; ++du) {
          interior = p4.gt.is_valid(u + du, v + dv) && p4.gt.at(u + du, v + dv) == 4.0;
        }
      }
      if (!interior) continue;
      ++checked;
      const auto costs = cv4.pixel(u, v);
      CHECK(std::min_element(costs.begin(), costs.end()) - costs.begin() == 2);
    }
  }
  CHECK(checked > 100);
}

TEST_CASE("head initialization and zero-step fit") {
  const GridSpec g = desk_grid();
  const auto init = OffsetHead::initial(g);
  CHECK(init.bias == 1.0);
  CHECK(init.log_temperature == 0.0);
  for (double w : init.weights) CHECK(w == 0.0);
  CHECK(init.temperature() == 1.0);

  const auto pair = synth_scene(small_scene());
  const auto cv = cost_volume_sad(pair.left, pair.right, g, 5, 1.0);
  FitOptions opt;
  opt.steps = 0;
  const auto r = fit(cv, pair.gt, g, opt);
  CHECK(r.head == init);
  CHECK(r.trace.empty());

  DisparityMap none(pair.gt.width, pair.gt.height, 0.0, false);
  opt.steps = 3;
  CHECK_THROWS_AS(fit(cv, none, g, opt), Error);
}

TEST_CASE("fitting reduces the loss and is deterministic") {
  const GridSpec g = desk_grid();
  const auto pair = synth_scene(small_scene());
  const auto cv = cost_volume_sad(pair.left, pair.right, g, 5, 1.0);
  FitOptions opt;
  opt.steps = 150;
  const auto a = fit(cv, pair.gt, g, opt);
  REQUIRE(a.trace.size() == 150);
  for (double x : a.trace) CHECK(std::isfinite(x));
  CHECK(a.trace.back() < a.trace.front());
  const auto b = fit(cv, pair.gt, g, opt);
  CHECK(a.head == b.head);
  CHECK(a.trace == b.trace);

  opt.multimodal = true;
  opt.track_unimodal_w1 = true;
  const auto mm = fit(cv, pair.gt, g, opt);
  CHECK(mm.trace.back() < mm.trace.front());
  CHECK(mm.unimodal_w1_trace.size() == 150);

  opt = FitOptions{};
  opt.steps = 60;
  opt.batch_pixels = 200;
  opt.seed = 5;
  const auto c = fit(cv, pair.gt, g, opt);
  CHECK(c.head == fit(cv, pair.gt, g, opt).head);

  for (Readout ro : {Readout::MeanGrid, Readout::MeanMixture, Readout::ModeOffset}) {
    const auto pred = predict(cv, a.head, g, ro);
    CHECK(pred.values == predict(cv, a.head, g, ro).values);
    for (std::size_t i = 0; i < pred.size(); ++i) {
      CHECK(pred.valid[i] == 1);
      CHECK(pred.values[i] >= g.origin);
      CHECK(pred.values[i] <= g.upper());
    }
  }
}

TEST_CASE("prediction on constructed cost volumes") {
  const GridSpec g = desk_grid();
  const auto uniform = predict(uniform_volume(4, 3, g.count, 0.5), OffsetHead::initial(g), g, Readout::MeanGrid);
  for (double x : uniform.values) CHECK(x == doctest::Approx(11.0).epsilon(1e-12));

  CostVolume delta = uniform_volume(4, 3, g.count, 5.0);
  for (int p = 0; p < 12; ++p) delta.costs[static_cast<std::size_t>(p) * g.count + p % g.count] = 0.0;
  const auto mode = predict(delta, OffsetHead::no_offsets(), g, Readout::ModeOffset);
  for (int p = 0; p < 12; ++p) CHECK(mode.values[p] == g.value(p % g.count));

  // Bimodal boundary pixel: half the evidence at 2.0, half at 10.5.
  CostVolume bi = uniform_volume(1, 1, g.count, 30.0);
  bi.costs[1] = 0.0;
  bi.costs[5] = 0.0;
  OffsetHead head = OffsetHead::no_offsets();
  const double mean = predict(bi, head, g, Readout::MeanGrid).values[0];
  CHECK(mean > 2.0 + 2 * g.bin_size);
  CHECK(mean < 10.5 - 2 * g.bin_size);
  head.bias = 0.5;
  const double m = predict(bi, head, g, Readout::ModeOffset).values[0];
  CHECK(std::min(std::fabs(m - 2.0), std::fabs(m - 10.5)) <= g.bin_size);
}

TEST_CASE("pipeline helpers") {
  CHECK(desk_grid().count == 12);
  CHECK(desk_grid(1.0).count == 24);
  CHECK(desk_grid(4.0).count == 6);
  CHECK(cost_shift_for(desk_grid(), true) == 1.0);
  CHECK(cost_shift_for(desk_grid(), false) == 0.0);
  for (const char* name : {"w1", "w2sq", "kl-laplace", "kl-gaussian", "smooth-l1"}) {
    CHECK(loss_name(parse_loss(name)) == name);
  }
  for (const char* name : {"mean-grid", "mean-mixture", "mode-offset"}) {
    CHECK(readout_name(parse_readout(name)) == name);
  }
  CHECK_THROWS_AS(parse_loss("l2"), Error);
  CHECK_THROWS_AS(parse_readout("median"), Error);

  PipelineConfig cfg;
  cfg.steps = 40;
  const auto pair = synth_scene(small_scene());
  const auto run = run_pipeline(pair, cfg);
  CHECK(run.fit.trace.size() == 40);
  CHECK(run.report.boundary);
  CHECK(run.model.cost_shift == 1.0);
  const auto again = run_pipeline(pair, cfg);
  CHECK(again.prediction.values == run.prediction.values);
  CHECK(again.report == run.report);
}
