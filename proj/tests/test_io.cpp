#include <doctest.h>

#include <bit>
#include <cstring>
#include <string>

#include <json.hpp>

#include "cdisp/error.hpp"
#include "cdisp/experiments.hpp"
#include "cdisp/io.hpp"
#include "support/oracles.hpp"

using namespace cdisp;

namespace {

Bytes bytes_of(const std::string& s) { return Bytes(s.begin(), s.end()); }

std::string message_of(auto&& f, ErrorCode expected) {
  try {
    f();
  } catch (const Error& e) {
    CHECK(e.code() == expected);
    return e.what();
  }
  FAIL("no error thrown");
  return {};
}

PfmImage sample_pfm(oracle::Gen& gen, int w, int h) {
  PfmImage img{w, h, -1.0, {}};
  for (int i = 0; i < w * h; ++i) img.samples.push_back(static_cast<float>(gen.uniform(-100, 100)));
  return img;
}

}  // namespace

TEST_CASE("PFM round trip is bitwise") {
  oracle::Gen gen(8);
  for (int t = 0; t < 20; ++t) {
    const auto img = sample_pfm(gen, gen.integer(1, 9), gen.integer(1, 7));
    const Bytes out = write_pfm(img);
    const auto back = read_pfm(out);
    CHECK(back.width == img.width);
    CHECK(back.height == img.height);
    CHECK(std::memcmp(back.samples.data(), img.samples.data(), img.samples.size() * 4) == 0);
    CHECK(write_pfm(back) == out);
  }
}

TEST_CASE("PFM layout") {
  PfmImage img{2, 2, -1.0, {1.0f, 2.0f, 3.0f, 4.0f}};
  const Bytes out = write_pfm(img);
  const std::string header = "Pf\n2 2\n-1.0\n";
  REQUIRE(out.size() == header.size() + 16);
  CHECK(std::string(out.begin(), out.begin() + header.size()) == header);
  // Bottom row first, little-endian.
  float first = 0;
  std::memcpy(&first, out.data() + header.size(), 4);
  if constexpr (std::endian::native == std::endian::little) CHECK(first == 3.0f);

  // Big-endian payload with a positive scale.
  Bytes be = bytes_of("Pf\n2 1\n1.0\n");
  for (float f : {1.5f, -2.25f}) {
    std::uint32_t u = std::bit_cast<std::uint32_t>(f);
    for (int k = 3; k >= 0; --k) be.push_back(static_cast<std::uint8_t>(u >> (8 * k)));
  }
  const auto big = read_pfm(be);
  CHECK(big.samples == std::vector<float>{1.5f, -2.25f});

  Bytes trailing = out;
  trailing.push_back(7);
  CHECK(read_pfm(trailing).samples == img.samples);
}

TEST_CASE("PFM errors") {
  CHECK(message_of([] { read_pfm(bytes_of("PF\n1 1\n-1.0\n0000")); }, ErrorCode::Format).find("PF") != std::string::npos);
  CHECK(message_of([] { read_pfm(bytes_of("P5\n1 1\n255\n0")); }, ErrorCode::Format).size() > 0);
  CHECK(message_of([] { read_pfm(bytes_of("Pf\n0 1\n-1.0\n")); }, ErrorCode::Format).find("width") != std::string::npos);
  CHECK(message_of([] { read_pfm(bytes_of("Pf\n1 x\n-1.0\n")); }, ErrorCode::Format).find("height") != std::string::npos);
  CHECK(message_of([] { read_pfm(bytes_of("Pf\n1 1\n0\n0000")); }, ErrorCode::Format).find("scale") != std::string::npos);
  CHECK(message_of([] { read_pfm(bytes_of("Pf\n2 2\n-1.0\n000000")); }, ErrorCode::Format).size() > 0);
  CHECK(message_of([] { read_pfm(bytes_of("Pf\n2 2")); }, ErrorCode::Format).size() > 0);
  PfmImage bad{1, 1, -1.0, {std::nanf("")}};
  CHECK_THROWS_AS(write_pfm(bad), Error);
}

TEST_CASE("PFM maps keep validity") {
  DisparityMap m(3, 2, 4.5);
  m.valid[1] = 0;
  m.values[1] = 99.0;
  const auto back = pfm_to_map(read_pfm(write_pfm(map_to_pfm(m))));
  CHECK(back.valid == m.valid);
  CHECK(back.values[0] == 4.5);
}

TEST_CASE("PGM round trip and errors") {
  oracle::Gen gen(4);
  GrayImage img(7, 5);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(gen.integer(0, 255));
  const Bytes out = write_pgm(img);
  CHECK(std::string(out.begin(), out.begin() + 11) == "P5\n7 5\n255\n");
  CHECK(read_pgm(out) == img);
  CHECK(write_pgm(read_pgm(out)) == out);

  Bytes commented = bytes_of("P5\n# made by hand\n2 1\n255\n");
  commented.push_back(9);
  commented.push_back(200);
  CHECK(read_pgm(commented).pixels == std::vector<std::uint8_t>{9, 200});

  CHECK_THROWS_AS(read_pgm(bytes_of("P2\n1 1\n255\n0")), Error);
  CHECK_THROWS_AS(read_pgm(bytes_of("P5\n1 1\n65535\n00")), Error);
  for (std::size_t cut = 0; cut < out.size(); ++cut) {
    CHECK_THROWS_AS(read_pgm(std::span(out.data(), cut)), Error);
  }
}

TEST_CASE("scene spec JSON") {
  const auto spec = SceneSpec::default_scene();
  CHECK(load_scene_spec(dump_scene_spec(spec)) == spec);
  CHECK(load_scene_spec(dump_scene_spec(SceneSpec::boundary_heavy_scene())) == SceneSpec::boundary_heavy_scene());

  const std::string json = dump_scene_spec(spec);
  nlohmann::json doc = nlohmann::json::parse(json);
  doc["seed"] = "seven";
  CHECK(message_of([&] { load_scene_spec(doc.dump()); }, ErrorCode::Parse).find("seed") != std::string::npos);
  doc = nlohmann::json::parse(json);
  doc.erase("seed");
  CHECK(message_of([&] { load_scene_spec(doc.dump()); }, ErrorCode::Parse).find("seed") != std::string::npos);
  doc = nlohmann::json::parse(json);
  doc["seed"] = -1;
  CHECK(message_of([&] { load_scene_spec(doc.dump()); }, ErrorCode::Parse).find("seed") != std::string::npos);
  doc = nlohmann::json::parse(json);
  doc["colour"] = 1;
  CHECK(message_of([&] { load_scene_spec(doc.dump()); }, ErrorCode::Parse).find("colour") != std::string::npos);
  doc = nlohmann::json::parse(json);
  doc["objects"][1]["shape"] = "triangle";
  CHECK(message_of([&] { load_scene_spec(doc.dump()); }, ErrorCode::Parse).find("objects[1]") != std::string::npos);
  CHECK_THROWS_AS(load_scene_spec("{not json"), Error);
}

TEST_CASE("report and model JSON round trips") {
  EvalReport r;
  r.overall.epe = 0.1 + 0.2;
  r.overall.pe = {{1.0, 12.5}, {3.0, 1.0 / 3.0}};
  r.total = 10;
  r.valid = 9;
  const auto back = load_report(dump_report(r));
  CHECK(back == r);
  CHECK(nlohmann::json::parse(dump_report(r))["rmse"].is_null());
  CHECK_FALSE(nlohmann::json::parse(dump_report(r)).contains("boundary"));

  r.overall.rmse = 2.5;
  r.overall.absr = 0.01;
  r.boundary = r.overall;
  r.boundary_count = 4;
  CHECK(load_report(dump_report(r)) == r);

  TrainedModel m;
  m.grid = desk_grid(4.0);
  m.cost_shift = 2.0;
  m.loss = "kl-laplace";
  m.head.weights = {0.1, -0.2, 1.0 / 3.0, 0.0, 7.0};
  m.head.bias = 1.25;
  m.head.log_temperature = -2.0 / 3.0;
  CHECK(load_model(dump_model(m)) == m);
  CHECK_THROWS_AS(load_model("{}"), Error);
}

TEST_CASE("file helpers") {
  CHECK_THROWS_AS(read_file("/nonexistent/dir/file.pfm"), Error);
  try {
    read_file("/nonexistent/dir/file.pfm");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Io);
  }
}
