#include "cdisp/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>

#include <json.hpp>

#include "cdisp/error.hpp"

namespace cdisp {
namespace {

using nlohmann::json;

[[noreturn]] void format_error(const std::string& what) { throw Error(ErrorCode::Format, what); }

// Whitespace-separated header tokens shared by PFM and PGM. Tokens must be
// followed by a whitespace byte; running out of input mid-header is an error.
class HeaderCursor {
 public:
  HeaderCursor(std::span<const std::uint8_t> bytes, bool comments) : bytes_(bytes), comments_(comments) {}

  std::string_view token(const char* field) {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (comments_ && bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
    const std::size_t start = pos_;
    while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_])) ++pos_;
    if (pos_ == start || pos_ == bytes_.size()) format_error(std::string("truncated header at ") + field);
    return {reinterpret_cast<const char*>(bytes_.data()) + start, pos_ - start};
  }

  int positive_int(const char* field) {
    const std::string_view t = token(field);
    int value = 0;
    const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc() || end != t.data() + t.size()) format_error(std::string("malformed ") + field);
    if (value <= 0) format_error(std::string("nonpositive ") + field);
    return value;
  }

  // Skips the single whitespace byte that separates header and payload.
  std::span<const std::uint8_t> payload() { return bytes_.subspan(pos_ + 1); }

 private:
  std::span<const std::uint8_t> bytes_;
  bool comments_;
  std::size_t pos_ = 0;
};

void check_magic(std::span<const std::uint8_t> bytes, const char* magic, const char* format) {
  if (bytes.size() < 3 || bytes[0] != magic[0] || !std::isspace(bytes[2])) {
    format_error(std::string("bad magic: not a ") + format + " file");
  }
  if (bytes[1] != magic[1]) {
    if (magic[1] == 'f' && bytes[1] == 'F') format_error("unsupported format: color PFM (PF)");
    format_error(std::string("bad magic: not a ") + format + " file");
  }
}

// ---- strict JSON helpers ----

[[noreturn]] void parse_error(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::Parse, path + ": " + what);
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Parse, std::string("$: invalid JSON: ") + e.what());
  }
}

void require_fields(const json& j, const std::string& path, std::initializer_list<const char*> required,
                    std::initializer_list<const char*> optional = {}) {
  if (!j.is_object()) parse_error(path, "expected an object");
  std::set<std::string> known;
  for (const char* k : required) {
    known.insert(k);
    if (!j.contains(k)) parse_error(path + "." + k, "missing required field");
  }
  for (const char* k : optional) known.insert(k);
  for (const auto& item : j.items()) {
    if (!known.count(item.key())) parse_error(path + "." + item.key(), "unknown field");
  }
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) parse_error(path, "expected a number");
  return j.get<double>();
}

double field_number(const json& j, const std::string& path, const char* key) {
  return number(j.at(key), path + "." + key);
}

std::int64_t field_integer(const json& j, const std::string& path, const char* key) {
  const double d = field_number(j, path, key);
  if (d != std::floor(d) || std::fabs(d) > 9007199254740992.0) {
    parse_error(path + "." + key, "expected an integer");
  }
  return static_cast<std::int64_t>(d);
}

std::string field_string(const json& j, const std::string& path, const char* key) {
  const json& v = j.at(key);
  if (!v.is_string()) parse_error(path + "." + key, "expected a string");
  return v.get<std::string>();
}

bool field_bool(const json& j, const std::string& path, const char* key) {
  const json& v = j.at(key);
  if (!v.is_boolean()) parse_error(path + "." + key, "expected a boolean");
  return v.get<bool>();
}

std::array<double, 2> field_pair(const json& j, const std::string& path, const char* key) {
  const json& v = j.at(key);
  const std::string p = path + "." + key;
  if (!v.is_array() || v.size() != 2) parse_error(p, "expected an array of two numbers");
  return {number(v[0], p + "[0]"), number(v[1], p + "[1]")};
}

std::optional<double> field_optional_number(const json& j, const std::string& path, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return field_number(j, path, key);
}

std::string format_threshold(double k) {
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, k);
  return std::string(buf, end);
}

json metric_set_json(const MetricSet& m) {
  json pe = json::object();
  for (const auto& [k, v] : m.pe) pe[format_threshold(k)] = v;
  return {{"epe", m.epe},
          {"pe", pe},
          {"rmse", m.rmse ? json(*m.rmse) : json(nullptr)},
          {"absr", m.absr ? json(*m.absr) : json(nullptr)}};
}

MetricSet metric_set_from(const json& j, const std::string& path) {
  require_fields(j, path, {"epe", "pe"}, {"rmse", "absr"});
  MetricSet m;
  m.epe = field_number(j, path, "epe");
  const json& pe = j.at("pe");
  if (!pe.is_object()) parse_error(path + ".pe", "expected an object");
  for (const auto& item : pe.items()) {
    double k = 0.0;
    const std::string& key = item.key();
    const auto [end, ec] = std::from_chars(key.data(), key.data() + key.size(), k);
    if (ec != std::errc() || end != key.data() + key.size()) {
      parse_error(path + ".pe." + key, "threshold key is not a number");
    }
    m.pe[k] = number(item.value(), path + ".pe." + key);
  }
  m.rmse = field_optional_number(j, path, "rmse");
  m.absr = field_optional_number(j, path, "absr");
  return m;
}

const char* domain_name(DomainKind kind) {
  return kind == DomainKind::DisparityPixels ? "disparity-pixels" : "depth-meters";
}

}  // namespace

PfmImage read_pfm(std::span<const std::uint8_t> bytes) {
  check_magic(bytes, "Pf", "grayscale PFM");
  HeaderCursor cursor(bytes.subspan(2), false);
  PfmImage image;
  image.width = cursor.positive_int("width");
  image.height = cursor.positive_int("height");
  const std::string_view scale_token = cursor.token("scale");
  const auto [end, ec] =
      std::from_chars(scale_token.data(), scale_token.data() + scale_token.size(), image.scale);
  if (ec != std::errc() || end != scale_token.data() + scale_token.size() || !std::isfinite(image.scale)) {
    format_error("malformed scale");
  }
  if (image.scale == 0.0) format_error("zero scale");

  const std::span<const std::uint8_t> payload = cursor.payload();
  const auto count = static_cast<std::uint64_t>(image.width) * static_cast<std::uint64_t>(image.height);
  if (payload.size() / 4 < count) format_error("truncated payload");

  const bool little = image.scale < 0.0;
  const bool swap = little != (std::endian::native == std::endian::little);
  image.samples.resize(count);
  for (int row = 0; row < image.height; ++row) {
    // File rows run bottom to top.
    const std::size_t dst = static_cast<std::size_t>(image.height - 1 - row) * image.width;
    for (int col = 0; col < image.width; ++col) {
      std::uint8_t raw[4];
      std::memcpy(raw, payload.data() + (static_cast<std::size_t>(row) * image.width + col) * 4, 4);
      if (swap) std::swap(raw[0], raw[3]), std::swap(raw[1], raw[2]);
      image.samples[dst + col] = std::bit_cast<float>(raw);
    }
  }
  return image;
}

Bytes write_pfm(const PfmImage& image) {
  if (image.width <= 0 || image.height <= 0 ||
      image.samples.size() != static_cast<std::size_t>(image.width) * image.height) {
    throw Error(ErrorCode::InvalidInput, "PFM image dimensions do not match its samples");
  }
  const std::string header = "Pf\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n-1.0\n";
  Bytes out(header.begin(), header.end());
  out.reserve(header.size() + image.samples.size() * 4);
  for (int row = image.height - 1; row >= 0; --row) {
    for (int col = 0; col < image.width; ++col) {
      const float s = image.samples[static_cast<std::size_t>(row) * image.width + col];
      if (!std::isfinite(s)) throw Error(ErrorCode::InvalidInput, "PFM samples must be finite");
      auto raw = std::bit_cast<std::array<std::uint8_t, 4>>(s);
      if constexpr (std::endian::native == std::endian::big) std::reverse(raw.begin(), raw.end());
      out.insert(out.end(), raw.begin(), raw.end());
    }
  }
  return out;
}

PfmImage map_to_pfm(const DisparityMap& map) {
  PfmImage image{map.width, map.height, -1.0, std::vector<float>(map.size())};
  for (std::size_t i = 0; i < map.size(); ++i) {
    image.samples[i] = map.valid[i] ? static_cast<float>(map.values[i]) : 0.0f;
  }
  return image;
}

DisparityMap pfm_to_map(const PfmImage& image) {
  DisparityMap map(image.width, image.height, 0.0, true);
  for (std::size_t i = 0; i < map.size(); ++i) {
    map.values[i] = image.samples[i];
    if (!(image.samples[i] > 0.0f)) {
      map.valid[i] = 0;
      map.values[i] = 0.0;
    }
  }
  return map;
}

GrayImage read_pgm(std::span<const std::uint8_t> bytes) {
  check_magic(bytes, "P5", "binary PGM");
  HeaderCursor cursor(bytes.subspan(2), true);
  const int width = cursor.positive_int("width");
  const int height = cursor.positive_int("height");
  const int maxval = cursor.positive_int("maxval");
  if (maxval != 255) format_error("unsupported maxval " + std::to_string(maxval) + " (only 255)");
  const std::span<const std::uint8_t> payload = cursor.payload();
  const auto count = static_cast<std::uint64_t>(width) * static_cast<std::uint64_t>(height);
  if (payload.size() < count) format_error("truncated payload");
  GrayImage image(width, height);
  std::copy_n(payload.begin(), count, image.pixels.begin());
  return image;
}

Bytes write_pgm(const GrayImage& image) {
  if (image.width <= 0 || image.height <= 0 ||
      image.pixels.size() != static_cast<std::size_t>(image.width) * image.height) {
    throw Error(ErrorCode::InvalidInput, "PGM image dimensions do not match its pixels");
  }
  const std::string header = "P5\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  Bytes out(header.begin(), header.end());
  out.insert(out.end(), image.pixels.begin(), image.pixels.end());
  return out;
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "short write to " + path.string());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

SceneSpec load_scene_spec(const std::string& text) {
  const json j = parse_json(text);
  require_fields(j, "$", {"width", "height", "background_disparity", "objects", "texture", "seed"});
  SceneSpec spec;
  spec.width = static_cast<int>(field_integer(j, "$", "width"));
  spec.height = static_cast<int>(field_integer(j, "$", "height"));
  spec.background_disparity = field_number(j, "$", "background_disparity");
  const std::int64_t seed = field_integer(j, "$", "seed");
  if (seed < 0) parse_error("$.seed", "expected a nonnegative integer");
  spec.seed = static_cast<std::uint64_t>(seed);

  const json& objects = j.at("objects");
  if (!objects.is_array()) parse_error("$.objects", "expected an array");
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const std::string path = "$.objects[" + std::to_string(i) + "]";
    const json& o = objects[i];
    require_fields(o, path, {"shape", "position", "size", "disparity"});
    SceneObject obj;
    const std::string shape = field_string(o, path, "shape");
    if (shape == "rectangle") {
      obj.shape = Shape::Rectangle;
    } else if (shape == "ellipse") {
      obj.shape = Shape::Ellipse;
    } else {
      parse_error(path + ".shape", "expected \"rectangle\" or \"ellipse\"");
    }
    const auto position = field_pair(o, path, "position");
    const auto size = field_pair(o, path, "size");
    obj.x = position[0];
    obj.y = position[1];
    obj.w = size[0];
    obj.h = size[1];
    obj.disparity = field_number(o, path, "disparity");
    spec.objects.push_back(obj);
  }

  const json& texture = j.at("texture");
  require_fields(texture, "$.texture", {"noise_amplitude", "smoothing_radius"});
  spec.texture.noise_amplitude = field_number(texture, "$.texture", "noise_amplitude");
  spec.texture.smoothing_radius = field_number(texture, "$.texture", "smoothing_radius");
  return spec;
}

std::string dump_scene_spec(const SceneSpec& spec) {
  json objects = json::array();
  for (const SceneObject& o : spec.objects) {
    objects.push_back({{"shape", o.shape == Shape::Rectangle ? "rectangle" : "ellipse"},
                       {"position", {o.x, o.y}},
                       {"size", {o.w, o.h}},
                       {"disparity", o.disparity}});
  }
  const json j = {{"width", spec.width},
                  {"height", spec.height},
                  {"background_disparity", spec.background_disparity},
                  {"objects", objects},
                  {"texture",
                   {{"noise_amplitude", spec.texture.noise_amplitude},
                    {"smoothing_radius", spec.texture.smoothing_radius}}},
                  {"seed", spec.seed}};
  return j.dump(2) + "\n";
}

std::string dump_report(const EvalReport& report) {
  json j = metric_set_json(report.overall);
  j["counts"] = {{"total", report.total}, {"valid", report.valid}, {"boundary", report.boundary_count}};
  if (report.boundary) j["boundary"] = metric_set_json(*report.boundary);
  return j.dump(2) + "\n";
}

EvalReport load_report(const std::string& text) {
  const json j = parse_json(text);
  require_fields(j, "$", {"epe", "pe", "counts"}, {"rmse", "absr", "boundary"});
  EvalReport report;
  json overall = j;
  overall.erase("counts");
  overall.erase("boundary");
  report.overall = metric_set_from(overall, "$");
  const json& counts = j.at("counts");
  require_fields(counts, "$.counts", {"total", "valid", "boundary"});
  report.total = static_cast<std::size_t>(field_integer(counts, "$.counts", "total"));
  report.valid = static_cast<std::size_t>(field_integer(counts, "$.counts", "valid"));
  report.boundary_count = static_cast<std::size_t>(field_integer(counts, "$.counts", "boundary"));
  if (j.contains("boundary")) report.boundary = metric_set_from(j.at("boundary"), "$.boundary");
  return report;
}

std::string dump_model(const TrainedModel& model) {
  const json j = {
      {"grid",
       {{"origin", model.grid.origin},
        {"bin_size", model.grid.bin_size},
        {"count", model.grid.count},
        {"domain_kind", domain_name(model.grid.kind)}}},
      {"window", model.window},
      {"cost_shift", model.cost_shift},
      {"offsets", model.offsets},
      {"loss", model.loss},
      {"head",
       {{"weights", model.head.weights},
        {"bias", model.head.bias},
        {"log_temperature", model.head.log_temperature}}},
  };
  return j.dump(2) + "\n";
}

TrainedModel load_model(const std::string& text) {
  const json j = parse_json(text);
  require_fields(j, "$", {"grid", "window", "cost_shift", "offsets", "loss", "head"});
  TrainedModel model;
  const json& grid = j.at("grid");
  require_fields(grid, "$.grid", {"origin", "bin_size", "count", "domain_kind"});
  model.grid.origin = field_number(grid, "$.grid", "origin");
  model.grid.bin_size = field_number(grid, "$.grid", "bin_size");
  model.grid.count = static_cast<int>(field_integer(grid, "$.grid", "count"));
  const std::string kind = field_string(grid, "$.grid", "domain_kind");
  if (kind == "disparity-pixels") {
    model.grid.kind = DomainKind::DisparityPixels;
  } else if (kind == "depth-meters") {
    model.grid.kind = DomainKind::DepthMeters;
  } else {
    parse_error("$.grid.domain_kind", "expected \"disparity-pixels\" or \"depth-meters\"");
  }
  model.window = static_cast<int>(field_integer(j, "$", "window"));
  model.cost_shift = field_number(j, "$", "cost_shift");
  model.offsets = field_bool(j, "$", "offsets");
  model.loss = field_string(j, "$", "loss");

  const json& head = j.at("head");
  require_fields(head, "$.head", {"weights", "bias", "log_temperature"});
  const json& weights = head.at("weights");
  if (!weights.is_array() || weights.size() != kHeadFeatures) {
    parse_error("$.head.weights", "expected an array of " + std::to_string(kHeadFeatures) + " numbers");
  }
  for (int k = 0; k < kHeadFeatures; ++k) {
    model.head.weights[k] = number(weights[k], "$.head.weights[" + std::to_string(k) + "]");
  }
  model.head.bias = field_number(head, "$.head", "bias");
  model.head.log_temperature = field_number(head, "$.head", "log_temperature");
  return model;
}

}  // namespace cdisp
