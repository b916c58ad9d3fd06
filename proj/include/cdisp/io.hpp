#pragma once

// File formats. PFM and PGM are byte-exact codecs; scene specs, reports and
// fitted models are JSON documents whose keys match the struct field names.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cdisp/groundtruth.hpp"
#include "cdisp/metrics.hpp"
#include "cdisp/stereo.hpp"

namespace cdisp {

using Bytes = std::vector<std::uint8_t>;

/// Single-channel PFM. Samples are row-major with row 0 at the TOP; the codec
/// handles the format's bottom-to-top row order.
struct PfmImage {
  int width = 0;
  int height = 0;
  double scale = -1.0;
  std::vector<float> samples;
};

/// Parses "Pf\n<w> <h>\n<scale>\n" followed by exactly w*h 32-bit floats
/// (little-endian when scale < 0). Throws Format naming the bad field.
PfmImage read_pfm(std::span<const std::uint8_t> bytes);
/// Always writes little-endian with scale -1.0. Throws InvalidInput on
/// non-finite samples.
Bytes write_pfm(const PfmImage& image);

/// Invalid pixels are stored as 0; on read, values <= 0 become invalid.
PfmImage map_to_pfm(const DisparityMap& map);
DisparityMap pfm_to_map(const PfmImage& image);

/// Binary "P5" with maxval 255 only.
GrayImage read_pgm(std::span<const std::uint8_t> bytes);
Bytes write_pgm(const GrayImage& image);

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text(const std::filesystem::path& path, const std::string& text);

/// Throws Parse with a JSON path (e.g. "$.objects[1].disparity") on missing
/// or unknown fields and type mismatches.
SceneSpec load_scene_spec(const std::string& json);
std::string dump_scene_spec(const SceneSpec& spec);

std::string dump_report(const EvalReport& report);
EvalReport load_report(const std::string& json);

std::string dump_model(const TrainedModel& model);
TrainedModel load_model(const std::string& json);

}  // namespace cdisp
