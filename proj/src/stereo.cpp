#include "cdisp/stereo.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "cdisp/error.hpp"

namespace cdisp {

bool SceneObject::covers(double u, double v) const noexcept {
  const double dx = (u - x) / (0.5 * w);
  const double dy = (v - y) / (0.5 * h);
  if (shape == Shape::Rectangle) return std::fabs(dx) <= 1.0 && std::fabs(dy) <= 1.0;
  return dx * dx + dy * dy <= 1.0;
}

void SceneSpec::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::Spec, what); };
  if (width < 1 || height < 1) fail("scene width and height must be positive");
  auto check_disparity = [&](double d, const std::string& where) {
    if (!std::isfinite(d) || d < 0.0) fail(where + ": disparity must be finite and nonnegative");
    if (d >= width) fail(where + ": disparity leaves no overlap with the right image");
  };
  check_disparity(background_disparity, "background");
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const SceneObject& o = objects[i];
    const std::string where = "objects[" + std::to_string(i) + "]";
    check_disparity(o.disparity, where);
    if (!(o.w > 0.0) || !(o.h > 0.0) || !std::isfinite(o.x) || !std::isfinite(o.y)) {
      fail(where + ": object needs a finite position and positive size");
    }
  }
  if (!(texture.noise_amplitude >= 0.0) || !(texture.smoothing_radius >= 0.0)) {
    fail("texture parameters must be nonnegative");
  }
}

SceneSpec SceneSpec::default_scene() {
  SceneSpec spec;
  spec.objects = {
      {Shape::Rectangle, 40.0, 46.0, 36.0, 48.0, 17.4},
      {Shape::Ellipse, 90.0, 50.0, 40.0, 52.0, 11.7},
  };
  return spec;
}

SceneSpec SceneSpec::boundary_heavy_scene() {
  SceneSpec spec;
  spec.seed = 11;
  spec.objects = {
      {Shape::Rectangle, 22.0, 48.0, 8.0, 80.0, 15.2},
      {Shape::Rectangle, 42.0, 40.0, 6.0, 64.0, 9.6},
      {Shape::Ellipse, 64.0, 28.0, 16.0, 20.0, 12.5},
      {Shape::Ellipse, 66.0, 68.0, 14.0, 22.0, 18.1},
      {Shape::Rectangle, 92.0, 48.0, 8.0, 84.0, 14.3},
      {Shape::Rectangle, 112.0, 52.0, 6.0, 60.0, 8.9},
  };
  return spec;
}

void validate_for_grid(const SceneSpec& spec, const GridSpec& grid) {
  grid.validate();
  auto in_range = [&](double d) { return d >= grid.origin && d < grid.upper(); };
  if (!in_range(spec.background_disparity)) {
    throw Error(ErrorCode::Spec, "background disparity outside the grid range");
  }
  for (std::size_t i = 0; i < spec.objects.size(); ++i) {
    const double d = spec.objects[i].disparity;
    if (!in_range(d)) {
      throw Error(ErrorCode::Spec, "objects[" + std::to_string(i) + "] disparity outside the grid range");
    }
    if (std::fabs(d - spec.background_disparity) < 2.0 * grid.bin_size) {
      throw Error(ErrorCode::Spec, "objects[" + std::to_string(i) +
                                       "] must differ from the background by at least two bins");
    }
  }
}

namespace {

// Zero-mean, unit-variance smoothed noise, rows x cols, row-major.
std::vector<double> make_texture(int rows, int cols, double sigma, std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> tex(static_cast<std::size_t>(rows) * cols);
  for (double& t : tex) t = noise(rng);

  if (sigma > 0.0) {
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(2 * radius + 1);
    double norm = 0.0;
    for (int k = -radius; k <= radius; ++k) {
      kernel[k + radius] = std::exp(-0.5 * k * k / (sigma * sigma));
      norm += kernel[k + radius];
    }
    for (double& k : kernel) k /= norm;
    auto reflect = [](int i, int n) {
      while (i < 0 || i >= n) i = i < 0 ? -i - 1 : 2 * n - i - 1;
      return i;
    };
    std::vector<double> tmp(tex.size());
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k) acc += kernel[k + radius] * tex[r * cols + reflect(c + k, cols)];
        tmp[r * cols + c] = acc;
      }
    }
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k) acc += kernel[k + radius] * tmp[reflect(r + k, rows) * cols + c];
        tex[r * cols + c] = acc;
      }
    }
  }

  double mean = 0.0;
  for (double t : tex) mean += t;
  mean /= static_cast<double>(tex.size());
  double var = 0.0;
  for (double t : tex) var += (t - mean) * (t - mean);
  const double sd = std::sqrt(var / static_cast<double>(tex.size()));
  for (double& t : tex) t = sd > 0.0 ? (t - mean) / sd : 0.0;
  return tex;
}

std::uint8_t quantize(double intensity) {
  return static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(intensity, 0.0, 1.0)));
}

}  // namespace

StereoPair synth_scene(const SceneSpec& spec) {
  spec.validate();
  const int w = spec.width;
  const int h = spec.height;

  // Layer 0 is the background; the rest are drawn back to front by disparity.
  struct Layer {
    const SceneObject* object;
    double disparity;
  };
  std::vector<Layer> layers{{nullptr, spec.background_disparity}};
  for (const SceneObject& o : spec.objects) layers.push_back({&o, o.disparity});
  std::stable_sort(layers.begin() + 1, layers.end(),
                   [](const Layer& a, const Layer& b) { return a.disparity < b.disparity; });

  double max_disparity = 0.0;
  for (const Layer& l : layers) max_disparity = std::max(max_disparity, l.disparity);
  const int cols = w + static_cast<int>(std::ceil(max_disparity)) + 2;

  // Textures are generated in spec order so reordering layers by depth does
  // not change which texture an object receives.
  std::mt19937_64 rng(spec.seed);
  std::vector<std::vector<double>> textures;
  textures.push_back(make_texture(h, cols, spec.texture.smoothing_radius, rng));
  std::vector<std::size_t> texture_of(layers.size(), 0);
  for (std::size_t i = 0; i < spec.objects.size(); ++i) {
    textures.push_back(make_texture(h, cols, spec.texture.smoothing_radius, rng));
  }
  for (std::size_t l = 1; l < layers.size(); ++l) {
    texture_of[l] = static_cast<std::size_t>(layers[l].object - spec.objects.data()) + 1;
  }

  auto covers = [&](std::size_t l, double u, double v) {
    return l == 0 || layers[l].object->covers(u, v);
  };
  auto sample = [&](std::size_t l, double x, int v) {
    const std::vector<double>& tex = textures[texture_of[l]];
    const int x0 = static_cast<int>(std::floor(x));
    const double t = x - x0;
    const double a = tex[static_cast<std::size_t>(v) * cols + x0];
    const double b = t > 0.0 ? tex[static_cast<std::size_t>(v) * cols + x0 + 1] : a;
    return 0.5 + spec.texture.noise_amplitude * ((1.0 - t) * a + t * b);
  };

  StereoPair out{GrayImage(w, h), GrayImage(w, h), DisparityMap(w, h, 0.0, false)};
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      // Left view: the frontmost layer covering (u, v).
      std::size_t top = 0;
      for (std::size_t l = layers.size(); l-- > 1;) {
        if (covers(l, u, v)) {
          top = l;
          break;
        }
      }
      const double d = layers[top].disparity;
      out.left.pixels[out.gt.index(u, v)] = quantize(sample(top, u, v));
      out.gt.values[out.gt.index(u, v)] = d;

      // Visible in the right view iff it lands inside the image and no
      // nearer layer covers its right-image position.
      bool visible = u - d >= 0.0;
      for (std::size_t l = top + 1; visible && l < layers.size(); ++l) {
        if (covers(l, u - d + layers[l].disparity, v)) visible = false;
      }
      out.gt.valid[out.gt.index(u, v)] = visible ? 1 : 0;

      // Right view: layer l covers right pixel (u, v) iff it covers
      // (u + d_l, v) in left coordinates.
      std::size_t rtop = 0;
      for (std::size_t l = layers.size(); l-- > 1;) {
        if (covers(l, u + layers[l].disparity, v)) {
          rtop = l;
          break;
        }
      }
      out.right.pixels[out.gt.index(u, v)] = quantize(sample(rtop, u + layers[rtop].disparity, v));
    }
  }
  return out;
}

CostVolume cost_volume_sad(const GrayImage& left, const GrayImage& right, const GridSpec& grid,
                           int window, double sample_shift) {
  grid.validate();
  if (window < 1 || window % 2 == 0) throw Error(ErrorCode::Domain, "SAD window must be odd and >= 1");
  if (left.width != right.width || left.height != right.height) {
    throw Error(ErrorCode::InvalidInput, "left and right images differ in size");
  }
  if (left.width < window || left.height < window) {
    throw Error(ErrorCode::Domain, "image is smaller than the SAD window");
  }
  const int w = left.width;
  const int h = left.height;
  const int r = window / 2;
  CostVolume cv{w, h, grid.count, std::vector<double>(static_cast<std::size_t>(w) * h * grid.count)};

  std::vector<double> lf(left.pixels.size());
  std::vector<double> rf(right.pixels.size());
  for (std::size_t i = 0; i < lf.size(); ++i) {
    lf[i] = left.pixels[i] / 255.0;
    rf[i] = right.pixels[i] / 255.0;
  }

  // Per bin: |L(x, y) - R(x - d, y)| on the whole image, -1 where x - d
  // leaves the right image; then windowed aggregation.
  std::vector<double> diff(lf.size());
  for (int b = 0; b < grid.count; ++b) {
    const double d = grid.value(b) + sample_shift;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        const double xr = x - d;
        if (xr < 0.0 || xr > w - 1) {
          diff[i] = -1.0;
          continue;
        }
        const int x0 = static_cast<int>(std::floor(xr));
        const double t = xr - x0;
        const double a = rf[static_cast<std::size_t>(y) * w + x0];
        const double rv = t > 0.0 ? (1.0 - t) * a + t * rf[static_cast<std::size_t>(y) * w + x0 + 1] : a;
        diff[i] = std::fabs(lf[i] - rv);
      }
    }
    for (int v = 0; v < h; ++v) {
      for (int u = 0; u < w; ++u) {
        double sum = 0.0;
        double worst = -1.0;
        int inside = 0;
        int outside = 0;
        for (int y = std::max(0, v - r); y <= std::min(h - 1, v + r); ++y) {
          for (int x = std::max(0, u - r); x <= std::min(w - 1, u + r); ++x) {
            const double e = diff[static_cast<std::size_t>(y) * w + x];
            if (e < 0.0) {
              ++outside;
            } else {
              sum += e;
              worst = std::max(worst, e);
              ++inside;
            }
          }
        }
        cv.costs[(static_cast<std::size_t>(v) * w + u) * grid.count + b] =
            inside == 0 ? -1.0 : (sum + outside * worst) / (inside + outside);
      }
    }
  }
  // Bins whose window lies entirely outside the right image take the worst
  // cost of the same pixel.
  for (std::size_t p = 0; p < static_cast<std::size_t>(w) * h; ++p) {
    double* c = cv.costs.data() + p * grid.count;
    double worst = 0.0;
    for (int b = 0; b < grid.count; ++b) worst = std::max(worst, c[b]);
    for (int b = 0; b < grid.count; ++b) {
      if (c[b] < 0.0) c[b] = worst;
    }
  }
  return cv;
}

double OffsetHead::temperature() const noexcept { return std::exp(log_temperature); }

OffsetHead OffsetHead::initial(const GridSpec& grid) {
  OffsetHead head;
  head.bias = 0.5 * grid.bin_size;
  return head;
}

OffsetHead OffsetHead::no_offsets() { return OffsetHead{}; }

void normalized_costs_into(std::span<const double> costs, std::span<double> out) {
  const double lo = *std::min_element(costs.begin(), costs.end());
  double mean = 0.0;
  for (double c : costs) mean += c;
  mean /= static_cast<double>(costs.size());
  const double scale = 1.0 / (mean - lo + 1e-6);
  for (std::size_t i = 0; i < costs.size(); ++i) out[i] = (costs[i] - lo) * scale;
}

namespace {

// Feature k of bin i is normalized[clamp(i + k - 2)].
inline double feature(std::span<const double> normalized, int bin, int k) {
  const int n = static_cast<int>(normalized.size());
  return normalized[std::clamp(bin + k - kHeadFeatures / 2, 0, n - 1)];
}

}  // namespace

void head_offsets_into(const OffsetHead& head, std::span<const double> normalized,
                       std::span<double> raw_offsets) {
  const int n = static_cast<int>(normalized.size());
  for (int i = 0; i < n; ++i) {
    double raw = head.bias;
    for (int k = 0; k < kHeadFeatures; ++k) raw += head.weights[k] * feature(normalized, i, k);
    raw_offsets[i] = raw;
  }
}

FitResult fit(const CostVolume& cv, const DisparityMap& gt, const GridSpec& grid,
              const FitOptions& options) {
  grid.validate();
  if (cv.width != gt.width || cv.height != gt.height || cv.bins != grid.count) {
    throw Error(ErrorCode::InvalidInput, "cost volume, ground truth and grid shapes disagree");
  }
  if (options.steps < 0 || !(options.step_size > 0.0)) {
    throw Error(ErrorCode::InvalidInput, "trainer needs steps >= 0 and a positive step size");
  }

  std::vector<std::size_t> pixels;
  std::vector<DiracMixture> targets;
  std::vector<DiracMixture> point_targets;
  for (int v = 0; v < gt.height; ++v) {
    for (int u = 0; u < gt.width; ++u) {
      if (!gt.is_valid(u, v)) continue;
      pixels.push_back(gt.index(u, v));
      targets.push_back(options.multimodal ? multimodal_target(gt, u, v, options.mm_k, options.mm_alpha)
                                           : unimodal_target(gt, u, v));
      if (options.track_unimodal_w1) point_targets.push_back(unimodal_target(gt, u, v));
    }
  }
  if (pixels.empty()) throw Error(ErrorCode::EmptySet, "no valid ground-truth pixels to fit");
  if (options.loss.kind != LossKind::W1) {
    for (const DiracMixture& t : targets) {
      if (t.size() != 1) throw Error(ErrorCode::InvalidInput, "multi-modal targets need the W1 loss");
    }
  }

  const auto bins = static_cast<std::size_t>(grid.count);
  std::vector<double> features(pixels.size() * bins);
  for (std::size_t p = 0; p < pixels.size(); ++p) {
    normalized_costs_into(cv.pixel(pixels[p]), std::span(features).subspan(p * bins, bins));
  }

  FitResult result;
  result.head = options.train_offsets ? OffsetHead::initial(grid) : OffsetHead::no_offsets();
  result.trace.reserve(static_cast<std::size_t>(options.steps));

  LossWorkspace ws;
  std::vector<double> raw(bins);
  std::vector<double> d_costs(bins);
  std::vector<double> d_raw(bins);
  std::vector<double> track_costs(bins);
  std::vector<double> track_raw(bins);
  std::vector<std::size_t> batch(pixels.size());
  for (std::size_t p = 0; p < pixels.size(); ++p) batch[p] = p;
  std::mt19937_64 rng(options.seed);
  const LossConfig w1_config{};

  for (int step = 0; step < options.steps; ++step) {
    if (options.batch_pixels > 0 && static_cast<std::size_t>(options.batch_pixels) < pixels.size()) {
      std::uniform_int_distribution<std::size_t> pick(0, pixels.size() - 1);
      batch.resize(static_cast<std::size_t>(options.batch_pixels));
      for (std::size_t& b : batch) b = pick(rng);
    }

    OffsetHead& head = result.head;
    const double tau = head.temperature();
    std::array<double, kHeadFeatures> g_weights{};
    double g_bias = 0.0;
    double g_log_tau = 0.0;
    double loss = 0.0;
    double unimodal = 0.0;

    for (std::size_t p : batch) {
      const auto costs = cv.pixel(pixels[p]);
      const std::span<const double> norm(features.data() + p * bins, bins);
      head_offsets_into(head, norm, raw);
      const PixelView view{costs, raw, tau};
      loss += loss_into(view, grid, targets[p], options.loss, d_costs, d_raw, ws);
      if (options.track_unimodal_w1 && options.multimodal) {
        unimodal += loss_into(view, grid, point_targets[p], w1_config, track_costs, track_raw, ws);
      }
      for (std::size_t e = 0; e < bins; ++e) g_log_tau -= d_costs[e] * costs[e];
      if (options.train_offsets) {
        for (int i = 0; i < grid.count; ++i) {
          if (d_raw[i] == 0.0) continue;
          g_bias += d_raw[i];
          for (int k = 0; k < kHeadFeatures; ++k) g_weights[k] += d_raw[i] * feature(norm, i, k);
        }
      }
    }

    const double inv = 1.0 / static_cast<double>(batch.size());
    result.trace.push_back(loss * inv);
    if (options.track_unimodal_w1) {
      result.unimodal_w1_trace.push_back(options.multimodal ? unimodal * inv : loss * inv);
    }
    head.log_temperature -= options.step_size * g_log_tau * inv;
    if (options.train_offsets) {
      head.bias -= options.step_size * g_bias * inv;
      for (int k = 0; k < kHeadFeatures; ++k) head.weights[k] -= options.step_size * g_weights[k] * inv;
    }
  }
  return result;
}

DisparityMap predict(const CostVolume& cv, const OffsetHead& head, const GridSpec& grid,
                     Readout readout) {
  grid.validate();
  if (cv.bins != grid.count) throw Error(ErrorCode::InvalidInput, "cost volume bins disagree with the grid");
  DisparityMap out(cv.width, cv.height, 0.0, true);
  const auto bins = static_cast<std::size_t>(grid.count);
  std::vector<double> norm(bins);
  std::vector<double> raw(bins);
  std::vector<double> probs(bins);
  const double tau = head.temperature();
  for (std::size_t p = 0; p < out.size(); ++p) {
    const auto costs = cv.pixel(p);
    normalized_costs_into(costs, norm);
    head_offsets_into(head, norm, raw);
    const PixelView view{costs, raw, tau};
    double value = 0.0;
    if (readout == Readout::ModeOffset) {
      const int best = mode_bin(view);
      value = grid.value(best) + clip_offset(raw[best], grid.bin_size);
    } else {
      probabilities_into(view, probs);
      for (int i = 0; i < grid.count; ++i) {
        const double at = readout == Readout::MeanGrid ? grid.value(i)
                                                       : grid.value(i) + clip_offset(raw[i], grid.bin_size);
        value += probs[i] * at;
      }
    }
    out.values[p] = value;
  }
  return out;
}

}  // namespace cdisp
