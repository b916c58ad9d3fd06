#include "cdisp/cdisp.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <filesystem>
#include <new>
#include <optional>
#include <string>

#include "cdisp/checks.hpp"
#include "cdisp/error.hpp"
#include "cdisp/experiments.hpp"
#include "cdisp/io.hpp"

struct cdisp_mixture {
  cdisp::DiracMixture mix;
};

struct cdisp_map {
  cdisp::DisparityMap map;
};

struct cdisp_scene {
  cdisp::GrayImage left;
  cdisp::GrayImage right;
  cdisp_map gt;
};

struct cdisp_model {
  cdisp::TrainedModel model;
  std::vector<double> trace;
};

namespace {

thread_local std::string last_error;

cdisp_status fail(cdisp_status status, const std::string& message) {
  last_error = message;
  return status;
}

// Runs `body` and converts exceptions into status codes.
template <class F>
cdisp_status guard(F&& body) {
  try {
    body();
    return CDISP_OK;
  } catch (const cdisp::Error& e) {
    return fail(static_cast<cdisp_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(CDISP_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(CDISP_ERR_INTERNAL, e.what());
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw cdisp::Error(cdisp::ErrorCode::InvalidInput, what);
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

cdisp::StereoPair as_pair(const cdisp_scene* scene) { return {scene->left, scene->right, scene->gt.map}; }

cdisp::SceneSpec scene_from(const char* json) {
  return json ? cdisp::load_scene_spec(json) : cdisp::SceneSpec::default_scene();
}

}  // namespace

extern "C" {

CDISP_API const char* cdisp_last_error(void) { return last_error.c_str(); }

CDISP_API const char* cdisp_status_name(cdisp_status status) {
  if (status == CDISP_OK) return "ok";
  if (status == CDISP_ERR_INTERNAL) return "internal error";
  if (status < CDISP_OK || status > CDISP_ERR_INTERNAL) return "unknown status";
  return cdisp::to_string(static_cast<cdisp::ErrorCode>(status));
}

CDISP_API void cdisp_string_free(char* s) { std::free(s); }

CDISP_API cdisp_status cdisp_mixture_create(const double* locations, const double* weights, size_t n,
                                            cdisp_mixture** out) {
  return guard([&] {
    require(out != nullptr && (n == 0 || (locations && weights)), "null argument");
    *out = nullptr;
    auto m = cdisp::DiracMixture::make({locations, n}, {weights, n});
    *out = new cdisp_mixture{std::move(m)};
  });
}

CDISP_API void cdisp_mixture_free(cdisp_mixture* m) { delete m; }

CDISP_API size_t cdisp_mixture_size(const cdisp_mixture* m) { return m ? m->mix.size() : 0; }

CDISP_API cdisp_status cdisp_mixture_atoms(const cdisp_mixture* m, double* locations, double* weights) {
  return guard([&] {
    require(m != nullptr, "null mixture");
    const auto& x = m->mix.supports();
    const auto& w = m->mix.weights();
    if (locations) std::copy(x.begin(), x.end(), locations);
    if (weights) std::copy(w.begin(), w.end(), weights);
  });
}

CDISP_API cdisp_status cdisp_wp_general(const cdisp_mixture* a, const cdisp_mixture* b, double p, double* out) {
  return guard([&] {
    require(a && b && out, "null argument");
    *out = cdisp::wp_general(a->mix, b->mix, p);
  });
}

CDISP_API cdisp_status cdisp_w1_cdf_area(const cdisp_mixture* a, const cdisp_mixture* b, double* out) {
  return guard([&] {
    require(a && b && out, "null argument");
    *out = cdisp::w1_cdf_area(a->mix, b->mix);
  });
}

CDISP_API cdisp_status cdisp_wp_to_dirac(const cdisp_mixture* a, double target, double p, double* out) {
  return guard([&] {
    require(a && out, "null argument");
    *out = cdisp::wp_to_dirac(a->mix, target, p);
  });
}

CDISP_API cdisp_status cdisp_scene_synth(const char* scene_json, cdisp_scene** out) {
  return guard([&] {
    require(out != nullptr, "null argument");
    *out = nullptr;
    cdisp::StereoPair pair = cdisp::synth_scene(scene_from(scene_json));
    *out = new cdisp_scene{std::move(pair.left), std::move(pair.right), {std::move(pair.gt)}};
  });
}

CDISP_API cdisp_status cdisp_scene_preset(const char* name, char** scene_json) {
  return guard([&] {
    require(name && scene_json, "null argument");
    const std::string n = name;
    cdisp::SceneSpec spec;
    if (n == "default") {
      spec = cdisp::SceneSpec::default_scene();
    } else if (n == "boundary-heavy") {
      spec = cdisp::SceneSpec::boundary_heavy_scene();
    } else {
      throw cdisp::Error(cdisp::ErrorCode::InvalidInput, "unknown scene preset '" + n + "'");
    }
    *scene_json = copy_string(cdisp::dump_scene_spec(spec));
  });
}

CDISP_API cdisp_status cdisp_scene_load(const char* dir, cdisp_scene** out) {
  return guard([&] {
    require(dir && out, "null argument");
    *out = nullptr;
    const std::filesystem::path d(dir);
    auto left = cdisp::read_pgm(cdisp::read_file(d / "left.pgm"));
    auto right = cdisp::read_pgm(cdisp::read_file(d / "right.pgm"));
    auto gt = cdisp::pfm_to_map(cdisp::read_pfm(cdisp::read_file(d / "gt.pfm")));
    if (left.width != right.width || left.height != right.height || gt.width != left.width ||
        gt.height != left.height) {
      throw cdisp::Error(cdisp::ErrorCode::InvalidInput, "left, right and gt sizes differ");
    }
    *out = new cdisp_scene{std::move(left), std::move(right), {std::move(gt)}};
  });
}

CDISP_API cdisp_status cdisp_scene_save(const cdisp_scene* scene, const char* dir) {
  return guard([&] {
    require(scene && dir, "null argument");
    const std::filesystem::path d(dir);
    cdisp::write_file(d / "left.pgm", cdisp::write_pgm(scene->left));
    cdisp::write_file(d / "right.pgm", cdisp::write_pgm(scene->right));
    cdisp::write_file(d / "gt.pfm", cdisp::write_pfm(cdisp::map_to_pfm(scene->gt.map)));
  });
}

CDISP_API void cdisp_scene_free(cdisp_scene* scene) { delete scene; }

CDISP_API const cdisp_map* cdisp_scene_gt(const cdisp_scene* scene) { return scene ? &scene->gt : nullptr; }

CDISP_API cdisp_status cdisp_map_load_pfm(const char* path, cdisp_map** out) {
  return guard([&] {
    require(path && out, "null argument");
    *out = nullptr;
    auto map = cdisp::pfm_to_map(cdisp::read_pfm(cdisp::read_file(path)));
    *out = new cdisp_map{std::move(map)};
  });
}

CDISP_API cdisp_status cdisp_map_save_pfm(const cdisp_map* map, const char* path) {
  return guard([&] {
    require(map && path, "null argument");
    cdisp::write_file(path, cdisp::write_pfm(cdisp::map_to_pfm(map->map)));
  });
}

CDISP_API void cdisp_map_free(cdisp_map* map) { delete map; }

CDISP_API int cdisp_map_width(const cdisp_map* map) { return map ? map->map.width : 0; }

CDISP_API int cdisp_map_height(const cdisp_map* map) { return map ? map->map.height : 0; }

CDISP_API cdisp_status cdisp_map_values(const cdisp_map* map, double* values, uint8_t* valid) {
  return guard([&] {
    require(map != nullptr, "null map");
    const auto& m = map->map;
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (values) values[i] = (valid || m.valid[i]) ? m.values[i] : 0.0;
      if (valid) valid[i] = m.valid[i];
    }
  });
}

CDISP_API void cdisp_fit_config_default(cdisp_fit_config* config) {
  if (!config) return;
  const cdisp::PipelineConfig defaults;
  config->grid_origin = defaults.grid.origin;
  config->bin_size = defaults.grid.bin_size;
  config->bins = defaults.grid.count;
  config->window = defaults.window;
  config->loss = "w1";
  config->offsets = 1;
  config->multimodal = 0;
  config->mm_k = defaults.mm_k;
  config->mm_alpha = defaults.mm_alpha;
  config->steps = defaults.steps;
  config->step_size = defaults.step_size;
  config->seed = defaults.seed;
}

CDISP_API cdisp_status cdisp_fit(const cdisp_scene* scene, const cdisp_fit_config* config, cdisp_model** out) {
  return guard([&] {
    require(scene && config && out && config->loss, "null argument");
    *out = nullptr;
    cdisp::TrainedModel model;
    model.grid = cdisp::GridSpec{config->grid_origin, config->bin_size, config->bins,
                                 cdisp::DomainKind::DisparityPixels};
    model.grid.validate();
    model.window = config->window;
    model.offsets = config->offsets != 0;
    model.cost_shift = cdisp::cost_shift_for(model.grid, model.offsets);
    cdisp::FitOptions options;
    options.loss = cdisp::parse_loss(config->loss);
    options.loss.regress_mixture_mean = model.offsets && options.loss.kind == cdisp::LossKind::SmoothL1;
    model.loss = cdisp::loss_name(options.loss);
    options.train_offsets = model.offsets;
    options.multimodal = config->multimodal != 0;
    options.mm_k = config->mm_k;
    options.mm_alpha = config->mm_alpha;
    options.steps = config->steps;
    options.step_size = config->step_size;
    options.seed = config->seed;

    const cdisp::StereoPair pair = as_pair(scene);
    const cdisp::CostVolume cv = cdisp::model_cost_volume(pair, model);
    cdisp::FitResult result = cdisp::fit(cv, pair.gt, model.grid, options);
    model.head = result.head;
    *out = new cdisp_model{std::move(model), std::move(result.trace)};
  });
}

CDISP_API void cdisp_model_free(cdisp_model* model) { delete model; }

CDISP_API size_t cdisp_model_trace_length(const cdisp_model* model) { return model ? model->trace.size() : 0; }

CDISP_API cdisp_status cdisp_model_trace(const cdisp_model* model, double* trace) {
  return guard([&] {
    require(model && trace, "null argument");
    std::copy(model->trace.begin(), model->trace.end(), trace);
  });
}

CDISP_API cdisp_status cdisp_model_to_json(const cdisp_model* model, char** json) {
  return guard([&] {
    require(model && json, "null argument");
    *json = copy_string(cdisp::dump_model(model->model));
  });
}

CDISP_API cdisp_status cdisp_model_from_json(const char* json, cdisp_model** out) {
  return guard([&] {
    require(json && out, "null argument");
    *out = nullptr;
    cdisp::TrainedModel model = cdisp::load_model(json);
    model.grid.validate();
    *out = new cdisp_model{std::move(model), {}};
  });
}

CDISP_API cdisp_status cdisp_predict(const cdisp_scene* scene, const cdisp_model* model, const char* readout,
                                     cdisp_map** out) {
  return guard([&] {
    require(scene && model && readout && out, "null argument");
    *out = nullptr;
    const cdisp::Readout r = cdisp::parse_readout(readout);
    const cdisp::CostVolume cv = cdisp::model_cost_volume(as_pair(scene), model->model);
    auto map = cdisp::predict(cv, model->model.head, model->model.grid, r);
    *out = new cdisp_map{std::move(map)};
  });
}

CDISP_API cdisp_status cdisp_evaluate(const cdisp_map* pred, const cdisp_map* gt, const cdisp_eval_config* config,
                                      char** report_json) {
  return guard([&] {
    require(pred && gt && report_json, "null argument");
    if (pred->map.width != gt->map.width || pred->map.height != gt->map.height) {
      throw cdisp::Error(cdisp::ErrorCode::InvalidInput,
                         "prediction is " + std::to_string(pred->map.width) + "x" +
                             std::to_string(pred->map.height) + " but ground truth is " +
                             std::to_string(gt->map.width) + "x" + std::to_string(gt->map.height));
    }
    cdisp::EvalOptions options;
    if (config && config->has_boundary_threshold) options.boundary_threshold = config->boundary_threshold;
    if (config && config->has_rig) options.rig = cdisp::CameraRig{config->focal_length, config->baseline};
    *report_json = copy_string(cdisp::dump_report(cdisp::evaluate(pred->map, gt->map, options)));
  });
}

CDISP_API cdisp_status cdisp_run_checks(uint64_t seed, char** summary, int* all_passed) {
  return guard([&] {
    require(summary && all_passed, "null argument");
    cdisp::CheckOptions options;
    options.seed = seed;
    const auto results = cdisp::run_checks(options);
    *all_passed = 1;
    for (const auto& r : results) {
      if (!r.passed) *all_passed = 0;
    }
    *summary = copy_string(cdisp::format_checks(results));
  });
}

CDISP_API cdisp_status cdisp_ablate(const char* scene_json, int steps, double step_size, uint64_t seed,
                                    char** csv) {
  return guard([&] {
    require(csv != nullptr, "null argument");
    cdisp::AblationOptions options;
    options.steps = steps;
    options.step_size = step_size;
    options.seed = seed;
    *csv = copy_string(cdisp::ablation_csv(cdisp::run_ablation(scene_from(scene_json), options)));
  });
}

}  // extern "C"
