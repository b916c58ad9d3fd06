// cdisp command-line front end. Talks to the library only through cdisp.h.
//
//   cdisp synth   [--scene spec.json | --preset NAME] --out DIR
//   cdisp fit     --data DIR --out model.json [--trace trace.csv] [training flags]
//   cdisp predict --data DIR --model model.json [--readout R] --out pred.pfm
//   cdisp eval    --pred pred.pfm --gt gt.pfm [--boundary-threshold T] [--out report.json]
//   cdisp check   [--seed N]
//   cdisp ablate  [--scene spec.json] [--steps N] [--lr X] [--seed N] [--out table.csv]
//
// Exit codes: 0 success, 1 check failure, 2 usage or input error.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cdisp/cdisp.h"

namespace {

constexpr int kExitCheckFailed = 1;
constexpr int kExitInput = 2;

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check(cdisp_status status, const char* what) {
  if (status != CDISP_OK) {
    throw Failure(std::string(what) + ": " + cdisp_status_name(status) + ": " + cdisp_last_error());
  }
}

// Owns a string handed out by the library.
struct CString {
  char* p = nullptr;
  ~CString() { cdisp_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

template <class T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  ~Handle() { Free(p); }
};
using Scene = Handle<cdisp_scene, cdisp_scene_free>;
using Map = Handle<cdisp_map, cdisp_map_free>;
using Model = Handle<cdisp_model, cdisp_model_free>;

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw Failure("cannot write " + path);
}

struct Options {
  std::string scene;
  std::string preset;
  std::string data;
  std::string model;
  std::string pred;
  std::string gt;
  std::string out;
  std::string trace;
  double grid_origin = 0.0;
  double bin_size = 2.0;
  std::optional<int> bins;
  std::string loss = "w1";
  std::string readout = "mode-offset";
  bool no_offsets = false;
  bool mm = false;
  int mm_k = 3;
  double mm_alpha = 0.8;
  int steps = 2000;
  double lr = 0.02;
  std::uint64_t seed = 0;
  std::optional<double> boundary_threshold;
  std::optional<double> focal;
  std::optional<double> baseline;
};

void add_grid_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--grid-origin", o.grid_origin, "Disparity of bin 0")->capture_default_str();
  cmd->add_option("--bin-size", o.bin_size, "Bin size s in pixels")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--bins", o.bins, "Bin count (default: 24 pixels of range)")->check(CLI::PositiveNumber);
}

void add_training_flags(CLI::App* cmd, Options& o) {
  add_grid_flags(cmd, o);
  cmd->add_option("--loss", o.loss, "w1, w2sq, kl-laplace, kl-gaussian or smooth-l1")
      ->capture_default_str()
      ->check(CLI::IsMember({"w1", "w2sq", "kl-laplace", "kl-gaussian", "smooth-l1"}));
  cmd->add_flag("--no-offsets", o.no_offsets, "Freeze offsets at zero");
  cmd->add_flag("--mm", o.mm, "Train on k x k multi-modal targets");
  cmd->add_option("--mm-k", o.mm_k, "Patch size for --mm")->capture_default_str();
  cmd->add_option("--mm-alpha", o.mm_alpha, "Center weight for --mm")->capture_default_str();
  cmd->add_option("--steps", o.steps, "Gradient steps")->capture_default_str()->check(CLI::NonNegativeNumber);
  cmd->add_option("--lr", o.lr, "Step size")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--seed", o.seed, "Trainer seed")->capture_default_str();
}

int cmd_synth(const Options& o) {
  std::string spec;
  if (!o.scene.empty()) {
    spec = slurp(o.scene);
  } else {
    CString preset;
    check(cdisp_scene_preset(o.preset.c_str(), &preset.p), "preset");
    spec = preset.str();
  }
  Scene scene;
  check(cdisp_scene_synth(spec.c_str(), &scene.p), "synth");
  std::error_code ec;
  std::filesystem::create_directories(o.out, ec);
  check(cdisp_scene_save(scene.p, o.out.c_str()), "write");
  return 0;
}

int cmd_fit(const Options& o) {
  if (o.mm && o.loss != "w1") throw Failure("--mm needs a distributional target loss; use --loss w1");
  cdisp_fit_config config;
  cdisp_fit_config_default(&config);
  config.grid_origin = o.grid_origin;
  config.bin_size = o.bin_size;
  config.bins = o.bins.value_or(static_cast<int>(std::lround(24.0 / o.bin_size)));
  config.loss = o.loss.c_str();
  config.offsets = o.no_offsets ? 0 : 1;
  config.multimodal = o.mm ? 1 : 0;
  config.mm_k = o.mm_k;
  config.mm_alpha = o.mm_alpha;
  config.steps = o.steps;
  config.step_size = o.lr;
  config.seed = o.seed;

  Scene scene;
  check(cdisp_scene_load(o.data.c_str(), &scene.p), "load");
  Model model;
  check(cdisp_fit(scene.p, &config, &model.p), "fit");

  CString json;
  check(cdisp_model_to_json(model.p, &json.p), "model");
  emit(o.out, json.str());

  std::vector<double> trace(cdisp_model_trace_length(model.p));
  if (!trace.empty()) check(cdisp_model_trace(model.p, trace.data()), "trace");
  std::ostringstream csv;
  csv.precision(17);
  csv << "step,loss\n";
  for (std::size_t i = 0; i < trace.size(); ++i) csv << i << ',' << trace[i] << '\n';
  std::string trace_path = o.trace;
  if (trace_path.empty()) {
    trace_path = (std::filesystem::path(o.out).parent_path() / "trace.csv").string();
  }
  emit(trace_path, csv.str());
  return 0;
}

int cmd_predict(const Options& o) {
  Scene scene;
  check(cdisp_scene_load(o.data.c_str(), &scene.p), "load");
  const std::string json = slurp(o.model);
  Model model;
  check(cdisp_model_from_json(json.c_str(), &model.p), "model");
  Map pred;
  check(cdisp_predict(scene.p, model.p, o.readout.c_str(), &pred.p), "predict");
  check(cdisp_map_save_pfm(pred.p, o.out.c_str()), "write");
  return 0;
}

int cmd_eval(const Options& o) {
  Map pred;
  Map gt;
  check(cdisp_map_load_pfm(o.pred.c_str(), &pred.p), "prediction");
  check(cdisp_map_load_pfm(o.gt.c_str(), &gt.p), "ground truth");
  cdisp_eval_config config{};
  if (o.boundary_threshold) {
    config.has_boundary_threshold = 1;
    config.boundary_threshold = *o.boundary_threshold;
  }
  if (o.focal || o.baseline) {
    if (!o.focal || !o.baseline) throw Failure("--focal and --baseline go together");
    config.has_rig = 1;
    config.focal_length = *o.focal;
    config.baseline = *o.baseline;
  }
  CString report;
  check(cdisp_evaluate(pred.p, gt.p, &config, &report.p), "eval");
  emit(o.out, report.str());
  return 0;
}

int cmd_check(const Options& o) {
  CString summary;
  int passed = 0;
  check(cdisp_run_checks(o.seed, &summary.p, &passed), "check");
  std::cout << summary.str() << (passed ? "all suites passed\n" : "some suites FAILED\n");
  return passed ? 0 : kExitCheckFailed;
}

int cmd_ablate(const Options& o) {
  std::string spec;
  if (!o.scene.empty()) spec = slurp(o.scene);
  CString csv;
  check(cdisp_ablate(o.scene.empty() ? nullptr : spec.c_str(), o.steps, o.lr, o.seed, &csv.p), "ablate");
  emit(o.out, csv.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continuous disparity toolkit: Wasserstein losses, offset heads and desk stereo experiments"};
  app.require_subcommand(1);
  Options o;
  o.preset = "default";

  auto* synth = app.add_subcommand("synth", "Render left.pgm, right.pgm and gt.pfm from a scene spec");
  auto* scene_group = synth->add_option_group("scene");
  scene_group->add_option("--scene", o.scene, "Scene spec JSON")->check(CLI::ExistingFile);
  scene_group->add_option("--preset", o.preset, "default or boundary-heavy")
      ->check(CLI::IsMember({"default", "boundary-heavy"}));
  scene_group->require_option(0, 1);
  synth->add_option("--out", o.out, "Output directory")->required();

  auto* fit = app.add_subcommand("fit", "Fit the offset head and temperature; writes model JSON and a loss trace");
  fit->add_option("--data", o.data, "Directory with left.pgm, right.pgm, gt.pfm")->required()->check(CLI::ExistingDirectory);
  fit->add_option("--out", o.out, "Model JSON path")->required();
  fit->add_option("--trace", o.trace, "Trace CSV path (default: trace.csv beside the model)");
  add_training_flags(fit, o);

  auto* predict = app.add_subcommand("predict", "Apply a fitted model and write the disparity map as PFM");
  predict->add_option("--data", o.data, "Directory with left.pgm and right.pgm")->required()->check(CLI::ExistingDirectory);
  predict->add_option("--model", o.model, "Model JSON")->required()->check(CLI::ExistingFile);
  predict->add_option("--readout", o.readout, "mean-grid, mean-mixture or mode-offset")
      ->capture_default_str()
      ->check(CLI::IsMember({"mean-grid", "mean-mixture", "mode-offset"}));
  predict->add_option("--out", o.out, "Output PFM")->required();

  auto* eval = app.add_subcommand("eval", "Score a prediction against ground truth; writes report JSON");
  eval->add_option("--pred", o.pred, "Predicted PFM")->required()->check(CLI::ExistingFile);
  eval->add_option("--gt", o.gt, "Ground-truth PFM")->required()->check(CLI::ExistingFile);
  eval->add_option("--boundary-threshold", o.boundary_threshold, "Also report metrics on the boundary mask")
      ->check(CLI::PositiveNumber);
  eval->add_option("--focal", o.focal, "Focal length in pixels (enables depth metrics)")->check(CLI::PositiveNumber);
  eval->add_option("--baseline", o.baseline, "Baseline in meters")->check(CLI::PositiveNumber);
  eval->add_option("--out", o.out, "Report path (default: stdout)");

  auto* chk = app.add_subcommand("check", "Run the oracle, gradient and KL self-checks");
  chk->add_option("--seed", o.seed, "Seed for the random instances")->capture_default_str();

  auto* ablate = app.add_subcommand("ablate", "Offsets x loss, bin-size and loss ablations as CSV");
  ablate->add_option("--scene", o.scene, "Scene spec JSON (default scene if omitted)")->check(CLI::ExistingFile);
  ablate->add_option("--steps", o.steps, "Gradient steps per fit")->capture_default_str();
  ablate->add_option("--lr", o.lr, "Step size")->capture_default_str();
  ablate->add_option("--seed", o.seed, "Trainer seed")->capture_default_str();
  ablate->add_option("--out", o.out, "CSV path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  try {
    if (*synth) return cmd_synth(o);
    if (*fit) return cmd_fit(o);
    if (*predict) return cmd_predict(o);
    if (*eval) return cmd_eval(o);
    if (*chk) return cmd_check(o);
    if (*ablate) return cmd_ablate(o);
  } catch (const Failure& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitInput;
}
