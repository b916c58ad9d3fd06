#include "cdisp/experiments.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "cdisp/error.hpp"

namespace cdisp {

GridSpec desk_grid(double bin_size) {
  if (!(bin_size > 0.0)) throw Error(ErrorCode::Domain, "bin size must be positive");
  const int count = static_cast<int>(std::lround(24.0 / bin_size));
  return GridSpec{0.0, bin_size, count, DomainKind::DisparityPixels};
}

LossConfig parse_loss(const std::string& name) {
  LossConfig config;
  if (name == "w1") {
    config.kind = LossKind::W1;
  } else if (name == "w2sq") {
    config.kind = LossKind::W2Squared;
  } else if (name == "kl-laplace") {
    config.kind = LossKind::KlLaplace;
  } else if (name == "kl-gaussian") {
    config.kind = LossKind::KlGaussian;
  } else if (name == "smooth-l1") {
    config.kind = LossKind::SmoothL1;
  } else {
    throw Error(ErrorCode::InvalidInput, "unknown loss '" + name + "'");
  }
  return config;
}

std::string loss_name(const LossConfig& config) {
  switch (config.kind) {
    case LossKind::W1: return "w1";
    case LossKind::W2Squared: return "w2sq";
    case LossKind::KlLaplace: return "kl-laplace";
    case LossKind::KlGaussian: return "kl-gaussian";
    case LossKind::SmoothL1: return "smooth-l1";
  }
  return "w1";
}

Readout parse_readout(const std::string& name) {
  if (name == "mean-grid") return Readout::MeanGrid;
  if (name == "mean-mixture") return Readout::MeanMixture;
  if (name == "mode-offset") return Readout::ModeOffset;
  throw Error(ErrorCode::InvalidInput, "unknown readout '" + name + "'");
}

std::string readout_name(Readout readout) {
  switch (readout) {
    case Readout::MeanGrid: return "mean-grid";
    case Readout::MeanMixture: return "mean-mixture";
    case Readout::ModeOffset: return "mode-offset";
  }
  return "mode-offset";
}

double cost_shift_for(const GridSpec& grid, bool offsets) { return offsets ? 0.5 * grid.bin_size : 0.0; }

CostVolume model_cost_volume(const StereoPair& pair, const TrainedModel& model) {
  return cost_volume_sad(pair.left, pair.right, model.grid, model.window, model.cost_shift);
}

PipelineRun run_pipeline(const StereoPair& pair, const PipelineConfig& config) {
  PipelineRun run;
  run.model.grid = config.grid;
  run.model.window = config.window;
  run.model.offsets = config.offsets;
  run.model.cost_shift = cost_shift_for(config.grid, config.offsets);
  run.model.loss = loss_name(config.loss);
  const CostVolume cv = model_cost_volume(pair, run.model);

  FitOptions fit_options;
  fit_options.loss = config.loss;
  fit_options.train_offsets = config.offsets;
  fit_options.multimodal = config.multimodal;
  fit_options.mm_k = config.mm_k;
  fit_options.mm_alpha = config.mm_alpha;
  fit_options.steps = config.steps;
  fit_options.step_size = config.step_size;
  fit_options.seed = config.seed;
  run.fit = fit(cv, pair.gt, config.grid, fit_options);
  run.model.head = run.fit.head;

  run.prediction = predict(cv, run.model.head, config.grid, config.readout);
  EvalOptions eval;
  eval.boundary_threshold = config.boundary_threshold.value_or(config.grid.bin_size);
  run.report = evaluate(run.prediction, pair.gt, eval);
  return run;
}

namespace {

AblationRow row_from(const std::string& name, const EvalReport& report) {
  AblationRow row;
  row.config = name;
  row.epe = report.overall.epe;
  row.pe1 = report.overall.pe.at(1.0);
  row.pe3 = report.overall.pe.at(3.0);
  row.boundary_epe = report.boundary ? report.boundary->epe : std::nan("");
  return row;
}

}  // namespace

std::vector<AblationRow> run_ablation(const SceneSpec& scene, const AblationOptions& options) {
  const StereoPair pair = synth_scene(scene);

  struct Entry {
    std::string name;
    PipelineConfig config;
  };
  auto make = [&](double bin_size, const std::string& loss, bool offsets, Readout readout) {
    PipelineConfig c;
    c.grid = desk_grid(bin_size);
    c.loss = parse_loss(loss);
    c.offsets = offsets;
    c.readout = readout;
    c.loss.regress_mixture_mean = offsets && c.loss.kind == LossKind::SmoothL1;
    c.steps = options.steps;
    c.step_size = options.step_size;
    c.seed = options.seed;
    return c;
  };
  std::vector<Entry> entries = {
      {"w1+offsets", make(2.0, "w1", true, Readout::ModeOffset)},
      {"w1", make(2.0, "w1", false, Readout::ModeOffset)},
      {"regression+offsets", make(2.0, "smooth-l1", true, Readout::MeanMixture)},
      {"regression", make(2.0, "smooth-l1", false, Readout::MeanGrid)},
  };
  if (!options.core_only) {
    for (double s : {1.0, 2.0, 4.0}) {
      std::ostringstream name;
      name << "bin-" << s;
      entries.push_back({name.str(), make(s, "w1", true, Readout::ModeOffset)});
    }
    for (const char* loss : {"w1", "w2sq", "kl-laplace"}) {
      entries.push_back({std::string("loss-") + loss, make(2.0, loss, true, Readout::ModeOffset)});
    }
  }

  // Several rows describe the same run (bin-2, loss-w1 and w1+offsets).
  std::map<std::string, EvalReport> cache;
  std::vector<AblationRow> rows;
  for (const Entry& e : entries) {
    const PipelineConfig& c = e.config;
    std::ostringstream key;
    key << c.grid.bin_size << '|' << loss_name(c.loss) << '|' << c.offsets << '|' << readout_name(c.readout);
    auto it = cache.find(key.str());
    if (it == cache.end()) it = cache.emplace(key.str(), run_pipeline(pair, c).report).first;
    rows.push_back(row_from(e.name, it->second));
  }
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::ostringstream out;
  out.precision(10);
  out << "config,epe,1pe,3pe,boundary_epe\n";
  for (const AblationRow& r : rows) {
    out << r.config << ',' << r.epe << ',' << r.pe1 << ',' << r.pe3 << ',' << r.boundary_epe << '\n';
  }
  return out.str();
}

}  // namespace cdisp
