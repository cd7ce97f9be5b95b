#include "fcopf/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <ostream>

#include <json.hpp>

#include "fcopf/report.hpp"

namespace fcopf {

using nlohmann::json;

double percent_error(double predicted, double simulated) {
  if (simulated == 0.0) throw Error(ErrorKind::numerical, "percent_error", "simulated value is zero");
  return std::fabs((predicted - simulated) / simulated) * 100.0;
}

Validation validate_dispatch(const GridCase& grid, const DispatchResult& dispatch, UnitId contingency,
                             const SimConfig& sim) {
  const auto credible = credible_contingencies(grid);
  if (std::find(credible.begin(), credible.end(), contingency) == credible.end())
    throw Error(ErrorKind::invariant, "validate", unit_name(grid, contingency) + " is not a credible contingency");
  Validation v;
  v.contingency = contingency;
  const OperatingPoint op = dispatch.operating_point();
  v.trace = simulate_trip(grid, op, contingency, sim);
  v.simulated = measure(v.trace, sim);

  if (dispatch.kind == ModelKind::dnnfcopf) {
    auto it = std::find_if(dispatch.predicted.begin(), dispatch.predicted.end(),
                           [&](const PredictedMetrics& p) { return p.contingency == contingency; });
    if (it == dispatch.predicted.end())
      throw Error(ErrorKind::invariant, "validate",
                  "DNN-FCOPF dispatch carries no prediction for " + unit_name(grid, contingency));
    v.predicted_nadir = it->nadir;
    v.predicted_rocof = it->rocof;
  } else if (dispatch.kind == ModelKind::lfcopf) {
    v.predicted_rocof = analytic_initial_rocof(grid, op, contingency);
  }
  if (v.predicted_nadir) v.nadir_error = percent_error(*v.predicted_nadir, v.simulated.nadir);
  if (v.predicted_rocof) v.rocof_error = percent_error(*v.predicted_rocof, v.simulated.rocof);
  return v;
}

bool ModelReport::passes() const {
  return std::all_of(checks.begin(), checks.end(), [](const ContingencyCheck& c) { return c.nadir_ok && c.rocof_ok; });
}

const ContingencyCheck& ModelReport::check(const std::string& contingency) const {
  for (const auto& c : checks)
    if (c.contingency == contingency) return c;
  throw Error(ErrorKind::invariant, "report", "contingency " + contingency + " was not evaluated");
}

const ModelReport& ComparisonReport::model(ModelKind kind) const {
  for (const auto& m : models)
    if (m.kind == kind) return m;
  throw Error(ErrorKind::invariant, "report", std::string("no ") + to_string(kind) + " entry");
}

PlotSeries plot_series(ModelKind kind, const std::string& contingency, const FrequencyTrace& trace,
                       const SimConfig& sim) {
  PlotSeries s;
  s.kind = kind;
  s.contingency = contingency;
  std::vector<double> f;
  if (sim.rule == MeasurementRule::coi) {
    f = trace.coi();
  } else {
    s.bus = trace.disturbance_bus;
    f = trace.bus_freq[trace.bus_column(s.bus)];
  }
  const auto w = static_cast<std::size_t>(std::llround(sim.rocof_window / trace.dt));
  if (w == 0 || w >= f.size()) throw Error(ErrorKind::invariant, "plot_series", "RoCoF window exceeds the trace");
  const std::size_t n = f.size() - w;
  s.time.assign(trace.times.begin(), trace.times.begin() + static_cast<std::ptrdiff_t>(n));
  s.frequency.assign(f.begin(), f.begin() + static_cast<std::ptrdiff_t>(n));
  s.rocof.resize(n);
  for (std::size_t i = 0; i < n; ++i) s.rocof[i] = (f[i + w] - f[i]) / (w * trace.dt);
  return s;
}

namespace {

constexpr ModelKind kKinds[3] = {ModelKind::topf, ModelKind::lfcopf, ModelKind::dnnfcopf};

bool same_dispatch(const DispatchResult& a, const DispatchResult& b) {
  for (std::size_t g = 0; g < a.group_output.size(); ++g)
    if (std::fabs(a.group_output[g] - b.group_output[g]) > 1e-9) return false;
  return true;
}

// Runs body(i) for i in [0, n) across threads and rethrows the first failure
// in index order, so errors do not depend on scheduling.
template <class F>
void parallel_stages(int n, F&& body) {
  std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (int i = 0; i < n; ++i) {
    try {
      body(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

Comparison compare_models(const GridCase& grid, const MlpModel& model, const PipelineConfig& cfg,
                          const ScenarioOverride& scenario) {
  const std::string stage = "compare/" + scenario.name;
  if (model.case_fingerprint != grid.fingerprint)
    throw Error(ErrorKind::mismatch, stage, "model was trained on a different case (" + model.case_fingerprint + ")");
  const auto loads = scenario.loads(grid);
  const FcopfConfig fc = cfg.fcopf_config(grid);

  Comparison out;
  auto& r = out.report;
  r.scenario = scenario.name;
  r.case_fingerprint = grid.fingerprint;
  r.load_mw = loads;
  r.rocof_threshold = fc.rocof_threshold;
  r.nadir_threshold = fc.nadir_threshold;
  r.models.resize(3);

  parallel_stages(3, [&](int i) {
    const ModelKind kind = kKinds[i];
    try {
      OpfProblem p = kind == ModelKind::topf     ? build_topf(grid, loads, fc.segments)
                     : kind == ModelKind::lfcopf ? build_lfcopf(grid, loads, fc)
                                                 : build_dnn_fcopf(grid, loads, model, fc);
      r.models[i].kind = kind;
      r.models[i].dispatch = solve_dispatch(grid, p, kind == ModelKind::dnnfcopf ? &model : nullptr, cfg.milp);
    } catch (const Error& e) {
      throw Error(e.kind(), stage + "/" + to_string(kind), e.what());
    }
  });

  const auto credible = credible_contingencies(grid);
  const auto& base = r.models[0].dispatch;
  UnitId critical = credible.front();
  for (const auto& c : credible)
    if (base.group_output[c.group] > base.group_output[critical.group]) critical = c;
  r.critical_contingency = unit_name(grid, critical);

  std::vector<UnitId> evaluated;
  if (!scenario.contingency.empty()) evaluated.push_back(parse_unit(grid, scenario.contingency));
  if (evaluated.empty() || evaluated.front() != critical) evaluated.push_back(critical);
  for (const auto& c : evaluated) r.evaluated.push_back(unit_name(grid, c));

  const int k = static_cast<int>(evaluated.size());
  for (auto& m : r.models) m.checks.resize(evaluated.size());
  out.plots.resize(3);
  parallel_stages(3 * k, [&](int idx) {
    const int i = idx / k, c = idx % k;
    auto& m = r.models[i];
    Validation v;
    try {
      v = validate_dispatch(grid, m.dispatch, evaluated[c], cfg.sim);
    } catch (const Error& e) {
      throw Error(e.kind(), stage + "/" + to_string(m.kind) + "/" + r.evaluated[c], e.what());
    }
    auto& chk = m.checks[c];
    chk.contingency = r.evaluated[c];
    chk.specified = !scenario.contingency.empty() && c == 0;
    chk.critical = evaluated[c] == critical;
    chk.simulated = v.simulated;
    chk.predicted_nadir = v.predicted_nadir;
    chk.predicted_rocof = v.predicted_rocof;
    chk.nadir_error = v.nadir_error;
    chk.rocof_error = v.rocof_error;
    chk.nadir_ok = v.simulated.nadir >= fc.nadir_threshold;
    chk.rocof_ok = v.simulated.rocof >= fc.rocof_threshold;
    if (c == 0) out.plots[i] = plot_series(m.kind, chk.contingency, v.trace, cfg.sim);
  });

  for (std::size_t i = 1; i < 3; ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (same_dispatch(r.models[i].dispatch, r.models[j].dispatch)) {
        r.models[i].same_dispatch_as = to_string(r.models[j].kind);
        break;
      }

  const auto& dnn = r.models[2].dispatch;
  std::vector<bool> ood(model.feature_names.size(), false);
  for (const auto& p : dnn.predicted) {
    const auto x = dispatch_features(grid, model, dnn.group_output, dnn.load_mw, p.contingency);
    for (std::size_t f = 0; f < x.size() && f < model.feature_min.size(); ++f)
      if (x[f] < model.feature_min[f] - 1e-9 || x[f] > model.feature_max[f] + 1e-9) ood[f] = true;
  }
  for (std::size_t f = 0; f < ood.size(); ++f)
    if (ood[f]) r.ood_features.push_back(model.feature_names[f]);
  return out;
}

void write_comparison(const GridCase& grid, const Comparison& comparison, const std::string& dir) {
  emit_report(comparison.report, comparison.plots, dir);
  for (const auto& m : comparison.report.models)
    write_file(dir + "/dispatch_" + to_string(m.kind) + ".json", dispatch_to_json(grid, m.dispatch) + "\n");
}

PipelineResult run_pipeline(const PipelineConfig& cfg, std::ostream* log) {
  cfg.validate();
  using clock = std::chrono::steady_clock;
  auto t0 = clock::now();
  auto lap = [&](const std::string& what) {
    if (!log) return;
    const double s = std::chrono::duration<double>(clock::now() - t0).count();
    *log << what << " (" << format_double(std::round(s * 100) / 100) << " s)\n";
    t0 = clock::now();
  };

  const std::string out = output_dir(cfg);
  std::filesystem::create_directories(out);
  const GridCase grid = load_case(cfg.resolved_case_path());
  for (const auto& s : cfg.scenarios) s.validate(grid);

  json echo = json::parse(config_to_json(cfg));
  echo.erase("output_dir");
  write_file(out + "/config.json", echo.dump(2) + "\n");

  const auto scenarios = sample_scenarios(grid, cfg.sampling, cfg.dataset_rows, cfg.dataset_seed());
  const auto rows = label_scenarios(grid, scenarios, cfg.sim);
  const auto manifest = make_manifest(grid, cfg.sampling, cfg.sim, cfg.dataset_seed(), rows.size());
  write_dataset(out + "/dataset.tsv", manifest, rows);
  lap("dataset: " + std::to_string(rows.size()) + " rows");

  const Split parts = split(rows, 1.0 - cfg.heldout_fraction, cfg.split_seed());
  TrainConfig tc = cfg.train;
  tc.seed = cfg.train_seed();
  TrainResult trained = train(parts.train, manifest, tc);
  save_model(out + "/model.json", trained.model);

  PipelineResult result;
  result.history = trained.history;
  result.heldout = evaluate(trained.model, parts.validation);
  json tj;
  tj["train_rows"] = parts.train.size();
  tj["heldout_rows"] = parts.validation.size();
  tj["epochs_run"] = trained.history.train_mse.size();
  tj["best_epoch"] = trained.history.best_epoch;
  tj["stopped_early"] = trained.history.stopped_early;
  tj["model_fingerprint"] = trained.model.fingerprint();
  tj["heldout"] = {{"nadir_mae", result.heldout.mae[0]},
                   {"rocof_mae", result.heldout.mae[1]},
                   {"nadir_max_error", result.heldout.max_error[0]},
                   {"rocof_max_error", result.heldout.max_error[1]},
                   {"nadir_percent", result.heldout.percent[0]},
                   {"rocof_percent", result.heldout.percent[1]}};
  write_file(out + "/training.json", tj.dump(2) + "\n");
  lap("train: held-out MAE nadir " + format_double(result.heldout.mae[0]) + " Hz, rocof " +
      format_double(result.heldout.mae[1]) + " Hz/s");

  for (const auto& s : cfg.scenarios) {
    Comparison c = compare_models(grid, trained.model, cfg, s);
    const std::string dir = out + "/" + s.name;
    std::filesystem::create_directories(dir);
    write_comparison(grid, c, dir);
    if (log)
      for (const auto& m : c.report.models)
        *log << "  " << s.name << " " << to_string(m.kind) << ": cost " << format_double(m.dispatch.cost)
             << " $/h, solve " << format_double(std::round(m.dispatch.solve_time * 1000) / 1000) << " s, nodes "
             << m.dispatch.nodes << (m.passes() ? ", thresholds met\n" : ", thresholds violated\n");
    lap("compare " + s.name);
    result.reports.push_back(std::move(c.report));
  }
  return result;
}

}  // namespace fcopf
