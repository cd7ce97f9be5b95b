#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fcopf/dataset.hpp"
#include "fcopf/dynamics.hpp"
#include "fcopf/nn.hpp"
#include "fcopf/opf.hpp"
#include "fcopf/solver.hpp"

namespace fcopf {

/// Load profile and contingency for one comparison run.
struct ScenarioOverride {
  std::string name = "default";
  std::vector<double> load_scales{1.0};  // one value for every load, or one per load
  std::string contingency;               // unit name; empty evaluates the most critical only

  void validate(const GridCase& grid) const;
  std::vector<double> loads(const GridCase& grid) const;
};

struct PipelineConfig {
  std::string case_path;  // empty: the bundled case
  SamplingConfig sampling;
  std::size_t dataset_rows = 8000;
  double heldout_fraction = 0.1;
  std::uint64_t seed = 42;
  TrainConfig train;  // train.hidden holds the network dims; train.seed is derived from `seed`
  FcopfConfig fcopf;                       // its contingencies come from the names below
  std::vector<std::string> contingencies;  // unit names; empty: the credible set
  SimConfig sim;
  MilpOptions milp;
  std::vector<ScenarioOverride> scenarios{{"default", {1.0}, "G21"}, {"high_load", {1.2}, "G11"}};
  std::string output_dir = "fcopf-out";

  void validate() const;
  std::string resolved_case_path() const;
  FcopfConfig fcopf_config(const GridCase& grid) const;

  // Independent streams derived from `seed`.
  std::uint64_t dataset_seed() const;
  std::uint64_t split_seed() const;
  std::uint64_t train_seed() const;
};

inline constexpr const char* kOutputDirEnv = "FCOPF_OUTPUT_DIR";

PipelineConfig config_from_json(std::string_view text);
std::string config_to_json(const PipelineConfig& cfg);
// "default" yields the built-in configuration.
PipelineConfig load_config(const std::string& path);
// Output directory after the environment override.
std::string output_dir(const PipelineConfig& cfg);

// |(predicted - simulated) / simulated| * 100.
double percent_error(double predicted, double simulated);

struct Validation {
  UnitId contingency;
  FrequencyMetrics simulated;
  std::optional<double> predicted_nadir;
  std::optional<double> predicted_rocof;
  std::optional<double> nadir_error;  // percent, present iff predicted
  std::optional<double> rocof_error;
  FrequencyTrace trace;
};

/// Simulates the trip from the dispatch and scores any prediction the model
/// made: DNN-FCOPF predicts both metrics, L-FCOPF the linearized RoCoF,
/// T-OPF nothing.
Validation validate_dispatch(const GridCase& grid, const DispatchResult& dispatch, UnitId contingency,
                             const SimConfig& sim);

struct ContingencyCheck {
  std::string contingency;
  bool specified = false;  // requested by the scenario
  bool critical = false;   // largest tripped output in the T-OPF dispatch
  FrequencyMetrics simulated;
  std::optional<double> predicted_nadir;
  std::optional<double> predicted_rocof;
  std::optional<double> nadir_error;
  std::optional<double> rocof_error;
  bool nadir_ok = false;  // simulated against the thresholds
  bool rocof_ok = false;
};

struct ModelReport {
  ModelKind kind = ModelKind::topf;
  DispatchResult dispatch;
  std::vector<ContingencyCheck> checks;
  std::string same_dispatch_as;  // earlier model with an identical dispatch, if any

  bool passes() const;
  const ContingencyCheck& check(const std::string& contingency) const;
};

struct ComparisonReport {
  std::string scenario;
  std::string case_fingerprint;
  std::vector<double> load_mw;
  double rocof_threshold = 0.0;
  double nadir_threshold = 0.0;
  std::string critical_contingency;
  std::vector<std::string> evaluated;    // contingency names in check order
  std::vector<std::string> ood_features;  // DNN-FCOPF inputs outside the training range
  std::vector<ModelReport> models;        // T-OPF, L-FCOPF, DNN-FCOPF

  const ModelReport& model(ModelKind kind) const;
};

/// Frequency and RoCoF curves of one model at one contingency.
struct PlotSeries {
  ModelKind kind = ModelKind::topf;
  std::string contingency;
  int bus = 0;
  std::vector<double> time;       // s
  std::vector<double> frequency;  // Hz
  std::vector<double> rocof;      // Hz/s, windowed slope starting at each time
};

PlotSeries plot_series(ModelKind kind, const std::string& contingency, const FrequencyTrace& trace,
                       const SimConfig& sim);

struct Comparison {
  ComparisonReport report;
  std::vector<PlotSeries> plots;  // one per model, at the specified (else critical) contingency
};

Comparison compare_models(const GridCase& grid, const MlpModel& model, const PipelineConfig& cfg,
                          const ScenarioOverride& scenario);

struct PipelineResult {
  Evaluation heldout;
  TrainHistory history;
  std::vector<ComparisonReport> reports;
};

/// Dataset, training, then one comparison per scenario, all written under
/// the output directory. Stage progress and timings go to `log` only, so the
/// written files stay byte-identical across runs.
PipelineResult run_pipeline(const PipelineConfig& cfg, std::ostream* log = nullptr);

// Writes the report files plus one dispatch file per model into `dir`.
void write_comparison(const GridCase& grid, const Comparison& comparison, const std::string& dir);

}  // namespace fcopf
