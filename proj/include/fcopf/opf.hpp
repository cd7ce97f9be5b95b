#pragma once

#include <string>
#include <vector>

#include "fcopf/encode.hpp"
#include "fcopf/grid.hpp"
#include "fcopf/nn.hpp"
#include "fcopf/solver.hpp"

namespace fcopf {

enum class ModelKind { topf, lfcopf, dnnfcopf };
const char* to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view text);

struct FcopfConfig {
  double rocof_threshold = -0.5;  // Hz/s
  double nadir_threshold = 59.5;  // Hz
  std::vector<UnitId> contingencies;  // empty: the credible set
  std::size_t segments = 10;          // cost secants per group
  EncodeMode encode_mode = EncodeMode::compact;
  bool tighten_bounds = false;

  void validate(const GridCase& grid) const;
  std::vector<UnitId> resolved_contingencies(const GridCase& grid) const;
};

/// A built dispatch model plus the handles needed to read it back.
struct OpfProblem {
  ModelKind kind = ModelKind::topf;
  MilpProblem milp;
  std::vector<double> load_mw;
  std::vector<std::size_t> output_var;  // per group, MW per unit
  std::vector<std::size_t> angle_var;   // per bus
  std::vector<std::size_t> flow_var;    // per line
  std::vector<std::size_t> cost_var;    // per group epigraph, $/h
  double cost_error_bound = 0.0;        // sum of secant error bounds, $/h
  std::vector<UnitId> contingencies;
  std::vector<MilpFragment> fragments;  // one per contingency (DNN-FCOPF)
  std::vector<NeuronBounds> bounds;
  std::vector<std::vector<double>> features;  // per contingency, constant parts filled
};

OpfProblem build_topf(const GridCase& grid, const std::vector<double>& load_mw, std::size_t segments = 10);
OpfProblem build_lfcopf(const GridCase& grid, const std::vector<double>& load_mw, const FcopfConfig& cfg);
OpfProblem build_dnn_fcopf(const GridCase& grid, const std::vector<double>& load_mw, const MlpModel& model,
                           const FcopfConfig& cfg);

// Largest per-unit output of `group` that keeps the linearized RoCoF of
// losing one of its units at or above `threshold`.
double rocof_output_cap(const GridCase& grid, UnitId unit, double threshold);

// Input box seen by the predictor inside the OPF: generator limits, loads
// fixed to the instance, trip block fixed to `contingency`.
InputBox operating_box(const GridCase& grid, const std::vector<double>& load_mw, const MlpModel& model,
                       UnitId contingency);

std::vector<double> dispatch_features(const GridCase& grid, const MlpModel& model,
                                      const std::vector<double>& group_output, const std::vector<double>& load_mw,
                                      UnitId contingency);

Solution solve_opf(const OpfProblem& problem, const MilpOptions& options = {});

struct PredictedMetrics {
  UnitId contingency;
  double nadir = 0.0;  // from the MILP fragment
  double rocof = 0.0;
  double forward_nadir = 0.0;  // forward pass on the realized features
  double forward_rocof = 0.0;
};

struct DispatchResult {
  ModelKind kind = ModelKind::topf;
  std::vector<double> group_output;  // MW per unit
  std::vector<double> load_mw;
  std::vector<double> angles;
  std::vector<double> flows;
  double cost = 0.0;            // piecewise-linear objective, $/h
  double quadratic_cost = 0.0;  // true quadratic cost of the same dispatch
  double solve_time = 0.0;      // s, solver only
  std::size_t nodes = 0;
  std::vector<PredictedMetrics> predicted;  // DNN-FCOPF only

  OperatingPoint operating_point() const;
};

/// Reads the solution back and re-checks it against the network equations;
/// a violation is reported as a solver fault.
DispatchResult extract_dispatch(const GridCase& grid, const OpfProblem& problem, const Solution& solution,
                                const MlpModel* model = nullptr);

DispatchResult solve_dispatch(const GridCase& grid, const OpfProblem& problem, const MlpModel* model = nullptr,
                              const MilpOptions& options = {});

std::string dispatch_to_json(const GridCase& grid, const DispatchResult& d, bool include_timing = false);
DispatchResult dispatch_from_json(const GridCase& grid, std::string_view text);

}  // namespace fcopf
