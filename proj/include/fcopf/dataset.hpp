#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fcopf/common.hpp"
#include "fcopf/dynamics.hpp"
#include "fcopf/grid.hpp"

namespace fcopf {

struct SamplingConfig {
  double load_min = 0.90;  // fraction of nominal load
  double load_max = 1.10;
  double gen_min = 0.85;   // fraction of reference per-unit output
  double gen_max = 1.15;
  int max_attempts = 1000;  // per scenario, before the ranges are declared infeasible

  void validate() const;
};

struct Scenario {
  std::size_t index = 0;
  std::uint64_t seed = 0;  // per-scenario stream, derived from the run seed
  std::vector<double> load_scales;
  std::vector<double> group_outputs;  // MW per unit
  UnitId tripped;
};

/// Feature order: per-group unit output, per-load MW, one-hot trip block.
struct FeatureLayout {
  std::size_t groups = 0;
  std::size_t loads = 0;
  std::vector<std::string> names;
  std::vector<std::string> units;
  std::vector<std::string> contingencies;  // unit names, one-hot order

  static FeatureLayout for_case(const GridCase& grid, const std::vector<UnitId>& contingencies);
  std::size_t arity() const { return names.size(); }
  std::size_t trip_offset() const { return groups + loads; }
};

struct DatasetRow {
  std::vector<double> features;
  double nadir = 0.0;  // Hz
  double rocof = 0.0;  // Hz/s
  bool operator==(const DatasetRow&) const = default;
};

struct DatasetManifest {
  FeatureLayout layout;
  std::vector<std::string> label_names{"nadir", "rocof"};
  std::string case_fingerprint;
  SamplingConfig sampling;
  SimConfig sim;
  std::uint64_t seed = 0;
  std::size_t row_count = 0;
};

std::vector<Scenario> sample_scenarios(const GridCase& grid, const SamplingConfig& ranges, std::size_t n,
                                       std::uint64_t seed);

std::vector<double> scenario_features(const FeatureLayout& layout, const std::vector<double>& group_outputs,
                                      const std::vector<double>& load_mw, std::size_t contingency);

DatasetRow label_scenario(const GridCase& grid, const Scenario& s, const SimConfig& sim);

/// Labels every scenario; rows come back in scenario order whichever
/// execution path is used.
std::vector<DatasetRow> label_scenarios(const GridCase& grid, const std::vector<Scenario>& scenarios,
                                        const SimConfig& sim, Execution exec = Execution::parallel);

DatasetManifest make_manifest(const GridCase& grid, const SamplingConfig& ranges, const SimConfig& sim,
                              std::uint64_t seed, std::size_t rows);

void write_dataset(const std::string& path, const DatasetManifest& manifest, const std::vector<DatasetRow>& rows);

struct Dataset {
  DatasetManifest manifest;
  std::vector<DatasetRow> rows;
};

// `expected_fingerprint` empty skips the case check.
Dataset read_dataset(const std::string& path, const std::string& expected_fingerprint = "");

std::vector<DatasetRow> dataset_roundtrip(const std::vector<DatasetRow>& rows, const DatasetManifest& manifest,
                                          const std::string& path);

struct Split {
  std::vector<DatasetRow> train;
  std::vector<DatasetRow> validation;
};

Split split(const std::vector<DatasetRow>& rows, double train_fraction, std::uint64_t seed);

}  // namespace fcopf
