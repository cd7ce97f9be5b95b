#include "fcopf/dataset.hpp"

#include <algorithm>
#include <exception>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace fcopf {

using nlohmann::json;

void SamplingConfig::validate() const {
  if (!(load_min > 0 && load_min <= load_max))
    throw Error(ErrorKind::invariant, "sampling.load", "need 0 < load_min <= load_max");
  if (!(gen_min >= 0 && gen_min <= gen_max))
    throw Error(ErrorKind::invariant, "sampling.gen", "need 0 <= gen_min <= gen_max");
  if (max_attempts < 1) throw Error(ErrorKind::invariant, "sampling.max_attempts", "must be >= 1");
}

FeatureLayout FeatureLayout::for_case(const GridCase& grid, const std::vector<UnitId>& contingencies) {
  FeatureLayout l;
  l.groups = grid.gen_groups.size();
  l.loads = grid.loads.size();
  for (const auto& g : grid.gen_groups) {
    l.names.push_back("P_G" + std::to_string(g.bus));
    l.units.push_back("MW");
  }
  for (const auto& ld : grid.loads) {
    l.names.push_back("P_L" + std::to_string(ld.bus));
    l.units.push_back("MW");
  }
  for (const auto& c : contingencies) {
    l.contingencies.push_back(unit_name(grid, c));
    l.names.push_back("trip_" + unit_name(grid, c));
    l.units.push_back("1");
  }
  return l;
}

std::vector<Scenario> sample_scenarios(const GridCase& grid, const SamplingConfig& ranges, std::size_t n,
                                       std::uint64_t seed) {
  ranges.validate();
  if (n == 0) throw Error(ErrorKind::invariant, "sample_scenarios", "n must be >= 1");
  const auto contingencies = credible_contingencies(grid);
  const auto nominal = grid.nominal_loads();
  const auto reference = default_dispatch(grid, nominal);
  const std::size_t slack = grid.slack_group();
  const auto& sg = grid.gen_groups[slack];

  std::vector<Scenario> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    Scenario& s = out[i];
    s.index = i;
    s.seed = splitmix64(seed ^ splitmix64(i + 1));
    Rng rng(s.seed);
    bool accepted = false;
    for (int attempt = 0; attempt < ranges.max_attempts && !accepted; ++attempt) {
      s.load_scales.assign(grid.loads.size(), 0.0);
      std::vector<double> load_mw(grid.loads.size());
      double total_load = 0.0;
      for (std::size_t l = 0; l < grid.loads.size(); ++l) {
        s.load_scales[l] = rng.uniform(ranges.load_min, ranges.load_max);
        if (ranges.load_min == ranges.load_max) s.load_scales[l] = ranges.load_min;
        load_mw[l] = s.load_scales[l] * nominal[l];
        total_load += load_mw[l];
      }
      s.group_outputs.assign(grid.gen_groups.size(), 0.0);
      double others = 0.0;
      for (std::size_t g = 0; g < grid.gen_groups.size(); ++g) {
        if (g == slack) continue;
        const auto& gg = grid.gen_groups[g];
        const double lo = std::max(gg.p_min, ranges.gen_min * reference[g]);
        const double hi = std::min(gg.p_max, ranges.gen_max * reference[g]);
        s.group_outputs[g] = (lo == hi) ? lo : rng.uniform(lo, hi);
        others += s.group_outputs[g] * gg.unit_count;
      }
      s.group_outputs[slack] = (total_load - others) / sg.unit_count;
      s.tripped = contingencies[rng.below(contingencies.size())];
      if (s.group_outputs[slack] < sg.p_min || s.group_outputs[slack] > sg.p_max) continue;
      const auto op = make_operating_point(grid, s.group_outputs, load_mw);
      accepted = check_operating_point(grid, op).empty();
    }
    if (!accepted)
      throw Error(ErrorKind::infeasible, "sample_scenarios",
                  "no balanced operating point found for scenario " + std::to_string(i) + " after " +
                      std::to_string(ranges.max_attempts) + " attempts; check the sampling ranges");
  }
  return out;
}

std::vector<double> scenario_features(const FeatureLayout& layout, const std::vector<double>& group_outputs,
                                      const std::vector<double>& load_mw, std::size_t contingency) {
  std::vector<double> x;
  x.reserve(layout.arity());
  x.insert(x.end(), group_outputs.begin(), group_outputs.end());
  x.insert(x.end(), load_mw.begin(), load_mw.end());
  for (std::size_t c = 0; c < layout.contingencies.size(); ++c) x.push_back(c == contingency ? 1.0 : 0.0);
  return x;
}

DatasetRow label_scenario(const GridCase& grid, const Scenario& s, const SimConfig& sim) {
  const auto contingencies = credible_contingencies(grid);
  const auto layout = FeatureLayout::for_case(grid, contingencies);
  const auto it = std::find(contingencies.begin(), contingencies.end(), s.tripped);
  if (it == contingencies.end())
    throw Error(ErrorKind::invariant, "label_scenario", "tripped unit is not a credible contingency");

  std::vector<double> load_mw(grid.loads.size());
  for (std::size_t l = 0; l < grid.loads.size(); ++l) load_mw[l] = s.load_scales[l] * grid.loads[l].p;
  const auto op = make_operating_point(grid, s.group_outputs, load_mw);
  DatasetRow row;
  try {
    const auto trace = simulate_trip(grid, op, s.tripped, sim);
    const auto metrics = measure(trace, sim);
    row.nadir = metrics.nadir;
    row.rocof = metrics.rocof;
  } catch (const Error& e) {
    throw Error(e.kind(), "scenario " + std::to_string(s.index), e.what());
  }
  row.features = scenario_features(layout, s.group_outputs, load_mw,
                                   static_cast<std::size_t>(it - contingencies.begin()));
  return row;
}

std::vector<DatasetRow> label_scenarios(const GridCase& grid, const std::vector<Scenario>& scenarios,
                                        const SimConfig& sim, Execution exec) {
  std::vector<DatasetRow> rows(scenarios.size());
  if (exec == Execution::serial) {
    for (std::size_t i = 0; i < scenarios.size(); ++i) rows[i] = label_scenario(grid, scenarios[i], sim);
    return rows;
  }
  std::vector<std::exception_ptr> errors(scenarios.size());
  const auto n = static_cast<std::ptrdiff_t>(scenarios.size());
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      rows[i] = label_scenario(grid, scenarios[i], sim);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return rows;
}

DatasetManifest make_manifest(const GridCase& grid, const SamplingConfig& ranges, const SimConfig& sim,
                              std::uint64_t seed, std::size_t rows) {
  DatasetManifest m;
  m.layout = FeatureLayout::for_case(grid, credible_contingencies(grid));
  m.case_fingerprint = grid.fingerprint;
  m.sampling = ranges;
  m.sim = sim;
  m.seed = seed;
  m.row_count = rows;
  return m;
}

namespace {

json manifest_to_json(const DatasetManifest& m) {
  json j;
  j["features"] = m.layout.names;
  j["feature_units"] = m.layout.units;
  j["groups"] = m.layout.groups;
  j["loads"] = m.layout.loads;
  j["contingencies"] = m.layout.contingencies;
  j["labels"] = m.label_names;
  j["label_units"] = {"Hz", "Hz/s"};
  j["case_fingerprint"] = m.case_fingerprint;
  j["sampling"] = {{"load_min", m.sampling.load_min},
                   {"load_max", m.sampling.load_max},
                   {"gen_min", m.sampling.gen_min},
                   {"gen_max", m.sampling.gen_max},
                   {"max_attempts", m.sampling.max_attempts}};
  j["sim"] = {{"dt", m.sim.dt},
              {"horizon", m.sim.horizon},
              {"event_time", m.sim.event_time},
              {"rocof_window", m.sim.rocof_window},
              {"measurement_rule", to_string(m.sim.rule)}};
  j["seed"] = m.seed;
  j["rows"] = m.row_count;
  return j;
}

DatasetManifest manifest_from_json(const json& j) {
  DatasetManifest m;
  try {
    m.layout.names = j.at("features").get<std::vector<std::string>>();
    m.layout.units = j.at("feature_units").get<std::vector<std::string>>();
    m.layout.groups = j.at("groups").get<std::size_t>();
    m.layout.loads = j.at("loads").get<std::size_t>();
    m.layout.contingencies = j.at("contingencies").get<std::vector<std::string>>();
    m.label_names = j.at("labels").get<std::vector<std::string>>();
    m.case_fingerprint = j.at("case_fingerprint").get<std::string>();
    const auto& s = j.at("sampling");
    m.sampling.load_min = s.at("load_min").get<double>();
    m.sampling.load_max = s.at("load_max").get<double>();
    m.sampling.gen_min = s.at("gen_min").get<double>();
    m.sampling.gen_max = s.at("gen_max").get<double>();
    m.sampling.max_attempts = s.at("max_attempts").get<int>();
    const auto& sim = j.at("sim");
    m.sim.dt = sim.at("dt").get<double>();
    m.sim.horizon = sim.at("horizon").get<double>();
    m.sim.event_time = sim.at("event_time").get<double>();
    m.sim.rocof_window = sim.at("rocof_window").get<double>();
    m.sim.rule = parse_measurement_rule(sim.at("measurement_rule").get<std::string>());
    m.seed = j.at("seed").get<std::uint64_t>();
    m.row_count = j.at("rows").get<std::size_t>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::schema, "dataset manifest", e.what());
  }
  if (m.layout.units.size() != m.layout.names.size() ||
      m.layout.groups + m.layout.loads + m.layout.contingencies.size() != m.layout.names.size())
    throw Error(ErrorKind::schema, "dataset manifest", "inconsistent feature layout");
  return m;
}

constexpr const char* kMagic = "#fcopf-dataset 1";

}  // namespace

void write_dataset(const std::string& path, const DatasetManifest& manifest, const std::vector<DatasetRow>& rows) {
  std::ostringstream out;
  out << kMagic << '\n';
  out << "#manifest " << manifest_to_json(manifest).dump() << '\n';
  for (std::size_t i = 0; i < manifest.layout.names.size(); ++i) out << manifest.layout.names[i] << '\t';
  out << "nadir\trocof\n";
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.features.size() != manifest.layout.arity())
      throw Error(ErrorKind::mismatch, "write_dataset",
                  "row " + std::to_string(r) + " has " + std::to_string(row.features.size()) +
                      " features, manifest declares " + std::to_string(manifest.layout.arity()));
    for (double v : row.features) out << format_double(v) << '\t';
    out << format_double(row.nadir) << '\t' << format_double(row.rocof) << '\n';
  }
  write_file(path, out.str());
}

Dataset read_dataset(const std::string& path, const std::string& expected_fingerprint) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line) || line != kMagic) throw Error(ErrorKind::schema, path, "not a dataset file");
  if (!std::getline(in, line) || line.rfind("#manifest ", 0) != 0)
    throw Error(ErrorKind::schema, path, "missing manifest header");
  Dataset ds;
  try {
    ds.manifest = manifest_from_json(json::parse(line.substr(10)));
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::schema, path, std::string("malformed manifest: ") + e.what());
  }
  if (!expected_fingerprint.empty() && ds.manifest.case_fingerprint != expected_fingerprint)
    throw Error(ErrorKind::mismatch, path,
                "dataset was labeled on case " + ds.manifest.case_fingerprint + ", expected " + expected_fingerprint);
  if (!std::getline(in, line)) throw Error(ErrorKind::schema, path, "missing column header");

  const std::size_t arity = ds.manifest.layout.arity();
  std::size_t lineno = 3;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> values;
    std::size_t start = 0;
    try {
      while (start <= line.size()) {
        const auto tab = line.find('\t', start);
        const auto end = tab == std::string::npos ? line.size() : tab;
        values.push_back(parse_double(std::string_view(line).substr(start, end - start)));
        start = end + 1;
      }
    } catch (const Error& e) {
      throw Error(ErrorKind::schema, path + ":" + std::to_string(lineno), e.what());
    }
    if (values.size() != arity + 2)
      throw Error(ErrorKind::schema, path + ":" + std::to_string(lineno),
                  "expected " + std::to_string(arity + 2) + " columns, found " + std::to_string(values.size()));
    DatasetRow row;
    row.features.assign(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(arity));
    row.nadir = values[arity];
    row.rocof = values[arity + 1];
    ds.rows.push_back(std::move(row));
  }
  if (ds.rows.size() != ds.manifest.row_count)
    throw Error(ErrorKind::schema, path,
                "manifest declares " + std::to_string(ds.manifest.row_count) + " rows, file has " +
                    std::to_string(ds.rows.size()));
  return ds;
}

std::vector<DatasetRow> dataset_roundtrip(const std::vector<DatasetRow>& rows, const DatasetManifest& manifest,
                                          const std::string& path) {
  DatasetManifest m = manifest;
  m.row_count = rows.size();
  write_dataset(path, m, rows);
  return read_dataset(path, m.case_fingerprint).rows;
}

Split split(const std::vector<DatasetRow>& rows, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0 && train_fraction < 1))
    throw Error(ErrorKind::invariant, "split", "train_fraction must lie in (0, 1)");
  const std::size_t n = rows.size();
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  if (n_train < 1 || n_train + 1 > n)
    throw Error(ErrorKind::invariant, "split", "too few rows to give each side at least one");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  Split s;
  s.train.reserve(n_train);
  s.validation.reserve(n - n_train);
  for (std::size_t i = 0; i < n; ++i) (i < n_train ? s.train : s.validation).push_back(rows[order[i]]);
  return s;
}

}  // namespace fcopf
