#include <cstdlib>
#include <set>

#include <json.hpp>

#include "fcopf/harness.hpp"

namespace fcopf {

using nlohmann::json;

namespace {

EncodeMode parse_encode_mode(const std::string& text) {
  if (text == "compact") return EncodeMode::compact;
  if (text == "explicit_z") return EncodeMode::explicit_z;
  throw Error(ErrorKind::schema, "fcopf.encode_mode", "expected compact or explicit_z, got '" + text + "'");
}

const char* encode_mode_name(EncodeMode m) { return m == EncodeMode::compact ? "compact" : "explicit_z"; }

NodeStart parse_node_start(const std::string& text) {
  if (text == "cold") return NodeStart::cold;
  if (text == "parent") return NodeStart::parent;
  if (text == "last") return NodeStart::last;
  throw Error(ErrorKind::schema, "solver.node_start", "expected cold, parent or last, got '" + text + "'");
}

const char* node_start_name(NodeStart s) {
  switch (s) {
    case NodeStart::cold: return "cold";
    case NodeStart::parent: return "parent";
    case NodeStart::last: return "last";
  }
  return "?";
}

// Rejects keys outside `known` so a misspelt field is not silently ignored.
void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> known) {
  if (!j.is_object()) throw Error(ErrorKind::schema, where, "expected an object");
  std::set<std::string> ok(known.begin(), known.end());
  for (const auto& [key, _] : j.items())
    if (!ok.count(key)) throw Error(ErrorKind::schema, where + "." + key, "unknown field");
}

template <class T>
void read(const json& j, const char* key, T& target) {
  if (j.contains(key)) target = j.at(key).get<T>();
}

json scenario_json(const ScenarioOverride& s) {
  return {{"name", s.name}, {"load_scales", s.load_scales}, {"contingency", s.contingency}};
}

ScenarioOverride scenario_from(const json& j, const std::string& where) {
  check_keys(j, where, {"name", "load_scales", "load_scale", "contingency"});
  ScenarioOverride s;
  read(j, "name", s.name);
  if (j.contains("load_scale")) s.load_scales = {j.at("load_scale").get<double>()};
  read(j, "load_scales", s.load_scales);
  read(j, "contingency", s.contingency);
  return s;
}

void check_scenario_name(const std::string& name) {
  if (name.empty() || name.find('/') != std::string::npos || name == "." || name == "..")
    throw Error(ErrorKind::invariant, "scenario.name", "must be a plain directory name");
}

}  // namespace

void ScenarioOverride::validate(const GridCase& grid) const {
  check_scenario_name(name);
  if (load_scales.size() != 1 && load_scales.size() != grid.loads.size())
    throw Error(ErrorKind::invariant, "scenario." + name + ".load_scales",
                "need one scale or one per load (" + std::to_string(grid.loads.size()) + ")");
  for (double s : load_scales)
    if (!(s > 0)) throw Error(ErrorKind::invariant, "scenario." + name + ".load_scales", "scales must be positive");
  if (!contingency.empty()) parse_unit(grid, contingency);
}

std::vector<double> ScenarioOverride::loads(const GridCase& grid) const {
  validate(grid);
  std::vector<double> mw = grid.nominal_loads();
  for (std::size_t i = 0; i < mw.size(); ++i) mw[i] *= load_scales.size() == 1 ? load_scales[0] : load_scales[i];
  return mw;
}

void PipelineConfig::validate() const {
  sampling.validate();
  train.validate();
  sim.validate();
  if (dataset_rows < 20) throw Error(ErrorKind::invariant, "dataset.rows", "need at least 20 rows");
  if (!(heldout_fraction > 0 && heldout_fraction < 1))
    throw Error(ErrorKind::invariant, "dataset.heldout_fraction", "must lie in (0, 1)");
  if (!(fcopf.rocof_threshold < 0)) throw Error(ErrorKind::invariant, "fcopf.rocof_threshold", "must be negative");
  if (fcopf.segments < 1) throw Error(ErrorKind::invariant, "fcopf.segments", "must be >= 1");
  if (output_dir.empty()) throw Error(ErrorKind::invariant, "output_dir", "must not be empty");
  std::set<std::string> names;
  for (const auto& s : scenarios) {
    check_scenario_name(s.name);
    if (!names.insert(s.name).second) throw Error(ErrorKind::invariant, "scenarios", "duplicate name " + s.name);
  }
}

std::string PipelineConfig::resolved_case_path() const { return case_path.empty() ? default_case_path() : case_path; }

FcopfConfig PipelineConfig::fcopf_config(const GridCase& grid) const {
  FcopfConfig c = fcopf;
  c.contingencies.clear();
  for (const auto& name : contingencies) c.contingencies.push_back(parse_unit(grid, name));
  c.validate(grid);
  return c;
}

std::uint64_t PipelineConfig::dataset_seed() const { return splitmix64(seed ^ 0x6461746173657431ull); }
std::uint64_t PipelineConfig::split_seed() const { return splitmix64(seed ^ 0x73706c6974000000ull); }
std::uint64_t PipelineConfig::train_seed() const { return splitmix64(seed ^ 0x747261696e000000ull); }

std::string config_to_json(const PipelineConfig& c) {
  json j;
  j["case_path"] = c.case_path;
  j["seed"] = c.seed;
  j["sampling"] = {{"load_min", c.sampling.load_min},
                   {"load_max", c.sampling.load_max},
                   {"gen_min", c.sampling.gen_min},
                   {"gen_max", c.sampling.gen_max},
                   {"max_attempts", c.sampling.max_attempts}};
  j["dataset"] = {{"rows", c.dataset_rows}, {"heldout_fraction", c.heldout_fraction}};
  j["train"] = {{"hidden", c.train.hidden},
                {"epochs", c.train.epochs},
                {"batch_size", c.train.batch_size},
                {"learning_rate", c.train.learning_rate},
                {"lr_decay", c.train.lr_decay},
                {"optimizer", to_string(c.train.optimizer)},
                {"momentum", c.train.momentum},
                {"patience", c.train.patience},
                {"validation_fraction", c.train.validation_fraction}};
  j["fcopf"] = {{"rocof_threshold", c.fcopf.rocof_threshold},
                {"nadir_threshold", c.fcopf.nadir_threshold},
                {"contingencies", c.contingencies},
                {"segments", c.fcopf.segments},
                {"encode_mode", encode_mode_name(c.fcopf.encode_mode)},
                {"tighten_bounds", c.fcopf.tighten_bounds}};
  j["solver"] = {{"gap", c.milp.gap},
                 {"node_limit", c.milp.node_limit},
                 {"node_start", node_start_name(c.milp.node_start)},
                 {"propagate", c.milp.propagate},
                 {"refactor_every", c.milp.lp.refactor_every}};
  j["sim"] = {{"dt", c.sim.dt},
              {"horizon", c.sim.horizon},
              {"event_time", c.sim.event_time},
              {"rocof_window", c.sim.rocof_window},
              {"measurement_rule", to_string(c.sim.rule)}};
  json scen = json::array();
  for (const auto& s : c.scenarios) scen.push_back(scenario_json(s));
  j["scenarios"] = scen;
  j["output_dir"] = c.output_dir;
  return j.dump(2) + "\n";
}

PipelineConfig config_from_json(std::string_view text) {
  PipelineConfig c;
  try {
    const json j = json::parse(text);
    check_keys(j, "config",
               {"case_path", "seed", "sampling", "dataset", "train", "fcopf", "solver", "sim", "scenarios", "output_dir"});
    read(j, "case_path", c.case_path);
    read(j, "seed", c.seed);
    read(j, "output_dir", c.output_dir);
    if (j.contains("sampling")) {
      const auto& s = j.at("sampling");
      check_keys(s, "sampling", {"load_min", "load_max", "gen_min", "gen_max", "max_attempts"});
      read(s, "load_min", c.sampling.load_min);
      read(s, "load_max", c.sampling.load_max);
      read(s, "gen_min", c.sampling.gen_min);
      read(s, "gen_max", c.sampling.gen_max);
      read(s, "max_attempts", c.sampling.max_attempts);
    }
    if (j.contains("dataset")) {
      const auto& d = j.at("dataset");
      check_keys(d, "dataset", {"rows", "heldout_fraction"});
      read(d, "rows", c.dataset_rows);
      read(d, "heldout_fraction", c.heldout_fraction);
    }
    if (j.contains("train")) {
      const auto& t = j.at("train");
      check_keys(t, "train",
                 {"hidden", "epochs", "batch_size", "learning_rate", "lr_decay", "optimizer", "momentum", "patience",
                  "validation_fraction"});
      read(t, "hidden", c.train.hidden);
      read(t, "epochs", c.train.epochs);
      read(t, "batch_size", c.train.batch_size);
      read(t, "learning_rate", c.train.learning_rate);
      read(t, "lr_decay", c.train.lr_decay);
      if (t.contains("optimizer")) c.train.optimizer = parse_optimizer(t.at("optimizer").get<std::string>());
      read(t, "momentum", c.train.momentum);
      read(t, "patience", c.train.patience);
      read(t, "validation_fraction", c.train.validation_fraction);
    }
    if (j.contains("fcopf")) {
      const auto& f = j.at("fcopf");
      check_keys(f, "fcopf",
                 {"rocof_threshold", "nadir_threshold", "contingencies", "segments", "encode_mode", "tighten_bounds"});
      read(f, "rocof_threshold", c.fcopf.rocof_threshold);
      read(f, "nadir_threshold", c.fcopf.nadir_threshold);
      read(f, "contingencies", c.contingencies);
      read(f, "segments", c.fcopf.segments);
      if (f.contains("encode_mode")) c.fcopf.encode_mode = parse_encode_mode(f.at("encode_mode").get<std::string>());
      read(f, "tighten_bounds", c.fcopf.tighten_bounds);
    }
    if (j.contains("solver")) {
      const auto& s = j.at("solver");
      check_keys(s, "solver", {"gap", "node_limit", "node_start", "propagate", "refactor_every"});
      read(s, "gap", c.milp.gap);
      read(s, "node_limit", c.milp.node_limit);
      if (s.contains("node_start")) c.milp.node_start = parse_node_start(s.at("node_start").get<std::string>());
      read(s, "propagate", c.milp.propagate);
      read(s, "refactor_every", c.milp.lp.refactor_every);
    }
    if (j.contains("sim")) {
      const auto& s = j.at("sim");
      check_keys(s, "sim", {"dt", "horizon", "event_time", "rocof_window", "measurement_rule"});
      read(s, "dt", c.sim.dt);
      read(s, "horizon", c.sim.horizon);
      read(s, "event_time", c.sim.event_time);
      read(s, "rocof_window", c.sim.rocof_window);
      if (s.contains("measurement_rule"))
        c.sim.rule = parse_measurement_rule(s.at("measurement_rule").get<std::string>());
    }
    if (j.contains("scenarios")) {
      c.scenarios.clear();
      std::size_t i = 0;
      for (const auto& s : j.at("scenarios")) c.scenarios.push_back(scenario_from(s, "scenarios[" + std::to_string(i++) + "]"));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::schema, "config", e.what());
  }
  c.validate();
  return c;
}

PipelineConfig load_config(const std::string& path) {
  if (path.empty() || path == "default") return PipelineConfig{};
  return config_from_json(read_file(path));
}

std::string output_dir(const PipelineConfig& cfg) {
  const char* env = std::getenv(kOutputDirEnv);
  return env && *env ? std::string(env) : cfg.output_dir;
}

}  // namespace fcopf
