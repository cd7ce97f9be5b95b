#include "fcopf/opf.hpp"

#include <memory>

#include <algorithm>
#include <cmath>
#include <numbers>

#include <json.hpp>

#include "fcopf/dataset.hpp"

namespace fcopf {

using nlohmann::json;

const char* to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::topf: return "topf";
    case ModelKind::lfcopf: return "lfcopf";
    case ModelKind::dnnfcopf: return "dnnfcopf";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view text) {
  if (text == "topf") return ModelKind::topf;
  if (text == "lfcopf") return ModelKind::lfcopf;
  if (text == "dnnfcopf") return ModelKind::dnnfcopf;
  throw Error(ErrorKind::usage, "model", "unknown model '" + std::string(text) + "' (topf, lfcopf, dnnfcopf)");
}

void FcopfConfig::validate(const GridCase& grid) const {
  if (!(rocof_threshold < 0)) throw Error(ErrorKind::invariant, "fcopf.rocof_threshold", "must be negative");
  if (!(nadir_threshold < grid.f0)) throw Error(ErrorKind::invariant, "fcopf.nadir_threshold", "must be below f0");
  if (segments < 1) throw Error(ErrorKind::invariant, "fcopf.segments", "must be >= 1");
  for (const auto& c : contingencies)
    if (c.group >= grid.gen_groups.size() || c.index >= static_cast<std::size_t>(grid.gen_groups[c.group].unit_count))
      throw Error(ErrorKind::invariant, "fcopf.contingencies", "unknown unit");
}

std::vector<UnitId> FcopfConfig::resolved_contingencies(const GridCase& grid) const {
  return contingencies.empty() ? credible_contingencies(grid) : contingencies;
}

OpfProblem build_topf(const GridCase& grid, const std::vector<double>& load_mw, std::size_t segments) {
  if (load_mw.size() != grid.loads.size())
    throw Error(ErrorKind::mismatch, "build_topf", "one load value per load is required");
  OpfProblem p;
  p.kind = ModelKind::topf;
  p.load_mw = load_mw;
  auto& lp = p.milp.lp;

  for (const auto& g : grid.gen_groups)
    p.output_var.push_back(lp.add_variable("P_G" + std::to_string(g.bus), g.p_min, g.p_max));
  const std::size_t slack = grid.slack_index();
  for (std::size_t b = 0; b < grid.buses.size(); ++b) {
    const double lim = b == slack ? 0.0 : std::numbers::pi;
    p.angle_var.push_back(lp.add_variable("theta_" + std::to_string(grid.buses[b].id), -lim, lim));
  }
  for (const auto& l : grid.lines)
    p.flow_var.push_back(lp.add_variable("F_" + std::to_string(l.from_bus) + "_" + std::to_string(l.to_bus), -l.limit,
                                         l.limit));

  for (std::size_t gi = 0; gi < grid.gen_groups.size(); ++gi) {
    const auto& g = grid.gen_groups[gi];
    const auto pwl = piecewise_linearize(g.c2, g.c1, g.c0, g.p_min, g.p_max, segments);
    const double n = g.unit_count;
    const double lo = n * *std::min_element(pwl.cost.begin(), pwl.cost.end());
    const double hi = n * *std::max_element(pwl.cost.begin(), pwl.cost.end());
    const auto t = lp.add_variable("cost_G" + std::to_string(g.bus), lo, hi, 1.0);
    p.cost_var.push_back(t);
    for (std::size_t k = 0; k < pwl.segments(); ++k)
      lp.add_row({{t, 1.0}, {p.output_var[gi], -n * pwl.slope(k)}}, Relation::ge, n * pwl.intercept(k),
                 "secant_G" + std::to_string(g.bus) + "_" + std::to_string(k + 1));
    p.cost_error_bound += n * pwl.error_bound(g.c2);
  }

  // Nodal balance: generation - load = net flow out.
  std::vector<std::vector<Term>> balance(grid.buses.size());
  std::vector<double> rhs(grid.buses.size(), 0.0);
  for (std::size_t gi = 0; gi < grid.gen_groups.size(); ++gi)
    balance[grid.bus_index(grid.gen_groups[gi].bus)].push_back(
        {p.output_var[gi], static_cast<double>(grid.gen_groups[gi].unit_count)});
  for (std::size_t l = 0; l < grid.loads.size(); ++l) rhs[grid.bus_index(grid.loads[l].bus)] += load_mw[l];
  for (std::size_t k = 0; k < grid.lines.size(); ++k) {
    const auto& line = grid.lines[k];
    const auto f = grid.bus_index(line.from_bus), t = grid.bus_index(line.to_bus);
    balance[f].push_back({p.flow_var[k], -1.0});
    balance[t].push_back({p.flow_var[k], 1.0});
    const double y = grid.base_mva / line.x;
    lp.add_row({{p.flow_var[k], 1.0}, {p.angle_var[f], -y}, {p.angle_var[t], y}}, Relation::eq, 0.0,
               "flow_" + std::to_string(line.from_bus) + "_" + std::to_string(line.to_bus));
  }
  for (std::size_t b = 0; b < grid.buses.size(); ++b)
    lp.add_row(balance[b], Relation::eq, rhs[b], "balance_" + std::to_string(grid.buses[b].id));
  return p;
}

double rocof_output_cap(const GridCase& grid, UnitId unit, double threshold) {
  const auto online = units_except(grid, unit);
  const double h = system_inertia(grid, online);
  return -threshold * 2.0 * h * grid.base_mva / grid.f0;
}

OpfProblem build_lfcopf(const GridCase& grid, const std::vector<double>& load_mw, const FcopfConfig& cfg) {
  cfg.validate(grid);
  OpfProblem p = build_topf(grid, load_mw, cfg.segments);
  p.kind = ModelKind::lfcopf;
  p.contingencies = cfg.resolved_contingencies(grid);
  for (const auto& c : p.contingencies) {
    const double h = system_inertia(grid, units_except(grid, c));
    // -f0 P / (2 H base) >= threshold, with P the tripped unit's output.
    const double coef = grid.f0 / (2.0 * h * grid.base_mva);
    p.milp.lp.add_row({{p.output_var[c.group], coef}}, Relation::le, -cfg.rocof_threshold,
                      "rocof_" + unit_name(grid, c));
  }
  return p;
}

InputBox operating_box(const GridCase& grid, const std::vector<double>& load_mw, const MlpModel& model,
                       UnitId contingency) {
  InputBox box;
  for (const auto& g : grid.gen_groups) {
    box.lower.push_back(g.p_min);
    box.upper.push_back(g.p_max);
  }
  for (double l : load_mw) {
    box.lower.push_back(l);
    box.upper.push_back(l);
  }
  const auto name = unit_name(grid, contingency);
  bool found = false;
  for (const auto& c : model.contingencies) {
    const double v = c == name ? 1.0 : 0.0;
    found = found || c == name;
    box.lower.push_back(v);
    box.upper.push_back(v);
  }
  if (!found)
    throw Error(ErrorKind::mismatch, "operating_box", "model was not trained on contingency " + name);
  box.validate(model.input_dim());
  return box;
}

std::vector<double> dispatch_features(const GridCase& grid, const MlpModel& model,
                                      const std::vector<double>& group_output, const std::vector<double>& load_mw,
                                      UnitId contingency) {
  const auto box = operating_box(grid, load_mw, model, contingency);
  std::vector<double> x = box.lower;
  std::copy(group_output.begin(), group_output.end(), x.begin());
  return x;
}

namespace {

void check_model_matches(const GridCase& grid, const MlpModel& model) {
  model.validate_predictor();
  if (model.case_fingerprint != grid.fingerprint)
    throw Error(ErrorKind::mismatch, "build_dnn_fcopf",
                "model was trained on case " + model.case_fingerprint + " but the case is " + grid.fingerprint +
                    "; retrain with `fcopf train`");
  const auto layout = FeatureLayout::for_case(grid, credible_contingencies(grid));
  if (model.feature_names != layout.names)
    throw Error(ErrorKind::mismatch, "build_dnn_fcopf", "model feature order does not match the case layout");
}

}  // namespace

OpfProblem build_dnn_fcopf(const GridCase& grid, const std::vector<double>& load_mw, const MlpModel& model,
                           const FcopfConfig& cfg) {
  cfg.validate(grid);
  check_model_matches(grid, model);
  OpfProblem p = build_topf(grid, load_mw, cfg.segments);
  p.kind = ModelKind::dnnfcopf;
  p.contingencies = cfg.resolved_contingencies(grid);
  const MlpModel net = fold_normalization(model);
  // Group outputs are the leading inputs; the dispatch must cover the load.
  Constraint balance{{}, Relation::eq, 0.0, "balance"};
  for (std::size_t g = 0; g < grid.gen_groups.size(); ++g)
    balance.terms.push_back({g, static_cast<double>(grid.gen_groups[g].unit_count)});
  for (double l : load_mw) balance.rhs += l;

  for (const auto& c : p.contingencies) {
    const auto box = operating_box(grid, load_mw, model, c);
    auto bounds = propagate_bounds(net, box);
    if (cfg.tighten_bounds) bounds = tighten_bounds(net, box, bounds, {balance});

    std::vector<LinExpr> inputs;
    for (std::size_t i = 0; i < box.lower.size(); ++i)
      inputs.push_back(i < grid.gen_groups.size() ? LinExpr::of(p.output_var[i]) : LinExpr::value(box.lower[i]));
    const auto name = unit_name(grid, c);
    auto frag = encode_network(p.milp, net, bounds, inputs, {cfg.encode_mode, "nn_" + name});
    p.milp.lp.add_row({{frag.outputs[0], 1.0}}, Relation::ge, cfg.nadir_threshold, "nadir_" + name);
    p.milp.lp.add_row({{frag.outputs[1], 1.0}}, Relation::ge, cfg.rocof_threshold, "rocof_" + name);
    p.fragments.push_back(std::move(frag));
    p.bounds.push_back(std::move(bounds));
    p.features.push_back(box.lower);
  }

  // A copy whose exact ReLU completion at the LP's dispatch already meets its
  // thresholds can take that completion: same cost, integral binaries.
  p.milp.repair = [net = std::make_shared<const MlpModel>(net), fragments = p.fragments, features = p.features,
                   outputs = p.output_var](std::vector<double>& values, const std::vector<double>& lower,
                                           const std::vector<double>& upper) {
    std::vector<double> trial;
    for (std::size_t c = 0; c < fragments.size(); ++c) {
      std::vector<double> x = features[c];
      for (std::size_t g = 0; g < outputs.size(); ++g) x[g] = values[outputs[g]];
      trial = values;
      complete_fragment(*net, fragments[c], x, trial);
      bool ok = true;
      for (std::size_t j = 0; j < trial.size() && ok; ++j)
        ok = trial[j] == values[j] || (trial[j] >= lower[j] - 1e-9 && trial[j] <= upper[j] + 1e-9);
      if (ok) values.swap(trial);
    }
  };
  return p;
}

Solution solve_opf(const OpfProblem& problem, const MilpOptions& options) {
  if (problem.milp.binaries.empty()) {
    Solution s = solve_lp(problem.milp.lp, options.lp);
    return s;
  }
  return solve_milp(problem.milp, options);
}

OperatingPoint DispatchResult::operating_point() const { return {group_output, load_mw, angles, flows}; }

DispatchResult extract_dispatch(const GridCase& grid, const OpfProblem& problem, const Solution& solution,
                                const MlpModel* model) {
  const std::string where = std::string("extract_dispatch/") + to_string(problem.kind);
  if (solution.status != SolveStatus::optimal)
    throw Error(ErrorKind::infeasible, where, std::string("solver status is ") + to_string(solution.status));
  if (solution.values.size() != problem.milp.lp.variables())
    throw Error(ErrorKind::mismatch, where, "solution does not match the problem");

  DispatchResult d;
  d.kind = problem.kind;
  d.load_mw = problem.load_mw;
  for (auto v : problem.output_var) d.group_output.push_back(solution.values[v]);
  for (auto v : problem.angle_var) d.angles.push_back(solution.values[v]);
  for (auto v : problem.flow_var) d.flows.push_back(solution.values[v]);
  d.cost = solution.objective;
  d.solve_time = solution.wall_time;
  d.nodes = solution.nodes;
  for (std::size_t g = 0; g < grid.gen_groups.size(); ++g) {
    const auto& gg = grid.gen_groups[g];
    const double P = d.group_output[g];
    d.quadratic_cost += gg.unit_count * (gg.c2 * P * P + gg.c1 * P + gg.c0);
  }

  const auto violations = check_operating_point(grid, d.operating_point());
  if (!violations.empty()) {
    const auto& v = violations.front();
    throw Error(ErrorKind::numerical, where,
                "solver returned a point violating " + std::string(to_string(v.kind)) + " at " + v.element + " by " +
                    format_double(v.magnitude) + " (" + std::to_string(violations.size()) + " violations)");
  }

  if (problem.kind == ModelKind::dnnfcopf) {
    if (!model) throw Error(ErrorKind::usage, where, "the predictor is required to read back DNN-FCOPF results");
    for (std::size_t c = 0; c < problem.contingencies.size(); ++c) {
      PredictedMetrics pm;
      pm.contingency = problem.contingencies[c];
      pm.nadir = solution.values[problem.fragments[c].outputs[0]];
      pm.rocof = solution.values[problem.fragments[c].outputs[1]];
      const auto y = forward(*model, dispatch_features(grid, *model, d.group_output, d.load_mw, pm.contingency));
      pm.forward_nadir = y[0];
      pm.forward_rocof = y[1];
      const double dev = std::max(std::abs(pm.nadir - y[0]), std::abs(pm.rocof - y[1]));
      if (dev > 1e-6)
        throw Error(ErrorKind::numerical, where,
                    "embedded network disagrees with the forward pass by " + format_double(dev) + " for " +
                        unit_name(grid, pm.contingency));
      d.predicted.push_back(pm);
    }
  }
  return d;
}

DispatchResult solve_dispatch(const GridCase& grid, const OpfProblem& problem, const MlpModel* model,
                              const MilpOptions& options) {
  const auto sol = solve_opf(problem, options);
  if (sol.status != SolveStatus::optimal)
    throw Error(sol.status == SolveStatus::infeasible ? ErrorKind::infeasible : ErrorKind::numerical,
                std::string("solve/") + to_string(problem.kind),
                sol.status == SolveStatus::infeasible
                    ? "no dispatch satisfies the constraints"
                    : "node limit reached with gap " + format_double(sol.gap));
  return extract_dispatch(grid, problem, sol, model);
}

std::string dispatch_to_json(const GridCase& grid, const DispatchResult& d, bool include_timing) {
  json j;
  j["model"] = to_string(d.kind);
  j["case_fingerprint"] = grid.fingerprint;
  json groups = json::array();
  for (std::size_t g = 0; g < grid.gen_groups.size(); ++g)
    groups.push_back({{"bus", grid.gen_groups[g].bus},
                      {"unit_count", grid.gen_groups[g].unit_count},
                      {"unit_output", d.group_output[g]},
                      {"group_output", d.group_output[g] * grid.gen_groups[g].unit_count}});
  j["gen_groups"] = groups;
  j["loads"] = d.load_mw;
  j["angles"] = d.angles;
  j["flows"] = d.flows;
  j["cost"] = d.cost;
  j["quadratic_cost"] = d.quadratic_cost;
  j["nodes"] = d.nodes;
  if (include_timing) j["solve_time"] = d.solve_time;
  json pred = json::array();
  for (const auto& p : d.predicted)
    pred.push_back({{"contingency", unit_name(grid, p.contingency)},
                    {"nadir", p.nadir},
                    {"rocof", p.rocof},
                    {"forward_nadir", p.forward_nadir},
                    {"forward_rocof", p.forward_rocof}});
  j["predicted"] = pred;
  return j.dump(1);
}

DispatchResult dispatch_from_json(const GridCase& grid, std::string_view text) {
  DispatchResult d;
  try {
    const json j = json::parse(text);
    d.kind = parse_model_kind(j.at("model").get<std::string>());
    if (j.at("case_fingerprint").get<std::string>() != grid.fingerprint)
      throw Error(ErrorKind::mismatch, "dispatch", "dispatch was solved on a different case");
    for (const auto& g : j.at("gen_groups")) d.group_output.push_back(g.at("unit_output").get<double>());
    d.load_mw = j.at("loads").get<std::vector<double>>();
    d.angles = j.at("angles").get<std::vector<double>>();
    d.flows = j.at("flows").get<std::vector<double>>();
    d.cost = j.at("cost").get<double>();
    d.quadratic_cost = j.value("quadratic_cost", 0.0);
    d.nodes = j.value("nodes", std::size_t{0});
    d.solve_time = j.value("solve_time", 0.0);
    for (const auto& p : j.at("predicted"))
      d.predicted.push_back({parse_unit(grid, p.at("contingency").get<std::string>()), p.at("nadir").get<double>(),
                             p.at("rocof").get<double>(), p.at("forward_nadir").get<double>(),
                             p.at("forward_rocof").get<double>()});
  } catch (const json::exception& e) {
    throw Error(ErrorKind::schema, "dispatch", e.what());
  }
  if (d.group_output.size() != grid.gen_groups.size() || d.load_mw.size() != grid.loads.size() ||
      d.angles.size() != grid.buses.size() || d.flows.size() != grid.lines.size())
    throw Error(ErrorKind::schema, "dispatch", "array lengths do not match the case");
  return d;
}

}  // namespace fcopf
