#include "fcopf/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <set>

#include <json.hpp>

#include "fcopf/common.hpp"
#include "fcopf/linalg.hpp"

namespace fcopf {

using nlohmann::json;

std::size_t GridCase::bus_index(int id) const {
  for (std::size_t i = 0; i < buses.size(); ++i)
    if (buses[i].id == id) return i;
  throw Error(ErrorKind::invariant, "buses", "unknown bus id " + std::to_string(id));
}

std::size_t GridCase::slack_index() const {
  for (std::size_t i = 0; i < buses.size(); ++i)
    if (buses[i].slack) return i;
  throw Error(ErrorKind::invariant, "buses", "no slack bus");
}

std::size_t GridCase::slack_group() const {
  const int slack_bus = buses[slack_index()].id;
  for (std::size_t g = 0; g < gen_groups.size(); ++g)
    if (gen_groups[g].bus == slack_bus) return g;
  throw Error(ErrorKind::invariant, "gen_groups", "no generator group at the slack bus");
}

std::vector<double> GridCase::nominal_loads() const {
  std::vector<double> out;
  out.reserve(loads.size());
  for (const auto& l : loads) out.push_back(l.p);
  return out;
}

std::string unit_name(const GridCase& grid, UnitId unit) {
  return "G" + std::to_string(grid.gen_groups.at(unit.group).bus) + std::to_string(unit.index + 1);
}

UnitId parse_unit(const GridCase& grid, std::string_view name) {
  for (std::size_t g = 0; g < grid.gen_groups.size(); ++g)
    for (int k = 0; k < grid.gen_groups[g].unit_count; ++k) {
      UnitId u{g, static_cast<std::size_t>(k)};
      if (unit_name(grid, u) == name) return u;
    }
  throw Error(ErrorKind::usage, "unit", "unknown unit '" + std::string(name) + "'");
}

std::vector<UnitId> all_units(const GridCase& grid) {
  std::vector<UnitId> out;
  for (std::size_t g = 0; g < grid.gen_groups.size(); ++g)
    for (int k = 0; k < grid.gen_groups[g].unit_count; ++k)
      out.push_back({g, static_cast<std::size_t>(k)});
  return out;
}

std::vector<UnitId> units_except(const GridCase& grid, UnitId removed) {
  auto out = all_units(grid);
  std::erase(out, removed);
  return out;
}

std::vector<UnitId> credible_contingencies(const GridCase& grid) {
  std::vector<UnitId> out;
  for (std::size_t g = 0; g < grid.gen_groups.size(); ++g) out.push_back({g, 0});
  return out;
}

namespace {

[[noreturn]] void schema_error(const std::string& path, const std::string& what) {
  throw Error(ErrorKind::schema, path, what);
}

const json& require(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) schema_error(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) schema_error(path + "." + key, "missing field");
  return *it;
}

double number(const json& obj, const std::string& key, const std::string& path) {
  const json& v = require(obj, key, path);
  if (!v.is_number()) schema_error(path + "." + key, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) schema_error(path + "." + key, "not finite");
  return d;
}

double number_or(const json& obj, const std::string& key, const std::string& path, double fallback) {
  return obj.contains(key) ? number(obj, key, path) : fallback;
}

int integer(const json& obj, const std::string& key, const std::string& path) {
  const json& v = require(obj, key, path);
  if (!v.is_number_integer()) schema_error(path + "." + key, "expected an integer");
  return v.get<int>();
}

const json& array(const json& obj, const std::string& key) {
  const json& v = require(obj, key, "");
  if (!v.is_array()) schema_error(key, "expected a list");
  return v;
}

void check_connected(const GridCase& grid) {
  const std::size_t n = grid.buses.size();
  std::vector<std::vector<std::size_t>> adj(n);
  for (const auto& l : grid.lines) {
    const auto a = grid.bus_index(l.from_bus);
    const auto b = grid.bus_index(l.to_bus);
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<bool> seen(n, false);
  std::queue<std::size_t> q;
  q.push(0);
  seen[0] = true;
  while (!q.empty()) {
    auto u = q.front();
    q.pop();
    for (auto v : adj[u])
      if (!seen[v]) {
        seen[v] = true;
        q.push(v);
      }
  }
  for (std::size_t i = 0; i < n; ++i)
    if (!seen[i])
      throw Error(ErrorKind::invariant, "lines",
                  "network is disconnected: bus " + std::to_string(grid.buses[i].id) +
                      " is unreachable");
}

}  // namespace

GridCase parse_case(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    schema_error("", std::string("malformed case document: ") + e.what());
  }
  GridCase grid;
  grid.fingerprint = fingerprint_of(doc.dump());

  const json& sys = require(doc, "system", "");
  grid.base_mva = number(sys, "base_mva", "system");
  grid.f0 = number(sys, "f0", "system");
  if (grid.base_mva <= 0) schema_error("system.base_mva", "must be positive");
  if (grid.f0 <= 0) schema_error("system.f0", "must be positive");

  const json& buses = array(doc, "buses");
  std::set<int> ids;
  int slack_count = 0;
  for (std::size_t i = 0; i < buses.size(); ++i) {
    const std::string path = "buses[" + std::to_string(i) + "]";
    Bus b;
    b.id = integer(buses[i], "id", path);
    if (buses[i].contains("slack")) {
      if (!buses[i]["slack"].is_boolean()) schema_error(path + ".slack", "expected a boolean");
      b.slack = buses[i]["slack"].get<bool>();
    }
    if (!ids.insert(b.id).second) schema_error(path + ".id", "duplicate bus id " + std::to_string(b.id));
    slack_count += b.slack ? 1 : 0;
    grid.buses.push_back(b);
  }
  if (grid.buses.empty()) schema_error("buses", "no buses");
  if (slack_count != 1)
    throw Error(ErrorKind::invariant, "buses", "exactly one slack bus required, found " +
                                                   std::to_string(slack_count));

  auto known_bus = [&](int id, const std::string& path) {
    if (!ids.count(id)) schema_error(path, "unknown bus id " + std::to_string(id));
  };

  const json& lines = array(doc, "lines");
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string path = "lines[" + std::to_string(i) + "]";
    Line l;
    l.from_bus = integer(lines[i], "from_bus", path);
    l.to_bus = integer(lines[i], "to_bus", path);
    l.x = number(lines[i], "x", path);
    l.limit = number(lines[i], "limit", path);
    known_bus(l.from_bus, path + ".from_bus");
    known_bus(l.to_bus, path + ".to_bus");
    if (l.from_bus == l.to_bus) schema_error(path, "from_bus equals to_bus");
    if (l.x <= 0) schema_error(path + ".x", "reactance must be positive");
    if (l.limit <= 0) schema_error(path + ".limit", "limit must be positive");
    grid.lines.push_back(l);
  }

  const json& groups = array(doc, "gen_groups");
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const std::string path = "gen_groups[" + std::to_string(i) + "]";
    const json& j = groups[i];
    GenGroup g;
    g.bus = integer(j, "bus", path);
    known_bus(g.bus, path + ".bus");
    g.unit_count = integer(j, "unit_count", path);
    g.p_min = number(j, "p_min", path);
    g.p_max = number(j, "p_max", path);
    g.c2 = number(j, "c2", path);
    g.c1 = number(j, "c1", path);
    g.c0 = number(j, "c0", path);
    g.H = number(j, "H", path);
    g.rated_mva = number(j, "rated_mva", path);
    g.droop = number(j, "droop", path);
    g.governor_tc = number(j, "governor_tc", path);
    g.xd = number_or(j, "xd", path, 0.3);
    g.default_dispatch = number_or(j, "default_dispatch", path, 0.5 * (g.p_min + g.p_max) * g.unit_count);
    if (g.unit_count < 1) schema_error(path + ".unit_count", "must be >= 1");
    if (!(g.p_min >= 0 && g.p_min < g.p_max)) schema_error(path, "need 0 <= p_min < p_max");
    if (g.c2 < 0) schema_error(path + ".c2", "cost must be convex (c2 >= 0)");
    if (g.H <= 0) schema_error(path + ".H", "must be positive");
    if (g.rated_mva <= 0) schema_error(path + ".rated_mva", "must be positive");
    if (g.droop <= 0) schema_error(path + ".droop", "must be positive");
    if (g.governor_tc <= 0) schema_error(path + ".governor_tc", "must be positive");
    if (g.xd <= 0) schema_error(path + ".xd", "must be positive");
    grid.gen_groups.push_back(g);
  }
  if (grid.gen_groups.empty()) schema_error("gen_groups", "no generator groups");

  const json& loads = array(doc, "loads");
  for (std::size_t i = 0; i < loads.size(); ++i) {
    const std::string path = "loads[" + std::to_string(i) + "]";
    Load l;
    l.bus = integer(loads[i], "bus", path);
    known_bus(l.bus, path + ".bus");
    l.p = number(loads[i], "P_load", path);
    grid.loads.push_back(l);
  }

  check_connected(grid);
  grid.slack_group();
  return grid;
}

GridCase load_case(const std::string& path) { return parse_case(read_file(path)); }

std::string default_case_path() { return std::string(FCOPF_DATA_DIR) + "/case9_modified.json"; }

std::vector<double> bus_injections(const GridCase& grid, std::span<const double> group_output,
                                   std::span<const double> load_mw) {
  std::vector<double> inj(grid.buses.size(), 0.0);
  for (std::size_t g = 0; g < grid.gen_groups.size(); ++g)
    inj[grid.bus_index(grid.gen_groups[g].bus)] += grid.gen_groups[g].unit_count * group_output[g];
  for (std::size_t l = 0; l < grid.loads.size(); ++l) inj[grid.bus_index(grid.loads[l].bus)] -= load_mw[l];
  return inj;
}

PowerFlow dc_power_flow(const GridCase& grid, std::span<const double> injections) {
  const std::size_t n = grid.buses.size();
  if (injections.size() != n)
    throw Error(ErrorKind::mismatch, "dc_power_flow", "injection vector has wrong length");
  const double total = std::accumulate(injections.begin(), injections.end(), 0.0);
  if (std::abs(total) > 1e-6)
    throw Error(ErrorKind::infeasible, "dc_power_flow",
                "injections are unbalanced by " + format_double(total) + " MW");

  const std::size_t slack = grid.slack_index();
  // Reduced susceptance matrix: slack row and column removed.
  std::vector<std::size_t> reduced(n, 0);
  for (std::size_t i = 0, k = 0; i < n; ++i) reduced[i] = (i == slack) ? n : k++;
  PowerFlow pf;
  pf.angles.assign(n, 0.0);
  if (n > 1) {
    Matrix b(n - 1, n - 1);
    for (const auto& l : grid.lines) {
      const auto a = reduced[grid.bus_index(l.from_bus)];
      const auto c = reduced[grid.bus_index(l.to_bus)];
      const double y = 1.0 / l.x;
      if (a < n) b(a, a) += y;
      if (c < n) b(c, c) += y;
      if (a < n && c < n) {
        b(a, c) -= y;
        b(c, a) -= y;
      }
    }
    std::vector<double> rhs(n - 1);
    for (std::size_t i = 0; i < n; ++i)
      if (i != slack) rhs[reduced[i]] = injections[i] / grid.base_mva;
    const auto theta = LuFactor(std::move(b)).solve(rhs);
    for (std::size_t i = 0; i < n; ++i)
      if (i != slack) pf.angles[i] = theta[reduced[i]];
  }
  pf.flows.reserve(grid.lines.size());
  for (const auto& l : grid.lines) {
    const double d = pf.angles[grid.bus_index(l.from_bus)] - pf.angles[grid.bus_index(l.to_bus)];
    pf.flows.push_back(grid.base_mva * d / l.x);
  }
  return pf;
}

double system_inertia(const GridCase& grid, std::span<const UnitId> online_units) {
  if (online_units.empty()) throw Error(ErrorKind::invariant, "system_inertia", "no online units");
  double sum = 0.0;
  for (const auto& u : online_units) {
    const auto& g = grid.gen_groups.at(u.group);
    if (u.index >= static_cast<std::size_t>(g.unit_count))
      throw Error(ErrorKind::invariant, "system_inertia", "unit index out of range");
    sum += g.H * g.rated_mva;
  }
  return sum / grid.base_mva;
}

OperatingPoint make_operating_point(const GridCase& grid, std::vector<double> group_output,
                                    std::vector<double> load_mw) {
  OperatingPoint op;
  const auto inj = bus_injections(grid, group_output, load_mw);
  auto pf = dc_power_flow(grid, inj);
  op.group_output = std::move(group_output);
  op.load_mw = std::move(load_mw);
  op.angles = std::move(pf.angles);
  op.flows = std::move(pf.flows);
  return op;
}

std::vector<double> default_dispatch(const GridCase& grid, std::span<const double> load_mw) {
  std::vector<double> out;
  for (const auto& g : grid.gen_groups) out.push_back(g.default_dispatch / g.unit_count);
  const auto s = grid.slack_group();
  const double load = std::accumulate(load_mw.begin(), load_mw.end(), 0.0);
  double others = 0.0;
  for (std::size_t g = 0; g < out.size(); ++g)
    if (g != s) others += out[g] * grid.gen_groups[g].unit_count;
  out[s] = (load - others) / grid.gen_groups[s].unit_count;
  return out;
}

std::vector<double> scaled_loads(const GridCase& grid, double scale) {
  auto loads = grid.nominal_loads();
  for (auto& l : loads) l *= scale;
  return loads;
}

const char* to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::generator_limit: return "generator_limit";
    case ViolationKind::nodal_balance: return "nodal_balance";
    case ViolationKind::flow_equation: return "flow_equation";
    case ViolationKind::line_limit: return "line_limit";
    case ViolationKind::slack_angle: return "slack_angle";
  }
  return "unknown";
}

std::vector<Violation> check_operating_point(const GridCase& grid, const OperatingPoint& op, double tol) {
  std::vector<Violation> out;
  if (op.group_output.size() != grid.gen_groups.size() || op.load_mw.size() != grid.loads.size() ||
      op.angles.size() != grid.buses.size() || op.flows.size() != grid.lines.size())
    throw Error(ErrorKind::mismatch, "check_operating_point", "operating point does not match the case");

  for (std::size_t g = 0; g < grid.gen_groups.size(); ++g) {
    const auto& gg = grid.gen_groups[g];
    const double p = op.group_output[g];
    const double excess = std::max(p - gg.p_max, gg.p_min - p);
    if (excess > tol)
      out.push_back({ViolationKind::generator_limit, "group[" + std::to_string(g) + "] bus " +
                                                         std::to_string(gg.bus),
                     excess});
  }

  auto balance = bus_injections(grid, op.group_output, op.load_mw);
  for (std::size_t k = 0; k < grid.lines.size(); ++k) {
    balance[grid.bus_index(grid.lines[k].from_bus)] -= op.flows[k];
    balance[grid.bus_index(grid.lines[k].to_bus)] += op.flows[k];
  }
  for (std::size_t b = 0; b < balance.size(); ++b)
    if (std::abs(balance[b]) > tol)
      out.push_back({ViolationKind::nodal_balance, "bus " + std::to_string(grid.buses[b].id),
                     std::abs(balance[b])});

  for (std::size_t k = 0; k < grid.lines.size(); ++k) {
    const auto& l = grid.lines[k];
    const std::string name = "line " + std::to_string(l.from_bus) + "-" + std::to_string(l.to_bus);
    const double expected =
        grid.base_mva * (op.angles[grid.bus_index(l.from_bus)] - op.angles[grid.bus_index(l.to_bus)]) / l.x;
    if (std::abs(expected - op.flows[k]) > tol)
      out.push_back({ViolationKind::flow_equation, name, std::abs(expected - op.flows[k])});
    if (std::abs(op.flows[k]) > l.limit + tol)
      out.push_back({ViolationKind::line_limit, name, std::abs(op.flows[k]) - l.limit});
  }

  const double slack_angle = op.angles[grid.slack_index()];
  if (std::abs(slack_angle) > 1e-9)
    out.push_back({ViolationKind::slack_angle, "bus " + std::to_string(grid.buses[grid.slack_index()].id),
                   std::abs(slack_angle)});
  return out;
}

}  // namespace fcopf
