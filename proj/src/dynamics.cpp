#include "fcopf/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include "fcopf/common.hpp"
#include "fcopf/linalg.hpp"

namespace fcopf {

const char* to_string(MeasurementRule rule) {
  return rule == MeasurementRule::coi ? "coi" : "disturbance_bus";
}

MeasurementRule parse_measurement_rule(std::string_view text) {
  if (text == "coi") return MeasurementRule::coi;
  if (text == "disturbance_bus") return MeasurementRule::disturbance_bus;
  throw Error(ErrorKind::schema, "measurement_rule", "unknown rule '" + std::string(text) + "'");
}

void SimConfig::validate() const {
  if (!(dt > 0)) throw Error(ErrorKind::invariant, "sim.dt", "must be positive");
  if (!(rocof_window > 0)) throw Error(ErrorKind::invariant, "sim.rocof_window", "must be positive");
  if (!(horizon >= 5 * rocof_window))
    throw Error(ErrorKind::invariant, "sim.horizon", "must be at least 5 RoCoF windows");
  if (!(event_time >= 0 && event_time < horizon))
    throw Error(ErrorKind::invariant, "sim.event_time", "must lie inside the horizon");
}

std::size_t FrequencyTrace::bus_column(int bus) const {
  for (std::size_t i = 0; i < bus_ids.size(); ++i)
    if (bus_ids[i] == bus) return i;
  throw Error(ErrorKind::invariant, "trace", "bus " + std::to_string(bus) + " not in trace");
}

std::vector<double> FrequencyTrace::coi() const {
  std::vector<double> out(times.size(), 0.0);
  double total = 0.0;
  for (double m : machine_inertia) total += m;
  for (std::size_t k = 0; k < machine_freq.size(); ++k)
    for (std::size_t t = 0; t < times.size(); ++t) out[t] += machine_inertia[k] * machine_freq[k][t];
  for (auto& v : out) v /= total;
  return out;
}

namespace {

// Machines connect to their buses through internal reactances; with machine
// angles held as sources and loads as constant power, the DC network gives
// electrical output as an affine function of machine angles:
//   P_e = K * delta + c   (MW, delta in rad)
struct ReducedNetwork {
  Matrix k;
  std::vector<double> c;
};

ReducedNetwork reduce_network(const GridCase& grid, std::span<const double> load_mw,
                              std::span<const std::size_t> groups, std::span<const int> online) {
  const std::size_t nb = grid.buses.size();
  const std::size_t nm = groups.size();
  Matrix b(nb, nb);
  for (const auto& l : grid.lines) {
    const auto i = grid.bus_index(l.from_bus);
    const auto j = grid.bus_index(l.to_bus);
    const double y = 1.0 / l.x;
    b(i, i) += y;
    b(j, j) += y;
    b(i, j) -= y;
    b(j, i) -= y;
  }
  std::vector<double> ym(nm);
  std::vector<std::size_t> at(nm);
  for (std::size_t m = 0; m < nm; ++m) {
    const auto& g = grid.gen_groups[groups[m]];
    const double x = g.xd * grid.base_mva / g.rated_mva / online[m];
    ym[m] = 1.0 / x;
    at[m] = grid.bus_index(g.bus);
    b(at[m], at[m]) += ym[m];
  }
  std::vector<double> p_bus(nb, 0.0);
  for (std::size_t l = 0; l < grid.loads.size(); ++l)
    p_bus[grid.bus_index(grid.loads[l].bus)] -= load_mw[l] / grid.base_mva;

  const Matrix binv = LuFactor(std::move(b)).inverse();
  ReducedNetwork net{Matrix(nm, nm), std::vector<double>(nm, 0.0)};
  // theta = Binv (p_bus + E delta), E(bus_m, m) = ym[m]
  for (std::size_t m = 0; m < nm; ++m) {
    const auto row = binv.row(at[m]);
    double load_term = 0.0;
    for (std::size_t i = 0; i < nb; ++i) load_term += row[i] * p_bus[i];
    net.c[m] = -grid.base_mva * ym[m] * load_term;
    for (std::size_t q = 0; q < nm; ++q) {
      const double coupling = row[at[q]] * ym[q];
      net.k(m, q) = grid.base_mva * ym[m] * ((m == q ? 1.0 : 0.0) - coupling);
    }
  }
  return net;
}

// Shortest-path reactance from every bus to every bus (Floyd-Warshall, tiny n).
Matrix electrical_distance(const GridCase& grid) {
  const std::size_t n = grid.buses.size();
  const double inf = std::numeric_limits<double>::infinity();
  Matrix d(n, n, inf);
  for (std::size_t i = 0; i < n; ++i) d(i, i) = 0.0;
  for (const auto& l : grid.lines) {
    const auto i = grid.bus_index(l.from_bus);
    const auto j = grid.bus_index(l.to_bus);
    d(i, j) = std::min(d(i, j), l.x);
    d(j, i) = std::min(d(j, i), l.x);
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) d(i, j) = std::min(d(i, j), d(i, k) + d(k, j));
  return d;
}

}  // namespace

FrequencyTrace simulate_trip(const GridCase& grid, const OperatingPoint& op, UnitId tripped,
                             const SimConfig& config) {
  config.validate();
  const auto violations = check_operating_point(grid, op);
  if (!violations.empty())
    throw Error(ErrorKind::infeasible, "simulate_trip",
                std::string("initial point violates ") + to_string(violations.front().kind) + " at " +
                    violations.front().element);
  if (tripped.group >= grid.gen_groups.size() ||
      tripped.index >= static_cast<std::size_t>(grid.gen_groups[tripped.group].unit_count))
    throw Error(ErrorKind::invariant, "simulate_trip", "tripped unit is not in the case");
  if (op.group_output[tripped.group] < 0)
    throw Error(ErrorKind::invariant, "simulate_trip", "tripped unit has negative output");

  const double f0 = grid.f0;
  const std::size_t ng = grid.gen_groups.size();

  // Pre-event: every group fully online.
  std::vector<std::size_t> pre_groups(ng);
  std::vector<int> pre_online(ng);
  for (std::size_t g = 0; g < ng; ++g) {
    pre_groups[g] = g;
    pre_online[g] = grid.gen_groups[g].unit_count;
  }
  const auto pre = reduce_network(grid, op.load_mw, pre_groups, pre_online);

  // Initial machine angles: P_e(delta) = P_m with delta_0 = 0.
  std::vector<double> delta0(ng, 0.0);
  if (ng > 1) {
    Matrix a(ng - 1, ng - 1);
    std::vector<double> rhs(ng - 1);
    for (std::size_t r = 1; r < ng; ++r) {
      rhs[r - 1] = grid.gen_groups[r].unit_count * op.group_output[r] - pre.c[r];
      for (std::size_t q = 1; q < ng; ++q) a(r - 1, q - 1) = pre.k(r, q);
    }
    const auto sol = LuFactor(std::move(a)).solve(rhs);
    for (std::size_t r = 1; r < ng; ++r) delta0[r] = sol[r - 1];
  }

  // Post-event machine set.
  std::vector<std::size_t> groups;
  std::vector<int> online;
  std::vector<double> angle0;
  for (std::size_t g = 0; g < ng; ++g) {
    const int n = grid.gen_groups[g].unit_count - (g == tripped.group ? 1 : 0);
    if (n <= 0) continue;
    groups.push_back(g);
    online.push_back(n);
    angle0.push_back(delta0[g]);
  }
  if (groups.empty()) throw Error(ErrorKind::invariant, "simulate_trip", "no machines remain after the trip");
  const std::size_t nm = groups.size();
  const auto post = reduce_network(grid, op.load_mw, groups, online);

  std::vector<double> inertia(nm), pm0(nm), gain(nm), tg(nm), lo(nm), hi(nm);
  for (std::size_t m = 0; m < nm; ++m) {
    const auto& g = grid.gen_groups[groups[m]];
    inertia[m] = 2.0 * g.H * g.rated_mva * online[m] / f0;
    pm0[m] = online[m] * op.group_output[groups[m]];
    gain[m] = g.rated_mva * online[m] / (g.droop * f0);  // MW per Hz
    tg[m] = g.governor_tc;
    lo[m] = g.p_min * online[m];
    hi[m] = g.p_max * online[m];
  }

  // Bus-frequency weights (rows sum to 1).
  const std::size_t nb = grid.buses.size();
  const Matrix dist = electrical_distance(grid);
  Matrix weight(nb, nm);
  for (std::size_t b = 0; b < nb; ++b) {
    bool local = false;
    for (std::size_t m = 0; m < nm; ++m)
      if (grid.bus_index(grid.gen_groups[groups[m]].bus) == b) {
        weight(b, m) = inertia[m];
        local = true;
      }
    if (!local)
      for (std::size_t m = 0; m < nm; ++m)
        weight(b, m) = inertia[m] / dist(b, grid.bus_index(grid.gen_groups[groups[m]].bus));
    double s = 0.0;
    for (std::size_t m = 0; m < nm; ++m) s += weight(b, m);
    for (std::size_t m = 0; m < nm; ++m) weight(b, m) /= s;
  }

  const std::size_t steps = static_cast<std::size_t>(std::llround(config.horizon / config.dt));
  const std::size_t event = static_cast<std::size_t>(std::llround(config.event_time / config.dt));

  FrequencyTrace trace;
  trace.dt = config.dt;
  trace.event_time = event * config.dt;
  trace.event_index = event;
  trace.tripped = tripped;
  trace.disturbance_bus = grid.gen_groups[tripped.group].bus;
  trace.machine_group = groups;
  trace.machine_inertia = inertia;
  trace.times.resize(steps + 1);
  for (std::size_t t = 0; t <= steps; ++t) trace.times[t] = t * config.dt;
  trace.machine_freq.assign(nm, std::vector<double>(steps + 1, f0));
  for (const auto& b : grid.buses) trace.bus_ids.push_back(b.id);
  trace.bus_freq.assign(nb, std::vector<double>(steps + 1, f0));

  // State layout: [delta (nm) | f (nm) | governor dPm (nm)].
  const std::size_t dim = 3 * nm;
  std::vector<double> state(dim, 0.0);
  for (std::size_t m = 0; m < nm; ++m) {
    state[m] = angle0[m];
    state[nm + m] = f0;
  }
  const double two_pi = 2.0 * std::numbers::pi;
  auto derivative = [&](const std::vector<double>& s, std::vector<double>& ds) {
    for (std::size_t m = 0; m < nm; ++m) {
      double pe = post.c[m];
      for (std::size_t q = 0; q < nm; ++q) pe += post.k(m, q) * s[q];
      const double f = s[nm + m];
      const double pm = std::clamp(pm0[m] + s[2 * nm + m], lo[m], hi[m]);
      ds[m] = two_pi * (f - f0);
      ds[nm + m] = (pm - pe) / inertia[m];
      ds[2 * nm + m] = (-(f - f0) * gain[m] - s[2 * nm + m]) / tg[m];
    }
  };

  std::vector<double> k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim);
  const double h = config.dt;
  for (std::size_t t = event; t < steps; ++t) {
    derivative(state, k1);
    for (std::size_t i = 0; i < dim; ++i) tmp[i] = state[i] + 0.5 * h * k1[i];
    derivative(tmp, k2);
    for (std::size_t i = 0; i < dim; ++i) tmp[i] = state[i] + 0.5 * h * k2[i];
    derivative(tmp, k3);
    for (std::size_t i = 0; i < dim; ++i) tmp[i] = state[i] + h * k3[i];
    derivative(tmp, k4);
    for (std::size_t i = 0; i < dim; ++i) state[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);

    for (std::size_t m = 0; m < nm; ++m) {
      const double f = state[nm + m];
      if (!(f > 50.0 && f < 70.0))
        throw Error(ErrorKind::numerical, "simulate_trip",
                    "integration blow-up: machine at bus " + std::to_string(grid.gen_groups[groups[m]].bus) +
                        " reached " + format_double(f) + " Hz at t=" + format_double((t + 1) * h));
      trace.machine_freq[m][t + 1] = f;
    }
    for (std::size_t b = 0; b < nb; ++b) {
      double f = 0.0;
      for (std::size_t m = 0; m < nm; ++m) f += weight(b, m) * state[nm + m];
      trace.bus_freq[b][t + 1] = f;
    }
  }
  return trace;
}

double windowed_rocof(std::span<const double> freq, double dt, std::size_t event_index, double window) {
  const auto w = static_cast<std::size_t>(std::llround(window / dt));
  if (w < 2) throw Error(ErrorKind::invariant, "measure_rocof", "window must span at least 2 samples");
  if (event_index + w >= freq.size())
    throw Error(ErrorKind::invariant, "measure_rocof", "window exceeds the post-event trace");
  const double span = w * dt;
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t t = event_index; t + w < freq.size(); ++t)
    worst = std::min(worst, (freq[t + w] - freq[t]) / span);
  return worst;
}

double measure_rocof(const FrequencyTrace& trace, int bus, double window) {
  return windowed_rocof(trace.bus_freq[trace.bus_column(bus)], trace.dt, trace.event_index, window);
}

double measure_nadir(const FrequencyTrace& trace, int bus) {
  const auto& f = trace.bus_freq[trace.bus_column(bus)];
  return *std::min_element(f.begin() + static_cast<std::ptrdiff_t>(trace.event_index), f.end());
}

FrequencyMetrics measure(const FrequencyTrace& trace, const SimConfig& config) {
  FrequencyMetrics m;
  if (config.rule == MeasurementRule::coi) {
    const auto f = trace.coi();
    m.rocof = windowed_rocof(f, trace.dt, trace.event_index, config.rocof_window);
    m.nadir = *std::min_element(f.begin() + static_cast<std::ptrdiff_t>(trace.event_index), f.end());
    m.bus = 0;
  } else {
    m.bus = trace.disturbance_bus;
    m.rocof = measure_rocof(trace, m.bus, config.rocof_window);
    m.nadir = measure_nadir(trace, m.bus);
  }
  return m;
}

double analytic_initial_rocof(const GridCase& grid, const OperatingPoint& op, UnitId tripped) {
  const auto remaining = units_except(grid, tripped);
  if (remaining.empty())
    throw Error(ErrorKind::invariant, "analytic_initial_rocof", "no online units remain after the trip");
  const double h_sys = system_inertia(grid, remaining);
  const double p_loss = op.group_output.at(tripped.group);
  return -grid.f0 * p_loss / (2.0 * h_sys * grid.base_mva);
}

double coi_initial_slope(const FrequencyTrace& trace, double span) {
  const auto f = trace.coi();
  const auto n = static_cast<std::size_t>(std::llround(span / trace.dt));
  const std::size_t e = trace.event_index;
  if (e + n >= f.size()) throw Error(ErrorKind::invariant, "coi_initial_slope", "span exceeds trace");
  return (f[e + n] - f[e]) / (n * trace.dt);
}

void write_trace(std::ostream& out, const FrequencyTrace& trace, std::size_t stride) {
  if (stride == 0) stride = 1;
  out << "time";
  for (int id : trace.bus_ids) out << "\tbus" << id;
  out << '\n';
  for (std::size_t t = 0; t < trace.times.size(); t += stride) {
    out << format_double(trace.times[t]);
    for (const auto& col : trace.bus_freq) out << '\t' << format_double(col[t]);
    out << '\n';
  }
}

}  // namespace fcopf
