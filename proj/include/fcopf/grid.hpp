#pragma once

#include <compare>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fcopf {

struct Bus {
  int id = 0;
  bool slack = false;
};

struct Line {
  int from_bus = 0;
  int to_bus = 0;
  double x = 0.0;      // pu on base_mva
  double limit = 0.0;  // MW, symmetric
};

/// A set of identical units at one bus. Every unit in the group carries the
/// same output, so the OPF has a single per-unit output variable per group.
struct GenGroup {
  int bus = 0;
  int unit_count = 1;
  double p_min = 0.0;  // MW per unit
  double p_max = 0.0;
  double c2 = 0.0;  // $/MW^2h
  double c1 = 0.0;  // $/MWh
  double c0 = 0.0;  // $/h
  double H = 0.0;          // s, on rated_mva
  double rated_mva = 0.0;  // per unit
  double droop = 0.05;        // pu
  double governor_tc = 0.5;   // s
  double xd = 0.3;            // internal reactance, pu on rated_mva
  double default_dispatch = 0.0;  // MW, whole group, reference operating point
};

struct Load {
  int bus = 0;
  double p = 0.0;  // MW
};

/// Immutable network description. Units are addressed by (group, index);
/// the display name of unit k at bus b is "G<b><k+1>".
struct GridCase {
  double base_mva = 100.0;
  double f0 = 60.0;
  std::vector<Bus> buses;
  std::vector<Line> lines;
  std::vector<GenGroup> gen_groups;
  std::vector<Load> loads;
  std::string fingerprint;  // hash of the canonical case document

  std::size_t bus_index(int id) const;  // throws on unknown id
  std::size_t slack_index() const;
  std::size_t slack_group() const;      // first group at the slack bus
  std::vector<double> nominal_loads() const;
};

struct UnitId {
  std::size_t group = 0;
  std::size_t index = 0;
  auto operator<=>(const UnitId&) const = default;
};

std::string unit_name(const GridCase& grid, UnitId unit);
UnitId parse_unit(const GridCase& grid, std::string_view name);
std::vector<UnitId> all_units(const GridCase& grid);
std::vector<UnitId> units_except(const GridCase& grid, UnitId removed);
// One unit per generator bus; the N-1 set used throughout.
std::vector<UnitId> credible_contingencies(const GridCase& grid);

GridCase parse_case(std::string_view text);
GridCase load_case(const std::string& path);
std::string default_case_path();

struct PowerFlow {
  std::vector<double> angles;  // rad per bus, slack = 0
  std::vector<double> flows;   // MW per line, from -> to
};

// Net injection per bus (generation minus load), MW.
std::vector<double> bus_injections(const GridCase& grid, std::span<const double> group_output,
                                   std::span<const double> load_mw);

PowerFlow dc_power_flow(const GridCase& grid, std::span<const double> injections);

/// Equivalent inertia in seconds on base_mva: sum of H * rated_mva / base.
double system_inertia(const GridCase& grid, std::span<const UnitId> online_units);

struct OperatingPoint {
  std::vector<double> group_output;  // MW per unit of each group
  std::vector<double> load_mw;       // MW per load
  std::vector<double> angles;
  std::vector<double> flows;
};

OperatingPoint make_operating_point(const GridCase& grid, std::vector<double> group_output,
                                    std::vector<double> load_mw);

/// Group outputs at the case's reference dispatch, with the slack group
/// re-balanced so generation equals `load_mw` exactly.
std::vector<double> default_dispatch(const GridCase& grid, std::span<const double> load_mw);

std::vector<double> scaled_loads(const GridCase& grid, double scale);

enum class ViolationKind { generator_limit, nodal_balance, flow_equation, line_limit, slack_angle };

struct Violation {
  ViolationKind kind;
  std::string element;  // "group[1]", "bus 5", "line 4-5"
  double magnitude;     // MW (rad for slack_angle)
};

const char* to_string(ViolationKind kind);

std::vector<Violation> check_operating_point(const GridCase& grid, const OperatingPoint& op,
                                             double tol = 1e-6);

}  // namespace fcopf
