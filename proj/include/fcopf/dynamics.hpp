#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "fcopf/grid.hpp"

namespace fcopf {

enum class MeasurementRule { disturbance_bus, coi };

const char* to_string(MeasurementRule rule);
MeasurementRule parse_measurement_rule(std::string_view text);

struct SimConfig {
  double dt = 1e-3;            // s, fixed RK4 step
  double horizon = 20.0;       // s
  double event_time = 1.0;     // s
  double rocof_window = 0.167; // s, 10 cycles at 60 Hz
  MeasurementRule rule = MeasurementRule::disturbance_bus;

  void validate() const;
};

/// Frequencies after a unit trip. Machines are generator groups: units in a
/// group are identical and share one rotor state, so one column per group.
struct FrequencyTrace {
  double dt = 0.0;
  double event_time = 0.0;
  std::size_t event_index = 0;
  std::vector<double> times;
  std::vector<std::size_t> machine_group;            // group index of each machine column
  std::vector<double> machine_inertia;               // post-event M = 2 H S n / f0, MW s/Hz
  std::vector<std::vector<double>> machine_freq;     // Hz
  std::vector<int> bus_ids;
  std::vector<std::vector<double>> bus_freq;         // Hz
  UnitId tripped;
  int disturbance_bus = 0;

  std::size_t bus_column(int bus) const;  // throws if absent
  std::vector<double> coi() const;        // inertia-weighted machine average
};

struct FrequencyMetrics {
  double rocof = 0.0;  // Hz/s, most negative windowed slope
  double nadir = 0.0;  // Hz
  int bus = 0;         // measurement bus; 0 for the centre of inertia
};

FrequencyTrace simulate_trip(const GridCase& grid, const OperatingPoint& op, UnitId tripped,
                             const SimConfig& config);

// Most negative (f(t + w) - f(t)) / w over t >= event time.
double windowed_rocof(std::span<const double> freq, double dt, std::size_t event_index, double window);
double measure_rocof(const FrequencyTrace& trace, int bus, double window);
double measure_nadir(const FrequencyTrace& trace, int bus);
FrequencyMetrics measure(const FrequencyTrace& trace, const SimConfig& config);

/// Swing-equation estimate at t = 0+: -f0 P_loss / (2 H_sys P_base), with
/// H_sys taken after the trip.
double analytic_initial_rocof(const GridCase& grid, const OperatingPoint& op, UnitId tripped);

// Average COI slope over [event, event + span].
double coi_initial_slope(const FrequencyTrace& trace, double span = 0.05);

/// Columnar text: header "time" then "bus<k>" per bus, one row per sample.
void write_trace(std::ostream& out, const FrequencyTrace& trace, std::size_t stride = 1);

}  // namespace fcopf
