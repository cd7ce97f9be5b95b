#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace fcopf {

enum class Relation { le, eq, ge };

struct Term {
  std::size_t var;
  double coef;
};

struct Constraint {
  std::vector<Term> terms;
  Relation rel = Relation::le;
  double rhs = 0.0;
  std::string name;
};

/// min c.x + offset subject to rows and finite variable bounds.
struct LinearProgram {
  std::vector<std::string> names;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<double> cost;
  std::vector<Constraint> rows;
  double objective_offset = 0.0;

  std::size_t variables() const { return names.size(); }
  std::size_t add_variable(std::string name, double lo, double hi, double c = 0.0);
  std::size_t add_row(std::vector<Term> terms, Relation rel, double rhs, std::string name = {});

  // Finite bounds, lo <= hi, no NaN, row indices in range.
  void validate() const;
  // Largest bound or row violation of `x`, in absolute units.
  double max_violation(const std::vector<double>& x) const;
  double objective(const std::vector<double>& x) const;
};

struct MilpProblem {
  LinearProgram lp;
  std::vector<std::size_t> binaries;
  // Optional rewrite of a node's LP solution into another point, e.g. one
  // with fewer fractional binaries. Receives the node's variable bounds. The
  // rewrite is kept only when it stays feasible and costs no more.
  std::function<void(std::vector<double>& values, const std::vector<double>& lower,
                     const std::vector<double>& upper)>
      repair;

  void validate() const;
};

enum class SolveStatus { optimal, infeasible, unbounded, gap_limit };
const char* to_string(SolveStatus s);

enum class VarStatus : unsigned char { basic, at_lower, at_upper };

/// Simplex basis over structural columns followed by one logical per row.
struct Basis {
  std::vector<std::size_t> basic;  // one column per row
  std::vector<VarStatus> status;   // per column
};

struct BoundEvent {
  std::size_t node = 0;
  double lower_bound = 0.0;
  double incumbent = 0.0;  // +inf until one exists
};

struct Solution {
  SolveStatus status = SolveStatus::infeasible;
  std::vector<double> values;
  double objective = 0.0;
  double bound = 0.0;  // proven lower bound
  double gap = 0.0;    // relative
  std::size_t nodes = 0;
  std::size_t iterations = 0;
  double wall_time = 0.0;  // s
  Basis basis;             // LP solves only
  std::vector<BoundEvent> trace;
};

struct LpOptions {
  double primal_tol = 1e-9;
  double dual_tol = 1e-9;
  double pivot_tol = 1e-9;
  double feasibility_check = 1e-6;
  std::size_t refactor_every = 300;
  std::size_t degenerate_before_bland = 1000;
  std::size_t max_iterations = 0;  // 0: derived from problem size
};

Solution solve_lp(const LinearProgram& lp, const LpOptions& options = {}, const Basis* start = nullptr);

// Starting basis for each branch-and-bound node.
enum class NodeStart {
  cold,    // all-logical basis
  parent,  // the parent's optimal basis
  last,    // whatever basis the previous node ended with
};

struct MilpOptions {
  double gap = 1e-6;
  double integrality_tol = 1e-6;
  std::size_t node_limit = 200000;
  NodeStart node_start = NodeStart::last;
  bool propagate = false;  // activity-based bound tightening at every node
  LpOptions lp;
};

Solution solve_milp(const MilpProblem& problem, const MilpOptions& options = {});

// LP relaxation (binaries relaxed to [0, 1]).
Solution solve_relaxation(const MilpProblem& problem, const LpOptions& options = {});

/// Convex piecewise-linear interpolation of c2 P^2 + c1 P + c0 on
/// K + 1 uniform breakpoints.
struct PwlCost {
  std::vector<double> p;
  std::vector<double> cost;

  std::size_t segments() const { return p.size() - 1; }
  double slope(std::size_t k) const { return (cost[k + 1] - cost[k]) / (p[k + 1] - p[k]); }
  double intercept(std::size_t k) const { return cost[k] - slope(k) * p[k]; }
  double operator()(double x) const;  // max over secants
  double error_bound(double c2) const;
};

PwlCost piecewise_linearize(double c2, double c1, double c0, double p_min, double p_max, std::size_t K);

/// CPLEX LP text format. Binaries go in a Binaries section.
void write_lp_format(std::ostream& out, const LinearProgram& lp, const std::vector<std::size_t>& binaries = {});

}  // namespace fcopf
