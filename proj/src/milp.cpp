#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <queue>

#include "dual_simplex.hpp"
#include "fcopf/common.hpp"

namespace fcopf {

namespace {

struct Node {
  double bound;
  std::size_t id;
  std::vector<std::pair<std::size_t, double>> fixed;
  std::shared_ptr<const Basis> basis;
};

// Lowest bound first; among equal bounds the most recently created node.
struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    return a.id < b.id;
  }
};

double relative_gap(double incumbent, double bound) {
  return (incumbent - bound) / std::max(1.0, std::abs(incumbent));
}

bool feasible_within(const LinearProgram& lp, const std::vector<double>& lo, const std::vector<double>& hi,
                     const std::vector<double>& x, double tol) {
  for (std::size_t j = 0; j < x.size(); ++j)
    if (x[j] < lo[j] - tol || x[j] > hi[j] + tol) return false;
  return lp.max_violation(x) <= tol;
}

// Activity-based bound tightening: each row bounds every variable in it by
// the extreme activity of the others. Binary bounds are rounded. Returns
// false when a domain empties.
bool propagate(const LinearProgram& lp, const std::vector<char>& binary, std::vector<double>& lo,
               std::vector<double>& hi) {
  constexpr int passes = 8;
  for (int pass = 0; pass < passes; ++pass) {
    bool changed = false;
    for (const auto& row : lp.rows) {
      double amin = 0.0, amax = 0.0;
      for (const auto& t : row.terms) {
        amin += std::min(t.coef * lo[t.var], t.coef * hi[t.var]);
        amax += std::max(t.coef * lo[t.var], t.coef * hi[t.var]);
      }
      const double tol = 1e-9 * (1.0 + std::abs(row.rhs) + std::max(std::abs(amin), std::abs(amax)));
      if (row.rel != Relation::ge && amin > row.rhs + tol) return false;
      if (row.rel != Relation::le && amax < row.rhs - tol) return false;
      for (const auto& t : row.terms) {
        const std::size_t j = t.var;
        const double c = t.coef;
        if (c == 0.0 || lo[j] == hi[j]) continue;
        double new_lo = lo[j], new_hi = hi[j];
        if (row.rel != Relation::ge) {
          const double v = (row.rhs - (amin - std::min(c * lo[j], c * hi[j]))) / c;
          (c > 0 ? new_hi : new_lo) = v;
        }
        if (row.rel != Relation::le) {
          const double v = (row.rhs - (amax - std::max(c * lo[j], c * hi[j]))) / c;
          (c > 0 ? new_lo : new_hi) = v;
        }
        if (binary[j]) {
          new_lo = new_lo > 1e-6 ? 1.0 : lo[j];
          new_hi = new_hi < 1.0 - 1e-6 ? 0.0 : hi[j];
        } else {
          const double width = hi[j] - lo[j];
          new_lo -= 1e-7 * (1.0 + std::abs(new_lo));
          new_hi += 1e-7 * (1.0 + std::abs(new_hi));
          if (new_lo < lo[j] + 1e-3 * width) new_lo = lo[j];
          if (new_hi > hi[j] - 1e-3 * width) new_hi = hi[j];
        }
        new_lo = std::max(new_lo, lo[j]);
        new_hi = std::min(new_hi, hi[j]);
        if (new_lo > new_hi) {
          if (new_lo - new_hi > 1e-9 * (1.0 + std::abs(new_hi)) || binary[j]) return false;
          new_lo = new_hi;
        }
        if (new_lo != lo[j] || new_hi != hi[j]) {
          lo[j] = new_lo;
          hi[j] = new_hi;
          changed = true;
        }
      }
    }
    if (!changed) break;
  }
  return true;
}

}  // namespace

Solution solve_relaxation(const MilpProblem& problem, const LpOptions& options) {
  problem.validate();
  return solve_lp(problem.lp, options);
}

Solution solve_milp(const MilpProblem& problem, const MilpOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  problem.validate();
  constexpr double inf = std::numeric_limits<double>::infinity();

  Solution best;
  best.status = SolveStatus::infeasible;
  best.objective = inf;
  best.bound = inf;

  LinearProgram lp = problem.lp;
  if (!detail::presolve_singletons(lp)) {
    best.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return best;
  }
  std::vector<std::size_t> binaries = problem.binaries;
  std::sort(binaries.begin(), binaries.end());
  binaries.erase(std::unique(binaries.begin(), binaries.end()), binaries.end());
  std::vector<char> is_binary(lp.variables(), 0);
  for (auto b : binaries) {
    is_binary[b] = 1;
    lp.lower[b] = std::ceil(lp.lower[b] - options.integrality_tol);
    lp.upper[b] = std::floor(lp.upper[b] + options.integrality_tol);
    if (lp.lower[b] > lp.upper[b]) {
      best.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      return best;
    }
  }
  std::vector<double> lo, hi;

  detail::DualSimplex ds(lp, options.lp);
  std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
  open.push({-inf, 0, {}, nullptr});
  std::size_t next_id = 1;
  double incumbent = inf;
  bool hit_limit = false;

  while (!open.empty()) {
    Node node = open.top();
    open.pop();
    if (incumbent < inf && relative_gap(incumbent, node.bound) <= options.gap) continue;
    if (best.nodes >= options.node_limit) {
      open.push(std::move(node));
      hit_limit = true;
      break;
    }
    ++best.nodes;

    lo = lp.lower;
    hi = lp.upper;
    bool clash = false;
    for (const auto& [var, value] : node.fixed) {
      clash = clash || value < lo[var] || value > hi[var];
      lo[var] = hi[var] = value;
    }
    if (clash) {
      best.trace.push_back({best.nodes, std::min(open.empty() ? inf : open.top().bound, incumbent), incumbent});
      continue;
    }
    if (options.propagate && !propagate(lp, is_binary, lo, hi)) {
      best.trace.push_back({best.nodes, std::min(open.empty() ? inf : open.top().bound, incumbent), incumbent});
      continue;
    }
    for (std::size_t j = 0; j < lp.variables(); ++j) ds.set_bounds(j, lo[j], hi[j]);
    Solution res = ds.solve(options.node_start == NodeStart::parent ? node.basis.get() : nullptr,
                            options.node_start == NodeStart::last && best.nodes > 1);
    best.iterations += res.iterations;

    const double open_min = open.empty() ? inf : open.top().bound;
    if (res.status != SolveStatus::optimal) {
      best.trace.push_back({best.nodes, std::min(open_min, incumbent), incumbent});
      continue;
    }
    if (problem.repair) {
      std::vector<double> alt = res.values;
      problem.repair(alt, lo, hi);
      if (feasible_within(lp, lo, hi, alt, options.lp.feasibility_check) &&
          lp.objective(alt) <= res.objective + 1e-9 * (1.0 + std::abs(res.objective))) {
        res.values = std::move(alt);
      }
    }
    const double obj = std::max(res.objective, node.bound);
    best.trace.push_back({best.nodes, std::min({obj, open_min, incumbent}), incumbent});
    if (incumbent < inf && relative_gap(incumbent, obj) <= options.gap) continue;

    std::size_t branch = lp.variables();
    double most = options.integrality_tol;
    for (auto b : binaries) {
      const double v = res.values[b];
      const double frac = std::abs(v - std::round(v));
      if (frac > most + 1e-12) {
        most = frac;
        branch = b;
      }
    }
    if (branch == lp.variables()) {
      incumbent = res.objective;
      best.values = res.values;
      best.objective = res.objective;
      continue;
    }
    auto basis = std::make_shared<const Basis>(std::move(res.basis));
    for (double v : {0.0, 1.0}) {
      Node child{obj, next_id++, node.fixed, basis};
      child.fixed.emplace_back(branch, v);
      open.push(std::move(child));
    }
  }

  if (incumbent < inf) {
    best.status = hit_limit ? SolveStatus::gap_limit : SolveStatus::optimal;
    const double open_min = open.empty() ? inf : open.top().bound;
    best.bound = std::min(incumbent, open_min);
    best.gap = relative_gap(incumbent, best.bound);
  } else {
    best.status = hit_limit ? SolveStatus::gap_limit : SolveStatus::infeasible;
    best.bound = open.empty() ? inf : open.top().bound;
  }
  best.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return best;
}

}  // namespace fcopf
