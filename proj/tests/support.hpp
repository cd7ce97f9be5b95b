#pragma once

// Independent reference implementations and fixtures shared by the tests.
// Nothing here calls into the library code it is used to check.

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "fcopf/grid.hpp"
#include "fcopf/nn.hpp"
#include "fcopf/solver.hpp"

namespace oracle {

// Gaussian elimination with partial pivoting on a dense copy.
inline std::vector<double> dense_solve(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::fabs(a[i][k]) > std::fabs(a[p][k])) p = i;
    std::swap(a[k], a[p]);
    std::swap(b[k], b[p]);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = a[i][k] / a[k][k];
      for (std::size_t j = k; j < n; ++j) a[i][j] -= f * a[k][j];
      b[i] -= f * b[k];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= a[i][j] * x[j];
    x[i] = s / a[i][i];
  }
  return x;
}

struct LpResult {
  bool feasible = false;
  double objective = 0.0;
  std::vector<double> x;
};

// Two-phase dense tableau simplex with Bland's rule. Variables are shifted
// to [0, u - l] and their upper bounds become explicit rows.
inline LpResult tableau_simplex(const fcopf::LinearProgram& lp) {
  const std::size_t n = lp.variables();
  struct Row {
    std::vector<double> a;
    int rel;  // -1 le, 0 eq, 1 ge
    double b;
  };
  std::vector<Row> rows;
  for (const auto& c : lp.rows) {
    Row r{std::vector<double>(n, 0.0), c.rel == fcopf::Relation::le ? -1 : c.rel == fcopf::Relation::eq ? 0 : 1, c.rhs};
    for (const auto& t : c.terms) {
      r.a[t.var] += t.coef;
      r.b -= t.coef * lp.lower[t.var];
    }
    rows.push_back(r);
  }
  for (std::size_t j = 0; j < n; ++j) {
    Row r{std::vector<double>(n, 0.0), -1, lp.upper[j] - lp.lower[j]};
    r.a[j] = 1.0;
    rows.push_back(r);
  }
  for (auto& r : rows)
    if (r.b < 0) {
      for (auto& v : r.a) v = -v;
      r.b = -r.b;
      r.rel = -r.rel;
    }
  const std::size_t m = rows.size();
  std::size_t n_slack = 0, n_art = 0;
  for (const auto& r : rows) {
    if (r.rel != 0) ++n_slack;
    if (r.rel != -1) ++n_art;
  }
  const std::size_t cols = n + n_slack + n_art;
  std::vector<std::vector<double>> t(m + 1, std::vector<double>(cols + 1, 0.0));
  std::vector<std::size_t> basis(m);
  std::size_t s = n, art = n + n_slack;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) t[i][j] = rows[i].a[j];
    t[i][cols] = rows[i].b;
    if (rows[i].rel == -1) {
      t[i][s] = 1.0;
      basis[i] = s++;
    } else {
      if (rows[i].rel == 1) t[i][s++] = -1.0;
      t[i][art] = 1.0;
      basis[i] = art++;
    }
  }
  const double eps = 1e-10;
  auto pivot = [&](std::size_t r, std::size_t c) {
    const double p = t[r][c];
    for (auto& v : t[r]) v /= p;
    for (std::size_t i = 0; i <= m; ++i)
      if (i != r && t[i][c] != 0.0) {
        const double f = t[i][c];
        for (std::size_t j = 0; j <= cols; ++j) t[i][j] -= f * t[r][j];
      }
    basis[r] = c;
  };
  auto run = [&](const std::vector<double>& cost, std::size_t usable) {
    for (std::size_t j = 0; j <= cols; ++j) t[m][j] = j < cols ? cost[j] : 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double cb = cost[basis[i]];
      if (cb != 0.0)
        for (std::size_t j = 0; j <= cols; ++j) t[m][j] -= cb * t[i][j];
    }
    for (int iter = 0; iter < 100000; ++iter) {
      std::size_t enter = cols;
      for (std::size_t j = 0; j < usable; ++j)
        if (t[m][j] < -eps) {
          enter = j;
          break;
        }
      if (enter == cols) return true;
      std::size_t leave = m;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < m; ++i)
        if (t[i][enter] > eps) {
          const double ratio = t[i][cols] / t[i][enter];
          if (ratio < best - eps || (ratio <= best + eps && leave < m && basis[i] < basis[leave])) {
            best = ratio;
            leave = i;
          }
        }
      if (leave == m) return false;  // unbounded; cannot happen with bound rows
      pivot(leave, enter);
    }
    return false;
  };

  std::vector<double> phase1(cols, 0.0);
  for (std::size_t j = n + n_slack; j < cols; ++j) phase1[j] = 1.0;
  run(phase1, cols);
  LpResult res;
  if (-t[m][cols] > 1e-7) return res;
  for (std::size_t i = 0; i < m; ++i)
    if (basis[i] >= n + n_slack)
      for (std::size_t j = 0; j < n + n_slack; ++j)
        if (std::fabs(t[i][j]) > 1e-9) {
          pivot(i, j);
          break;
        }
  std::vector<double> phase2(cols, 0.0);
  for (std::size_t j = 0; j < n; ++j) phase2[j] = lp.cost[j];
  for (std::size_t i = 0; i < m; ++i)
    if (basis[i] >= n + n_slack)
      for (std::size_t j = 0; j <= cols; ++j) t[i][j] = j == basis[i] || j == cols ? t[i][j] : 0.0;
  run(phase2, n + n_slack);
  res.feasible = true;
  res.x.assign(n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    if (basis[i] < n) res.x[basis[i]] = t[i][cols];
  res.objective = lp.objective_offset;
  for (std::size_t j = 0; j < n; ++j) {
    res.x[j] += lp.lower[j];
    res.objective += lp.cost[j] * res.x[j];
  }
  return res;
}

// Every binary assignment, continuous part by the tableau oracle.
inline LpResult enumerate_milp(const fcopf::MilpProblem& p) {
  LpResult best;
  best.objective = std::numeric_limits<double>::infinity();
  const std::size_t k = p.binaries.size();
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << k); ++mask) {
    fcopf::LinearProgram lp = p.lp;
    for (std::size_t b = 0; b < k; ++b) lp.lower[p.binaries[b]] = lp.upper[p.binaries[b]] = (mask >> b) & 1u;
    const LpResult r = tableau_simplex(lp);
    if (r.feasible && r.objective < best.objective) best = r;
  }
  return best;
}

// Forward pass written out with plain loops, normalization included.
inline std::vector<double> forward_loop(const fcopf::MlpModel& m, const std::vector<double>& raw) {
  std::vector<double> a(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) a[i] = (raw[i] - m.input.shift[i]) / m.input.scale[i];
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    const auto& L = m.layers[l];
    std::vector<double> z(L.outputs());
    for (std::size_t j = 0; j < z.size(); ++j) {
      double s = L.b[j];
      for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * L.W(i, j);
      z[j] = (l + 1 < m.layers.size()) ? std::max(0.0, s) : s;
    }
    a = std::move(z);
  }
  for (std::size_t j = 0; j < a.size(); ++j) a[j] = a[j] * m.output.scale[j] + m.output.shift[j];
  return a;
}

inline double mse_loop(const fcopf::Matrix& p, const fcopf::Matrix& y) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.rows(); ++i)
    for (std::size_t j = 0; j < p.cols(); ++j) s += (p(i, j) - y(i, j)) * (p(i, j) - y(i, j));
  return s / static_cast<double>(p.rows());
}

}  // namespace oracle

namespace fixture {

inline const fcopf::GridCase& bundled() {
  static const fcopf::GridCase g = fcopf::load_case(fcopf::default_case_path());
  return g;
}

// Two buses, one line, one generator group at the slack bus.
inline std::string two_bus_json(double x = 0.1, double load = 10.0, int units = 1, double p_min = 0.0) {
  return R"({"system": {"base_mva": 100, "f0": 60},
    "buses": [{"id": 1, "slack": true}, {"id": 2}],
    "lines": [{"from_bus": 1, "to_bus": 2, "x": )" +
         std::to_string(x) + R"(, "limit": 500}],
    "gen_groups": [{"bus": 1, "unit_count": )" +
         std::to_string(units) + R"(, "p_min": )" + std::to_string(p_min) + R"(, "p_max": 200,
      "c2": 0.01, "c1": 10, "c0": 0, "H": 5, "rated_mva": 100, "droop": 0.05, "governor_tc": 0.5}],
    "loads": [{"bus": 2, "P_load": )" +
         std::to_string(load) + "}]}";
}

// Rows are built around a random interior point, so the LP is feasible.
inline fcopf::LinearProgram random_lp(fcopf::Rng& rng, std::size_t rows, std::size_t vars) {
  fcopf::LinearProgram lp;
  std::vector<double> x0;
  for (std::size_t j = 0; j < vars; ++j) {
    const double lo = rng.uniform(-5, 0), hi = lo + rng.uniform(1, 10);
    lp.add_variable("x" + std::to_string(j), lo, hi, rng.uniform(-3, 3));
    x0.push_back(rng.uniform(lo, hi));
  }
  for (std::size_t i = 0; i < rows; ++i) {
    std::vector<fcopf::Term> t;
    double act = 0;
    for (std::size_t j = 0; j < vars; ++j)
      if (rng.uniform(0, 1) < 0.6) {
        const double c = rng.uniform(-4, 4);
        t.push_back({j, c});
        act += c * x0[j];
      }
    const double pick = rng.uniform(0, 1);
    if (pick < 0.15)
      lp.add_row(t, fcopf::Relation::eq, act);
    else if (pick < 0.55)
      lp.add_row(t, fcopf::Relation::ge, act - rng.uniform(0, 2));
    else
      lp.add_row(t, fcopf::Relation::le, act + rng.uniform(0, 2));
  }
  return lp;
}

inline fcopf::MilpProblem random_milp(fcopf::Rng& rng) {
  fcopf::MilpProblem p;
  p.lp = random_lp(rng, 6, 4);
  for (std::size_t k = 0; k < 6; ++k) p.binaries.push_back(p.lp.add_variable("b" + std::to_string(k), 0, 1, rng.uniform(-5, 5)));
  // Couple the binaries into the rows; they may make some assignments infeasible.
  for (auto& row : p.lp.rows)
    for (auto b : p.binaries)
      if (rng.uniform(0, 1) < 0.4) row.terms.push_back({b, rng.uniform(-2, 2)});
  std::vector<fcopf::Term> budget;
  for (auto b : p.binaries) budget.push_back({b, 1.0});
  p.lp.add_row(budget, fcopf::Relation::le, 4);
  return p;
}

}  // namespace fixture
