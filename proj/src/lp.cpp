#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "dual_simplex.hpp"
#include "fcopf/common.hpp"

namespace fcopf {

std::size_t LinearProgram::add_variable(std::string name, double lo, double hi, double c) {
  names.push_back(std::move(name));
  lower.push_back(lo);
  upper.push_back(hi);
  cost.push_back(c);
  return names.size() - 1;
}

std::size_t LinearProgram::add_row(std::vector<Term> terms, Relation rel, double rhs, std::string name) {
  rows.push_back({std::move(terms), rel, rhs, std::move(name)});
  return rows.size() - 1;
}

void LinearProgram::validate() const {
  const std::size_t n = variables();
  if (lower.size() != n || upper.size() != n || cost.size() != n)
    throw Error(ErrorKind::invariant, "lp", "variable arrays have different lengths");
  for (std::size_t j = 0; j < n; ++j) {
    if (!std::isfinite(lower[j]) || !std::isfinite(upper[j]))
      throw Error(ErrorKind::invariant, "lp.var[" + names[j] + "]", "bounds must be finite");
    if (lower[j] > upper[j])
      throw Error(ErrorKind::invariant, "lp.var[" + names[j] + "]", "lower bound exceeds upper bound");
    if (!std::isfinite(cost[j])) throw Error(ErrorKind::invariant, "lp.var[" + names[j] + "]", "non-finite cost");
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (!std::isfinite(r.rhs)) throw Error(ErrorKind::invariant, "lp.row[" + std::to_string(i) + "]", "non-finite rhs");
    for (const auto& t : r.terms) {
      if (t.var >= n) throw Error(ErrorKind::invariant, "lp.row[" + std::to_string(i) + "]", "unknown variable");
      if (!std::isfinite(t.coef))
        throw Error(ErrorKind::invariant, "lp.row[" + std::to_string(i) + "]", "non-finite coefficient");
    }
  }
}

double LinearProgram::max_violation(const std::vector<double>& x) const {
  double worst = 0.0;
  for (std::size_t j = 0; j < variables(); ++j) worst = std::max({worst, lower[j] - x[j], x[j] - upper[j]});
  for (const auto& r : rows) {
    double a = 0.0;
    for (const auto& t : r.terms) a += t.coef * x[t.var];
    if (r.rel != Relation::ge) worst = std::max(worst, a - r.rhs);
    if (r.rel != Relation::le) worst = std::max(worst, r.rhs - a);
  }
  return worst;
}

double LinearProgram::objective(const std::vector<double>& x) const {
  double s = objective_offset;
  for (std::size_t j = 0; j < variables(); ++j) s += cost[j] * x[j];
  return s;
}

void MilpProblem::validate() const {
  lp.validate();
  for (auto b : binaries) {
    if (b >= lp.variables()) throw Error(ErrorKind::invariant, "milp.binaries", "unknown variable");
    if (lp.lower[b] < 0.0 || lp.upper[b] > 1.0)
      throw Error(ErrorKind::invariant, "milp.var[" + lp.names[b] + "]", "binary bounds must lie within [0, 1]");
  }
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::unbounded: return "unbounded";
    case SolveStatus::gap_limit: return "gap_limit";
  }
  return "?";
}

namespace detail {

bool presolve_singletons(LinearProgram& lp) {
  std::vector<Constraint> kept;
  kept.reserve(lp.rows.size());
  for (auto& r : lp.rows) {
    std::size_t nz = 0;
    const Term* only = nullptr;
    for (const auto& t : r.terms)
      if (t.coef != 0.0) {
        ++nz;
        only = &t;
      }
    if (nz == 0) {
      const double tol = 1e-9 * (1.0 + std::abs(r.rhs));
      if ((r.rel != Relation::ge && r.rhs < -tol) || (r.rel != Relation::le && r.rhs > tol)) return false;
      continue;
    }
    if (nz > 1) {
      kept.push_back(std::move(r));
      continue;
    }
    const double v = r.rhs / only->coef;
    const bool upper_side = (r.rel == Relation::le) == (only->coef > 0);
    if (r.rel == Relation::eq || upper_side) lp.upper[only->var] = std::min(lp.upper[only->var], v);
    if (r.rel == Relation::eq || !upper_side) lp.lower[only->var] = std::max(lp.lower[only->var], v);
  }
  lp.rows = std::move(kept);
  for (std::size_t j = 0; j < lp.variables(); ++j) {
    if (lp.lower[j] > lp.upper[j]) {
      if (lp.lower[j] - lp.upper[j] > 1e-9 * (1.0 + std::abs(lp.upper[j]))) return false;
      lp.lower[j] = lp.upper[j];
    }
  }
  return true;
}

DualSimplex::DualSimplex(const LinearProgram& lp, const LpOptions& options) : lp_(lp), opt_(options) {
  m_ = lp.rows.size();
  n_ = lp.variables();
  // Column-major copy of A.
  std::vector<std::size_t> count(n_ + 1, 0);
  for (const auto& r : lp.rows)
    for (const auto& t : r.terms)
      if (t.coef != 0.0) ++count[t.var + 1];
  col_start_.assign(n_ + 1, 0);
  for (std::size_t j = 0; j < n_; ++j) col_start_[j + 1] = col_start_[j] + count[j + 1];
  col_row_.resize(col_start_[n_]);
  col_val_.resize(col_start_[n_]);
  std::vector<std::size_t> fill(col_start_.begin(), col_start_.end() - 1);
  for (std::size_t i = 0; i < m_; ++i)
    for (const auto& t : lp.rows[i].terms) {
      if (t.coef == 0.0) continue;
      col_row_[fill[t.var]] = i;
      col_val_[fill[t.var]++] = t.coef;
    }
  for (std::size_t j = 0; j < n_; ++j) {
    std::vector<std::pair<std::size_t, double>> e;
    for (auto k = col_start_[j]; k < col_start_[j + 1]; ++k) e.emplace_back(col_row_[k], col_val_[k]);
    std::sort(e.begin(), e.end(), [](auto& a, auto& b) { return a.first < b.first; });
    for (std::size_t a = 1; a < e.size(); ++a)
      if (e[a].first == e[a - 1].first)
        throw Error(ErrorKind::invariant, "lp.var[" + lp.names[j] + "]", "appears twice in one row");
    for (std::size_t k = 0; k < e.size(); ++k) {
      col_row_[col_start_[j] + k] = e[k].first;
      col_val_[col_start_[j] + k] = e[k].second;
    }
  }
  // Row-major copy.
  row_start_.assign(m_ + 1, 0);
  for (auto r : col_row_) ++row_start_[r + 1];
  for (std::size_t i = 0; i < m_; ++i) row_start_[i + 1] += row_start_[i];
  row_col_.resize(col_row_.size());
  row_val_.resize(col_row_.size());
  std::vector<std::size_t> next(row_start_.begin(), row_start_.end() - 1);
  for (std::size_t j = 0; j < n_; ++j)
    for (auto k = col_start_[j]; k < col_start_[j + 1]; ++k) {
      row_col_[next[col_row_[k]]] = j;
      row_val_[next[col_row_[k]]++] = col_val_[k];
    }

  lo_.assign(n_ + m_, 0.0);
  hi_.assign(n_ + m_, 0.0);
  cost_.assign(n_ + m_, 0.0);
  for (std::size_t j = 0; j < n_; ++j) {
    lo_[j] = lp.lower[j];
    hi_[j] = lp.upper[j];
    cost_[j] = lp.cost[j];
  }
  for (std::size_t i = 0; i < m_; ++i) {
    double act_lo = 0.0, act_hi = 0.0;
    for (const auto& t : lp.rows[i].terms) {
      act_lo += std::min(t.coef * lp.lower[t.var], t.coef * lp.upper[t.var]);
      act_hi += std::max(t.coef * lp.lower[t.var], t.coef * lp.upper[t.var]);
    }
    const double rhs = lp.rows[i].rhs;
    switch (lp.rows[i].rel) {
      case Relation::le: lo_[n_ + i] = std::min(act_lo, rhs); hi_[n_ + i] = rhs; break;
      case Relation::ge: lo_[n_ + i] = rhs; hi_[n_ + i] = std::max(act_hi, rhs); break;
      case Relation::eq: lo_[n_ + i] = hi_[n_ + i] = rhs; break;
    }
  }
  slot_.assign(n_, -1);
  rslot_.assign(m_, -1);
  inv_ = Matrix(std::min(n_, m_), std::min(n_, m_));
  status_.assign(n_ + m_, VarStatus::at_lower);
  x_.assign(n_ + m_, 0.0);
  d_.assign(n_ + m_, 0.0);
  if (opt_.max_iterations == 0) opt_.max_iterations = 50 * (n_ + m_) + 10000;
}

void DualSimplex::set_bounds(std::size_t j, double lo, double hi) {
  lo_[j] = lo;
  hi_[j] = hi;
}

double DualSimplex::column_dot(std::size_t j, const double* v) const {
  if (j >= n_) return -v[j - n_];
  double s = 0.0;
  for (auto k = col_start_[j]; k < col_start_[j + 1]; ++k) s += col_val_[k] * v[col_row_[k]];
  return s;
}

std::vector<std::size_t> DualSimplex::basic_columns() const {
  std::vector<std::size_t> b(S_.begin(), S_.end());
  for (std::size_t i = 0; i < m_; ++i)
    if (rslot_[i] < 0) b.push_back(n_ + i);
  std::sort(b.begin(), b.end());
  return b;
}

void DualSimplex::slack_basis() {
  S_.clear();
  R_.clear();
  std::fill(slot_.begin(), slot_.end(), -1);
  std::fill(rslot_.begin(), rslot_.end(), -1);
  factored_ = true;
}

bool DualSimplex::load_basis(const std::vector<std::size_t>& basic) {
  if (basic.size() != m_) return false;
  std::vector<char> seen(n_ + m_, 0);
  for (auto j : basic) {
    if (j >= n_ + m_ || seen[j]) return false;
    seen[j] = 1;
  }
  S_.clear();
  R_.clear();
  std::fill(slot_.begin(), slot_.end(), -1);
  std::fill(rslot_.begin(), rslot_.end(), -1);
  for (std::size_t j = 0; j < n_; ++j)
    if (seen[j]) {
      slot_[j] = static_cast<std::ptrdiff_t>(S_.size());
      S_.push_back(j);
    }
  for (std::size_t i = 0; i < m_; ++i)
    if (!seen[n_ + i]) {
      rslot_[i] = static_cast<std::ptrdiff_t>(R_.size());
      R_.push_back(i);
    }
  return S_.size() == R_.size() && refactor();
}

// B = [A_S | -I_L]. With R the rows not covered by basic logicals, only
// M = A[R, S] needs inverting; everything else about B^-1 follows from it.
bool DualSimplex::refactor() {
  const std::size_t k = S_.size();
  factored_ = false;
  if (k > 0) {
    Matrix M(k, k);
    for (std::size_t s = 0; s < k; ++s) {
      const std::size_t j = S_[s];
      for (auto e = col_start_[j]; e < col_start_[j + 1]; ++e)
        if (rslot_[col_row_[e]] >= 0) M(static_cast<std::size_t>(rslot_[col_row_[e]]), s) = col_val_[e];
    }
    Matrix minv;
    try {
      minv = LuFactor(std::move(M), 1e-11).inverse();
    } catch (const Error&) {
      return false;
    }
    for (std::size_t s = 0; s < k; ++s)
      for (std::size_t t = 0; t < k; ++t) inv_(s, t) = minv(s, t);
  }
  factored_ = true;
  return true;
}

// Row of B^-1 belonging to basic column p, as an m-vector.
void DualSimplex::btran(std::size_t p, std::vector<double>& rho) const {
  rho.assign(m_, 0.0);
  const std::size_t k = S_.size();
  if (p < n_) {
    const auto row = inv_.row(static_cast<std::size_t>(slot_[p]));
    for (std::size_t t = 0; t < k; ++t) rho[R_[t]] = row[t];
    return;
  }
  const std::size_t i = p - n_;
  for (auto e = row_start_[i]; e < row_start_[i + 1]; ++e) {
    const auto s = slot_[row_col_[e]];
    if (s < 0) continue;
    const double a = row_val_[e];
    const auto row = inv_.row(static_cast<std::size_t>(s));
    for (std::size_t t = 0; t < k; ++t) rho[R_[t]] += a * row[t];
  }
  rho[i] = -1.0;
}

// B^-1 times column q: us per structural slot, ul per row with a basic logical.
void DualSimplex::ftran(std::size_t q, std::vector<double>& us, std::vector<double>& ul) const {
  const std::size_t k = S_.size();
  us.assign(k, 0.0);
  ul.assign(m_, 0.0);
  if (q < n_) {
    for (auto e = col_start_[q]; e < col_start_[q + 1]; ++e) {
      const auto t = rslot_[col_row_[e]];
      if (t < 0) {
        ul[col_row_[e]] = -col_val_[e];
        continue;
      }
      const double a = col_val_[e];
      for (std::size_t s = 0; s < k; ++s) us[s] += a * inv_(s, static_cast<std::size_t>(t));
    }
  } else {
    const auto t = static_cast<std::size_t>(rslot_[q - n_]);
    for (std::size_t s = 0; s < k; ++s) us[s] = -inv_(s, t);
  }
  for (std::size_t i = 0; i < m_; ++i) {
    if (rslot_[i] >= 0) continue;
    double v = ul[i];
    for (auto e = row_start_[i]; e < row_start_[i + 1]; ++e) {
      const auto s = slot_[row_col_[e]];
      if (s >= 0) v += row_val_[e] * us[static_cast<std::size_t>(s)];
    }
    ul[i] = v;
  }
}

void DualSimplex::compute_duals() {
  const std::size_t k = S_.size();
  std::vector<double> pi(m_, 0.0);
  for (std::size_t s = 0; s < k; ++s) {
    const double c = cost_[S_[s]];
    if (c == 0.0) continue;
    const auto row = inv_.row(s);
    for (std::size_t t = 0; t < k; ++t) pi[R_[t]] += c * row[t];
  }
  for (std::size_t j = 0; j < n_ + m_; ++j) d_[j] = is_basic(j) ? 0.0 : cost_[j] - column_dot(j, pi.data());
}

void DualSimplex::compute_primal() {
  // B x_B = v with v = -N x_N.
  std::vector<double> v(m_, 0.0);
  for (std::size_t j = 0; j < n_ + m_; ++j) {
    if (is_basic(j)) continue;
    x_[j] = status_[j] == VarStatus::at_upper ? hi_[j] : lo_[j];
    if (x_[j] == 0.0) continue;
    if (j >= n_) {
      v[j - n_] += x_[j];
    } else {
      for (auto k = col_start_[j]; k < col_start_[j + 1]; ++k) v[col_row_[k]] -= col_val_[k] * x_[j];
    }
  }
  const std::size_t k = S_.size();
  for (std::size_t s = 0; s < k; ++s) {
    const auto row = inv_.row(s);
    double sum = 0.0;
    for (std::size_t t = 0; t < k; ++t) sum += row[t] * v[R_[t]];
    x_[S_[s]] = sum;
  }
  for (std::size_t i = 0; i < m_; ++i) {
    if (rslot_[i] >= 0) continue;
    double sum = -v[i];
    for (auto e = row_start_[i]; e < row_start_[i + 1]; ++e)
      if (slot_[row_col_[e]] >= 0) sum += row_val_[e] * x_[row_col_[e]];
    x_[n_ + i] = sum;
  }
}

void DualSimplex::place_nonbasic(const std::vector<VarStatus>* hint) {
  for (std::size_t j = 0; j < n_ + m_; ++j) {
    if (is_basic(j)) {
      status_[j] = VarStatus::basic;
      continue;
    }
    if (lo_[j] == hi_[j] || d_[j] > opt_.dual_tol) {
      status_[j] = VarStatus::at_lower;
    } else if (d_[j] < -opt_.dual_tol) {
      status_[j] = VarStatus::at_upper;
    } else if (hint && hint->size() == n_ + m_ && (*hint)[j] == VarStatus::at_upper) {
      status_[j] = VarStatus::at_upper;
    } else {
      status_[j] = VarStatus::at_lower;
    }
  }
}

// Basis change: q enters, p leaves. `us` is the structural part of B^-1 a_q,
// `rho` row p of B^-1.
void DualSimplex::update_inverse(std::size_t q, std::size_t p, double pivot, const std::vector<double>& us,
                                 const std::vector<double>& rho) {
  const std::size_t k = S_.size();
  if (q < n_ && p < n_) {
    // Column replacement in M.
    const auto s = static_cast<std::size_t>(slot_[p]);
    auto prow = inv_.row(s);
    for (std::size_t t = 0; t < k; ++t) prow[t] /= pivot;
    for (std::size_t r = 0; r < k; ++r) {
      if (r == s || us[r] == 0.0) continue;
      auto row = inv_.row(r);
      const double f = us[r];
      for (std::size_t t = 0; t < k; ++t) row[t] -= f * prow[t];
    }
    S_[s] = q;
    slot_[q] = static_cast<std::ptrdiff_t>(s);
    slot_[p] = -1;
  } else if (q < n_) {
    // M grows by row i (the leaving logical's) and column q.
    const std::size_t i = p - n_;
    const double sigma = -pivot;
    std::vector<double> v(k);
    for (std::size_t t = 0; t < k; ++t) v[t] = rho[R_[t]];
    for (std::size_t s = 0; s < k; ++s) {
      auto row = inv_.row(s);
      const double f = us[s] / sigma;
      if (f != 0.0)
        for (std::size_t t = 0; t < k; ++t) row[t] += f * v[t];
      row[k] = -f;
    }
    auto last = inv_.row(k);
    for (std::size_t t = 0; t < k; ++t) last[t] = -v[t] / sigma;
    last[k] = 1.0 / sigma;
    slot_[q] = static_cast<std::ptrdiff_t>(k);
    S_.push_back(q);
    rslot_[i] = static_cast<std::ptrdiff_t>(k);
    R_.push_back(i);
  } else if (p < n_) {
    // M loses column p and row i (the entering logical's): Schur complement.
    const std::size_t i = q - n_;
    const auto s = static_cast<std::size_t>(slot_[p]);
    const auto t = static_cast<std::size_t>(rslot_[i]);
    const double piv = inv_(s, t);
    const std::vector<double> srow(inv_.row(s).begin(), inv_.row(s).begin() + static_cast<std::ptrdiff_t>(k));
    for (std::size_t r = 0; r < k; ++r) {
      if (r == s) continue;
      auto row = inv_.row(r);
      const double f = row[t] / piv;
      if (f == 0.0) continue;
      for (std::size_t c = 0; c < k; ++c) row[c] -= f * srow[c];
    }
    const std::size_t back = k - 1;
    if (s != back) {
      auto dst = inv_.row(s);
      const auto src = inv_.row(back);
      std::copy(src.begin(), src.begin() + static_cast<std::ptrdiff_t>(k), dst.begin());
      S_[s] = S_[back];
      slot_[S_[s]] = static_cast<std::ptrdiff_t>(s);
    }
    if (t != back) {
      for (std::size_t r = 0; r < back; ++r) inv_(r, t) = inv_(r, back);
      R_[t] = R_[back];
      rslot_[R_[t]] = static_cast<std::ptrdiff_t>(t);
    }
    S_.pop_back();
    R_.pop_back();
    slot_[p] = -1;
    rslot_[i] = -1;
  } else {
    // Row replacement in M: row i (entering logical) becomes row i2.
    const std::size_t i = q - n_, i2 = p - n_;
    const auto t = static_cast<std::size_t>(rslot_[i]);
    std::vector<double> v(k);
    for (std::size_t c = 0; c < k; ++c) v[c] = rho[R_[c]];
    const double vt = v[t];
    for (std::size_t r = 0; r < k; ++r) {
      auto row = inv_.row(r);
      const double c = row[t] / vt;
      if (c != 0.0)
        for (std::size_t c2 = 0; c2 < k; ++c2) row[c2] -= c * v[c2];
      row[t] = c;
    }
    R_[t] = i2;
    rslot_[i2] = static_cast<std::ptrdiff_t>(t);
    rslot_[i] = -1;
  }
}

double DualSimplex::infeasibility(std::size_t j, double value) const {
  const double tl = opt_.primal_tol * (1.0 + std::abs(lo_[j]));
  const double tu = opt_.primal_tol * (1.0 + std::abs(hi_[j]));
  if (value < lo_[j] - tl) return lo_[j] - value;
  if (value > hi_[j] + tu) return value - hi_[j];
  return 0.0;
}

double DualSimplex::max_row_violation() const {
  double worst = 0.0;
  for (std::size_t j = 0; j < n_; ++j) worst = std::max({worst, lo_[j] - x_[j], x_[j] - hi_[j]});
  for (std::size_t i = 0; i < m_; ++i) {
    const auto& r = lp_.rows[i];
    double a = 0.0;
    for (const auto& t : r.terms) a += t.coef * x_[t.var];
    if (r.rel != Relation::ge) worst = std::max(worst, a - r.rhs);
    if (r.rel != Relation::le) worst = std::max(worst, r.rhs - a);
  }
  return worst;
}

// Row rho of B^-1 gives x_p = -sum over nonbasic j of (rho.a_j) x_j. If rho
// is accurate on the basic columns and the range of that sum over the
// nonbasic boxes misses the box of p, no feasible point exists.
bool DualSimplex::row_proves_infeasible(std::size_t p, const std::vector<double>& rho) const {
  double residual = 0.0, basic_scale = 0.0;
  for (std::size_t j = 0; j < n_ + m_; ++j) {
    if (!is_basic(j)) continue;
    residual = std::max(residual, std::abs(column_dot(j, rho.data()) - (j == p ? 1.0 : 0.0)));
    if (j != p) basic_scale += std::max(std::abs(lo_[j]), std::abs(hi_[j]));
  }
  if (residual > 1e-9) return false;
  double low = 0.0, high = 0.0, scale = 0.0;
  for (std::size_t j = 0; j < n_ + m_; ++j) {
    if (is_basic(j)) continue;
    const double a = -column_dot(j, rho.data());
    low += std::min(a * lo_[j], a * hi_[j]);
    high += std::max(a * lo_[j], a * hi_[j]);
    scale += std::abs(a) * std::max(std::abs(lo_[j]), std::abs(hi_[j]));
  }
  const double tol = 1e-7 * (1.0 + scale) + residual * basic_scale;
  return high < lo_[p] - tol || low > hi_[p] + tol;
}

Solution DualSimplex::solve(const Basis* start, bool keep_current) {
  Solution sol;
  for (std::size_t j = 0; j < n_ + m_; ++j)
    if (lo_[j] > hi_[j]) {
      sol.status = SolveStatus::infeasible;
      return sol;
    }

  const bool reuse = factored_ && (keep_current || (start && start->basic == basic_columns()));
  if (!reuse && !(start && load_basis(start->basic))) slack_basis();
  compute_duals();
  if (keep_current && reuse) {
    const std::vector<VarStatus> current = status_;
    place_nonbasic(&current);
  } else {
    place_nonbasic(start ? &start->status : nullptr);
  }
  compute_primal();

  std::size_t since_refactor = 0, degenerate = 0, verify_rounds = 0;
  bool bland = false;
  std::vector<double> alpha(n_ + m_, 0.0), rho, us, ul;
  std::vector<std::size_t> candidates;

  auto restore = [&] {
    if (!refactor()) slack_basis();
    compute_duals();
    for (std::size_t j = 0; j < n_ + m_; ++j) {
      if (is_basic(j)) {
        status_[j] = VarStatus::basic;
      } else if (status_[j] == VarStatus::basic || lo_[j] == hi_[j]) {
        status_[j] = d_[j] < -opt_.dual_tol && lo_[j] != hi_[j] ? VarStatus::at_upper : VarStatus::at_lower;
      } else if (status_[j] == VarStatus::at_lower && d_[j] < -opt_.dual_tol) {
        status_[j] = VarStatus::at_upper;
      } else if (status_[j] == VarStatus::at_upper && d_[j] > opt_.dual_tol) {
        status_[j] = VarStatus::at_lower;
      }
    }
    compute_primal();
    since_refactor = 0;
  };

  while (true) {
    if (sol.iterations >= opt_.max_iterations)
      throw Error(ErrorKind::numerical, "dual simplex",
                  "no convergence after " + std::to_string(sol.iterations) + " iterations (" + std::to_string(m_) +
                      " rows, " + std::to_string(n_) + " columns)");
    if (since_refactor >= opt_.refactor_every) restore();

    // Leaving column.
    std::size_t p = n_ + m_;
    double worst = 0.0;
    auto consider = [&](std::size_t j) {
      const double inf = infeasibility(j, x_[j]);
      if (inf <= 0.0) return;
      if (bland) {
        if (p == n_ + m_ || j < p) p = j;
      } else if (inf > worst) {
        worst = inf;
        p = j;
      }
    };
    for (auto j : S_) consider(j);
    for (std::size_t i = 0; i < m_; ++i)
      if (rslot_[i] < 0) consider(n_ + i);

    if (p == n_ + m_) {
      const double viol = max_row_violation();
      if (viol <= opt_.feasibility_check) break;
      if (++verify_rounds > 3)
        throw Error(ErrorKind::numerical, "dual simplex",
                    "final point violates constraints by " + format_double(viol) + " after refactorization");
      restore();
      continue;
    }

    const double target = x_[p] < lo_[p] ? lo_[p] : hi_[p];
    const double sgn = x_[p] < lo_[p] ? 1.0 : -1.0;
    btran(p, rho);

    candidates.clear();
    for (std::size_t j = 0; j < n_ + m_; ++j) {
      if (is_basic(j) || lo_[j] == hi_[j]) continue;
      const double a = column_dot(j, rho.data());
      alpha[j] = a;
      if (std::abs(a) <= opt_.pivot_tol) continue;
      const bool at_lower = status_[j] == VarStatus::at_lower;
      if ((at_lower && sgn * a < 0) || (!at_lower && sgn * a > 0)) candidates.push_back(j);
    }
    auto slack_of = [&](std::size_t j) {
      return status_[j] == VarStatus::at_lower ? std::max(d_[j], 0.0) : std::max(-d_[j], 0.0);
    };

    if (candidates.empty()) {
      if (since_refactor > 0 && !row_proves_infeasible(p, rho)) {
        restore();
        continue;
      }
      sol.status = SolveStatus::infeasible;
      return sol;
    }

    std::size_t q = n_ + m_;
    if (bland) {
      double best = std::numeric_limits<double>::infinity();
      for (auto j : candidates) {
        const double ratio = slack_of(j) / std::abs(alpha[j]);
        if (ratio < best - 1e-12) {
          best = ratio;
          q = j;
        }
      }
    } else {
      double bound = std::numeric_limits<double>::infinity();
      for (auto j : candidates) bound = std::min(bound, (slack_of(j) + opt_.dual_tol) / std::abs(alpha[j]));
      double best_pivot = 0.0;
      for (auto j : candidates) {
        if (slack_of(j) / std::abs(alpha[j]) > bound) continue;
        if (std::abs(alpha[j]) > best_pivot) {
          best_pivot = std::abs(alpha[j]);
          q = j;
        }
      }
    }

    ftran(q, us, ul);
    const double pivot = p < n_ ? us[static_cast<std::size_t>(slot_[p])] : ul[p - n_];
    if (std::abs(pivot - alpha[q]) > 1e-7 * (1.0 + std::abs(pivot)) || std::abs(pivot) <= opt_.pivot_tol) {
      if (since_refactor > 0) {
        restore();
        continue;
      }
      throw Error(ErrorKind::numerical, "dual simplex",
                  "unstable pivot " + format_double(pivot) + " vs row estimate " + format_double(alpha[q]));
    }

    const double theta = d_[q] / alpha[q];
    for (std::size_t j = 0; j < n_ + m_; ++j)
      if (!is_basic(j) && lo_[j] != hi_[j]) d_[j] -= theta * alpha[j];
    d_[q] = 0.0;
    d_[p] = -theta;

    const double gain = std::abs(theta * (x_[p] - target));
    const double step = (x_[p] - target) / pivot;
    for (std::size_t s = 0; s < S_.size(); ++s) x_[S_[s]] -= step * us[s];
    for (std::size_t i = 0; i < m_; ++i)
      if (rslot_[i] < 0) x_[n_ + i] -= step * ul[i];
    x_[q] += step;
    x_[p] = target;

    update_inverse(q, p, pivot, us, rho);
    status_[q] = VarStatus::basic;
    status_[p] = target == lo_[p] ? VarStatus::at_lower : VarStatus::at_upper;

    ++sol.iterations;
    ++since_refactor;
    if (gain <= 1e-9) {
      if (++degenerate >= opt_.degenerate_before_bland) bland = true;
    } else {
      degenerate = 0;
    }
    // Long runs are treated as stalled even when each step makes a sliver of progress.
    if (sol.iterations >= opt_.max_iterations / 5) bland = true;
  }

  sol.status = SolveStatus::optimal;
  sol.values.assign(x_.begin(), x_.begin() + static_cast<std::ptrdiff_t>(n_));
  sol.objective = lp_.objective(sol.values);
  sol.bound = sol.objective;
  sol.basis.basic = basic_columns();
  sol.basis.status = status_;
  sol.nodes = 1;
  return sol;
}

}  // namespace detail

Solution solve_lp(const LinearProgram& lp, const LpOptions& options, const Basis* start) {
  const auto t0 = std::chrono::steady_clock::now();
  lp.validate();
  LinearProgram work = lp;
  Solution sol;
  if (detail::presolve_singletons(work)) {
    detail::DualSimplex ds(work, options);
    sol = ds.solve(start);
  }
  sol.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return sol;
}

}  // namespace fcopf
