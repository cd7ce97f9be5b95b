#pragma once

#include "fcopf/linalg.hpp"
#include "fcopf/solver.hpp"

namespace fcopf::detail {

// Singleton rows become variable bounds and are dropped. Returns false when
// some bound pair crosses.
bool presolve_singletons(LinearProgram& lp);

/// Bounded dual simplex on [A -I](x, s) = 0 with every column boxed. Logical
/// bounds come from the row sense plus the activity range implied by the
/// variable bounds, so any basis can be made dual feasible by placing each
/// nonbasic column at the bound matching the sign of its reduced cost.
class DualSimplex {
 public:
  DualSimplex(const LinearProgram& lp, const LpOptions& options);

  void set_bounds(std::size_t j, double lo, double hi);
  double lower(std::size_t j) const { return lo_[j]; }
  double upper(std::size_t j) const { return hi_[j]; }

  // Values are structural only. Status is optimal or infeasible. With
  // `keep_current` the factorization left by the previous solve is reused.
  Solution solve(const Basis* start, bool keep_current = false);

 private:
  bool is_basic(std::size_t j) const { return j < n_ ? slot_[j] >= 0 : rslot_[j - n_] < 0; }
  std::vector<std::size_t> basic_columns() const;  // sorted
  bool load_basis(const std::vector<std::size_t>& basic);
  bool refactor();
  void slack_basis();
  void btran(std::size_t p, std::vector<double>& rho) const;
  void ftran(std::size_t q, std::vector<double>& us, std::vector<double>& ul) const;
  void update_inverse(std::size_t q, std::size_t p, double pivot, const std::vector<double>& us,
                      const std::vector<double>& rho);
  void compute_duals();
  void compute_primal();
  void place_nonbasic(const std::vector<VarStatus>* hint);
  double column_dot(std::size_t j, const double* v) const;
  double infeasibility(std::size_t j, double value) const;
  double max_row_violation() const;
  bool row_proves_infeasible(std::size_t p, const std::vector<double>& rho) const;

  const LinearProgram& lp_;
  LpOptions opt_;
  std::size_t m_ = 0, n_ = 0;
  std::vector<std::size_t> col_start_, col_row_, row_start_, row_col_;
  std::vector<double> col_val_, row_val_;
  std::vector<double> lo_, hi_, cost_;
  // Basic structurals S and the rows R not covered by basic logicals, with
  // inv_ = A[R, S]^-1 (rows follow S, columns follow R).
  std::vector<std::size_t> S_, R_;
  std::vector<std::ptrdiff_t> slot_;   // per structural: index in S, or -1
  std::vector<std::ptrdiff_t> rslot_;  // per row: index in R, or -1 when its logical is basic
  Matrix inv_;
  std::vector<VarStatus> status_;
  std::vector<double> x_, d_;
  bool factored_ = false;
};

}  // namespace fcopf::detail
