#include <algorithm>
#include <cmath>
#include <limits>

#include "fcopf/common.hpp"
#include "fcopf/solver.hpp"

namespace fcopf {

PwlCost piecewise_linearize(double c2, double c1, double c0, double p_min, double p_max, std::size_t K) {
  if (K < 1) throw Error(ErrorKind::invariant, "piecewise_linearize", "need at least one segment");
  if (!(p_min < p_max)) throw Error(ErrorKind::invariant, "piecewise_linearize", "need p_min < p_max");
  if (c2 < 0) throw Error(ErrorKind::invariant, "piecewise_linearize", "c2 must be >= 0 for a convex cost");
  PwlCost pwl;
  for (std::size_t k = 0; k <= K; ++k) {
    const double p = k == K ? p_max : p_min + (p_max - p_min) * static_cast<double>(k) / static_cast<double>(K);
    pwl.p.push_back(p);
    pwl.cost.push_back(c2 * p * p + c1 * p + c0);
  }
  return pwl;
}

double PwlCost::operator()(double x) const {
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < segments(); ++k) best = std::max(best, slope(k) * x + intercept(k));
  return best;
}

double PwlCost::error_bound(double c2) const {
  const double h = (p.back() - p.front()) / static_cast<double>(segments());
  return c2 * h * h / 4.0;
}

}  // namespace fcopf
