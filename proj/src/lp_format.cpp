#include <cctype>
#include <ostream>

#include "fcopf/common.hpp"
#include "fcopf/solver.hpp"

namespace fcopf {

namespace {

std::string safe_name(const std::string& name, std::size_t j) {
  std::string s = name.empty() ? "x" + std::to_string(j) : name;
  for (char& c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.')) c = '_';
  if (std::isdigit(static_cast<unsigned char>(s[0])) || s[0] == '.') s = "v" + s;
  return s;
}

void write_terms(std::ostream& out, const std::vector<Term>& terms, const std::vector<std::string>& names) {
  bool first = true;
  for (const auto& t : terms) {
    if (t.coef == 0.0) continue;
    out << (t.coef < 0 ? " - " : first ? " " : " + ") << format_double(std::abs(t.coef)) << ' ' << names[t.var];
    first = false;
  }
  if (first) out << " 0 " << names.front();
}

}  // namespace

void write_lp_format(std::ostream& out, const LinearProgram& lp, const std::vector<std::size_t>& binaries) {
  std::vector<std::string> names;
  for (std::size_t j = 0; j < lp.variables(); ++j) names.push_back(safe_name(lp.names[j], j));

  out << "\\ " << lp.variables() << " variables, " << lp.rows.size() << " rows\n";
  if (lp.objective_offset != 0.0) out << "\\ objective offset " << format_double(lp.objective_offset) << '\n';
  out << "Minimize\n obj:";
  std::vector<Term> obj;
  for (std::size_t j = 0; j < lp.variables(); ++j)
    if (lp.cost[j] != 0.0) obj.push_back({j, lp.cost[j]});
  if (obj.empty() && lp.variables() > 0) obj.push_back({0, 0.0});
  write_terms(out, obj, names);
  out << "\nSubject To\n";
  for (std::size_t i = 0; i < lp.rows.size(); ++i) {
    const auto& r = lp.rows[i];
    out << ' ' << (r.name.empty() ? "c" + std::to_string(i) : safe_name(r.name, i) + "_" + std::to_string(i)) << ':';
    write_terms(out, r.terms, names);
    out << (r.rel == Relation::le ? " <= " : r.rel == Relation::ge ? " >= " : " = ") << format_double(r.rhs) << '\n';
  }
  out << "Bounds\n";
  for (std::size_t j = 0; j < lp.variables(); ++j)
    out << ' ' << format_double(lp.lower[j]) << " <= " << names[j] << " <= " << format_double(lp.upper[j]) << '\n';
  if (!binaries.empty()) {
    out << "Binaries\n";
    for (auto b : binaries) out << ' ' << names[b] << '\n';
  }
  out << "End\n";
}

}  // namespace fcopf
