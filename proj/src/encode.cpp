#include "fcopf/encode.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <map>

namespace fcopf {

void InputBox::validate(std::size_t arity) const {
  if (lower.size() != arity || upper.size() != arity)
    throw Error(ErrorKind::mismatch, "input box",
                "box has " + std::to_string(lower.size()) + " coordinates, network expects " + std::to_string(arity));
  for (std::size_t i = 0; i < arity; ++i)
    if (!(lower[i] <= upper[i]) || !std::isfinite(lower[i]) || !std::isfinite(upper[i]))
      throw Error(ErrorKind::invariant, "input box[" + std::to_string(i) + "]", "need finite lower <= upper");
}

bool InputBox::contains(std::span<const double> x, double tol) const {
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] < lower[i] - tol || x[i] > upper[i] + tol) return false;
  return true;
}

Polarity NeuronBounds::polarity(std::size_t layer, std::size_t j) const {
  if (lower[layer][j] >= 0.0) return Polarity::always_active;
  if (upper[layer][j] <= 0.0) return Polarity::always_inactive;
  return Polarity::unstable;
}

std::size_t NeuronBounds::stable_count() const {
  std::size_t n = 0;
  for (std::size_t m = 0; m < hidden_layers(); ++m)
    for (std::size_t j = 0; j < lower[m].size(); ++j) n += polarity(m, j) != Polarity::unstable;
  return n;
}

std::size_t NeuronBounds::unstable_count() const {
  std::size_t n = 0;
  for (std::size_t m = 0; m < hidden_layers(); ++m) n += lower[m].size();
  return n - stable_count();
}

double NeuronBounds::total_width() const {
  double w = 0.0;
  for (std::size_t m = 0; m < hidden_layers(); ++m)
    for (std::size_t j = 0; j < lower[m].size(); ++j) w += upper[m][j] - lower[m][j];
  return w;
}

namespace {

const MlpModel& folded_or_self(const MlpModel& model, MlpModel& storage) {
  if (model.input.is_identity() && model.output.is_identity()) return model;
  storage = fold_normalization(model);
  return storage;
}

double pad(double v) { return 1e-7 * (1.0 + std::abs(v)); }

std::vector<Term> merged(const std::vector<Term>& terms) {
  std::map<std::size_t, double> acc;
  for (const auto& t : terms) acc[t.var] += t.coef;
  std::vector<Term> out;
  for (const auto& [v, c] : acc)
    if (c != 0.0) out.push_back({v, c});
  return out;
}

}  // namespace

NeuronBounds propagate_bounds(const MlpModel& model, const InputBox& box) {
  model.validate();
  box.validate(model.input_dim());
  MlpModel storage;
  const MlpModel& net = folded_or_self(model, storage);

  NeuronBounds nb;
  std::vector<double> l = box.lower, u = box.upper;
  for (std::size_t m = 0; m < net.layers.size(); ++m) {
    const auto& layer = net.layers[m];
    std::vector<double> lo(layer.b), hi(layer.b);
    for (std::size_t i = 0; i < layer.inputs(); ++i)
      for (std::size_t j = 0; j < layer.outputs(); ++j) {
        const double w = layer.W(i, j);
        lo[j] += std::min(w * l[i], w * u[i]);
        hi[j] += std::max(w * l[i], w * u[i]);
      }
    nb.lower.push_back(lo);
    nb.upper.push_back(hi);
    l.resize(lo.size());
    u.resize(hi.size());
    for (std::size_t j = 0; j < lo.size(); ++j) {
      l[j] = std::max(lo[j], 0.0);
      u[j] = std::max(hi[j], 0.0);
    }
  }
  return nb;
}

MilpFragment encode_network(MilpProblem& problem, const MlpModel& model, const NeuronBounds& bounds,
                            const std::vector<LinExpr>& inputs, const EncodeOptions& options) {
  model.validate();
  if (!model.input.is_identity() || !model.output.is_identity())
    throw Error(ErrorKind::invariant, "encode_network", "fold the normalization into the weights first");
  if (inputs.size() != model.input_dim())
    throw Error(ErrorKind::mismatch, "encode_network",
                std::to_string(inputs.size()) + " inputs wired, network expects " + std::to_string(model.input_dim()));
  const std::size_t L = model.layers.size();
  if (bounds.lower.size() != L || bounds.upper.size() != L)
    throw Error(ErrorKind::mismatch, "encode_network", "bounds do not cover every layer");
  for (std::size_t m = 0; m < L; ++m) {
    if (bounds.lower[m].size() != model.layers[m].outputs() || bounds.upper[m].size() != model.layers[m].outputs())
      throw Error(ErrorKind::mismatch, "encode_network", "bounds for layer " + std::to_string(m) + " have wrong width");
    for (std::size_t j = 0; j < bounds.lower[m].size(); ++j)
      if (!(bounds.lower[m][j] <= bounds.upper[m][j]) || !std::isfinite(bounds.lower[m][j]) ||
          !std::isfinite(bounds.upper[m][j]))
        throw Error(ErrorKind::invariant,
                    "encode_network: neuron (" + std::to_string(m) + ", " + std::to_string(j) + ")",
                    "missing or inverted bounds");
  }

  auto& lp = problem.lp;
  MilpFragment frag;
  frag.first_row = lp.rows.size();
  const bool compact = options.mode == EncodeMode::compact;
  auto name = [&](const char* kind, std::size_t m, std::size_t j) {
    return options.prefix + "_" + kind + std::to_string(m + 1) + "_" + std::to_string(j + 1);
  };

  std::vector<LinExpr> prev = inputs;
  for (std::size_t m = 0; m < L; ++m) {
    const auto& layer = model.layers[m];
    const bool hidden = m + 1 < L;
    std::vector<LinExpr> next(layer.outputs());
    if (hidden) {
      frag.z.emplace_back(layer.outputs(), no_var);
      frag.a.emplace_back(layer.outputs(), no_var);
      frag.binary.emplace_back(layer.outputs(), no_var);
    }
    for (std::size_t j = 0; j < layer.outputs(); ++j) {
      // Pre-activation as an expression over the previous layer.
      LinExpr z{{}, layer.b[j]};
      for (std::size_t i = 0; i < layer.inputs(); ++i) {
        const double w = layer.W(i, j);
        if (w == 0.0) continue;
        z.constant += w * prev[i].constant;
        for (const auto& t : prev[i].terms) z.terms.push_back({t.var, w * t.coef});
      }
      z.terms = merged(z.terms);
      const double hl = bounds.lower[m][j], hu = bounds.upper[m][j];

      auto row_minus_z = [&](std::vector<Term> lead, Relation rel, double rhs) {
        for (const auto& t : z.terms) lead.push_back({t.var, -t.coef});
        lp.add_row(merged(lead), rel, rhs + z.constant);
      };

      if (!hidden) {
        const auto y = lp.add_variable(name("y", m, j), hl - pad(hl), hu + pad(hu));
        row_minus_z({{y, 1.0}}, Relation::eq, 0.0);
        frag.outputs.push_back(y);
        continue;
      }

      const Polarity pol = bounds.polarity(m, j);
      if (pol == Polarity::always_inactive) {
        ++frag.stable;
        next[j] = LinExpr::value(0.0);
        continue;
      }

      std::size_t zv = no_var;
      if (!compact || pol == Polarity::always_active) {
        zv = lp.add_variable(name(compact ? "a" : "z", m, j), hl - pad(hl), hu + pad(hu));
        row_minus_z({{zv, 1.0}}, Relation::eq, 0.0);
        if (!compact) frag.z[m][j] = zv;
      }
      if (pol == Polarity::always_active) {
        ++frag.stable;
        frag.a[m][j] = zv;
        next[j] = LinExpr::of(zv);
        continue;
      }

      const auto a = lp.add_variable(name("a", m, j), 0.0, hu + pad(hu));
      const auto B = lp.add_variable(name("B", m, j), 0.0, 1.0);
      problem.binaries.push_back(B);
      frag.a[m][j] = a;
      frag.binary[m][j] = B;
      if (compact) {
        row_minus_z({{a, 1.0}, {B, -hl}}, Relation::le, -hl);
        row_minus_z({{a, 1.0}}, Relation::ge, 0.0);
      } else {
        lp.add_row({{a, 1.0}, {zv, -1.0}, {B, -hl}}, Relation::le, -hl);
        lp.add_row({{a, 1.0}, {zv, -1.0}}, Relation::ge, 0.0);
      }
      lp.add_row({{a, 1.0}, {B, -hu}}, Relation::le, 0.0);
      lp.add_row({{a, 1.0}}, Relation::ge, 0.0);
      next[j] = LinExpr::of(a);
    }
    prev = std::move(next);
  }
  frag.row_count = lp.rows.size() - frag.first_row;
  return frag;
}

void complete_fragment(const MlpModel& model, const MilpFragment& fragment, std::span<const double> x,
                       std::vector<double>& values) {
  if (!model.input.is_identity() || !model.output.is_identity())
    throw Error(ErrorKind::invariant, "complete_fragment", "fold the normalization into the weights first");
  if (x.size() != model.input_dim())
    throw Error(ErrorKind::mismatch, "complete_fragment", "input has wrong arity");
  std::vector<double> prev(x.begin(), x.end());
  const std::size_t L = model.layers.size();
  for (std::size_t m = 0; m < L; ++m) {
    const auto& layer = model.layers[m];
    std::vector<double> z(layer.b);
    for (std::size_t i = 0; i < layer.inputs(); ++i)
      for (std::size_t j = 0; j < layer.outputs(); ++j) z[j] += prev[i] * layer.W(i, j);
    if (m + 1 == L) {
      for (std::size_t j = 0; j < z.size(); ++j) values[fragment.outputs[j]] = z[j];
      break;
    }
    for (std::size_t j = 0; j < z.size(); ++j) {
      const double a = std::max(z[j], 0.0);
      if (fragment.z[m][j] != no_var) values[fragment.z[m][j]] = z[j];
      if (fragment.a[m][j] != no_var) values[fragment.a[m][j]] = fragment.binary[m][j] == no_var ? z[j] : a;
      if (fragment.binary[m][j] != no_var) values[fragment.binary[m][j]] = z[j] > 0.0 ? 1.0 : 0.0;
      z[j] = a;
    }
    prev = std::move(z);
  }
}

NeuronBounds tighten_bounds(const MlpModel& model, const InputBox& box, const NeuronBounds& start,
                            const std::vector<Constraint>& domain) {
  MlpModel storage;
  const MlpModel& net = folded_or_self(model, storage);
  NeuronBounds nb = start;
  const std::size_t L = net.layers.size();
  for (std::size_t m = 1; m < L; ++m) {
    MlpModel head;
    head.layers.assign(net.layers.begin(), net.layers.begin() + static_cast<std::ptrdiff_t>(m + 1));
    head.input = Affine::identity(net.input_dim());
    head.output = Affine::identity(net.layers[m].outputs());
    NeuronBounds hb;
    hb.lower.assign(nb.lower.begin(), nb.lower.begin() + static_cast<std::ptrdiff_t>(m + 1));
    hb.upper.assign(nb.upper.begin(), nb.upper.begin() + static_cast<std::ptrdiff_t>(m + 1));

    MilpProblem p;
    std::vector<LinExpr> in;
    for (std::size_t i = 0; i < box.lower.size(); ++i)
      in.push_back(LinExpr::of(p.lp.add_variable("x" + std::to_string(i), box.lower[i], box.upper[i])));
    for (const auto& row : domain) {
      for (const auto& t : row.terms)
        if (t.var >= box.lower.size()) throw Error(ErrorKind::invariant, "tighten_bounds", "domain row names an unknown input");
      p.lp.rows.push_back(row);
    }
    const auto frag = encode_network(p, head, hb, in, {EncodeMode::explicit_z, "t"});
    for (std::size_t j = 0; j < frag.outputs.size(); ++j) {
      for (double sense : {1.0, -1.0}) {
        std::fill(p.lp.cost.begin(), p.lp.cost.end(), 0.0);
        p.lp.cost[frag.outputs[j]] = sense;
        const auto sol = solve_relaxation(p);
        if (sol.status != SolveStatus::optimal) continue;
        const double v = sol.values[frag.outputs[j]];
        if (sense > 0) nb.lower[m][j] = std::max(nb.lower[m][j], v - pad(v));
        else nb.upper[m][j] = std::min(nb.upper[m][j], v + pad(v));
      }
      if (nb.lower[m][j] > nb.upper[m][j]) nb.lower[m][j] = nb.upper[m][j] = 0.5 * (nb.lower[m][j] + nb.upper[m][j]);
    }
  }
  return nb;
}

namespace {

std::vector<std::vector<double>> draw_inputs(const InputBox& box, std::size_t samples, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> xs(samples, std::vector<double>(box.lower.size()));
  for (auto& x : xs)
    for (std::size_t i = 0; i < x.size(); ++i)
      x[i] = box.lower[i] == box.upper[i] ? box.lower[i] : rng.uniform(box.lower[i], box.upper[i]);
  return xs;
}

}  // namespace

VerifyReport verify_encoding(const MlpModel& model, const InputBox& box, const NeuronBounds& bounds,
                             std::size_t samples, std::uint64_t seed, const EncodeOptions& options, Execution exec) {
  box.validate(model.input_dim());
  MlpModel storage;
  const MlpModel& net = folded_or_self(model, storage);

  MilpProblem base;
  std::vector<LinExpr> in;
  std::vector<std::size_t> xvars;
  for (std::size_t i = 0; i < box.lower.size(); ++i) {
    xvars.push_back(base.lp.add_variable("x" + std::to_string(i), box.lower[i], box.upper[i]));
    in.push_back(LinExpr::of(xvars.back()));
  }
  const auto frag = encode_network(base, net, bounds, in, options);

  // Inputs are fixed, so node propagation settles most binaries at the root.
  MilpOptions milp;
  milp.propagate = true;

  const auto xs = draw_inputs(box, samples, seed);
  std::vector<double> deviation(samples, 0.0);
  std::vector<std::exception_ptr> errors(samples);
  auto solve = [&](std::size_t s) {
    const auto expect = forward(model, xs[s]);
    MilpProblem p = base;
    for (std::size_t i = 0; i < xvars.size(); ++i) p.lp.lower[xvars[i]] = p.lp.upper[xvars[i]] = xs[s][i];
    double worst = 0.0;
    for (double sense : {1.0, -1.0}) {
      for (auto y : frag.outputs) p.lp.cost[y] = sense;
      const auto sol = solve_milp(p, milp);
      if (sol.status != SolveStatus::optimal) {
        worst = std::numeric_limits<double>::infinity();
        break;
      }
      for (std::size_t k = 0; k < frag.outputs.size(); ++k)
        worst = std::max(worst, std::abs(sol.values[frag.outputs[k]] - expect[k]));
    }
    deviation[s] = worst;
  };
  auto run = [&](std::size_t s) {
    try {
      solve(s);
    } catch (...) {
      errors[s] = std::current_exception();
    }
  };

  const auto n = static_cast<std::ptrdiff_t>(samples);
  if (exec == Execution::serial) {
    for (std::ptrdiff_t s = 0; s < n; ++s) run(static_cast<std::size_t>(s));
  } else {
#pragma omp parallel for schedule(dynamic, 4)
    for (std::ptrdiff_t s = 0; s < n; ++s) run(static_cast<std::size_t>(s));
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  VerifyReport report;
  report.samples = samples;
  report.stable_neurons = frag.stable;
  for (double d : deviation) {
    report.max_deviation = std::max(report.max_deviation, d);
    if (!(d <= 1e-6)) ++report.failures;
  }
  report.passed = report.failures == 0;
  return report;
}

SoundnessReport check_soundness(const MlpModel& model, const InputBox& box, const NeuronBounds& bounds,
                                std::size_t samples, std::uint64_t seed, Execution exec) {
  box.validate(model.input_dim());
  MlpModel storage;
  const MlpModel& net = folded_or_self(model, storage);
  const auto xs = draw_inputs(box, samples, seed);
  std::vector<std::size_t> escapes(samples, 0);
  std::vector<double> worst(samples, 0.0);

  auto run = [&](std::size_t s) {
    std::vector<double> a = xs[s];
    for (std::size_t m = 0; m < net.layers.size(); ++m) {
      const auto& layer = net.layers[m];
      std::vector<double> z(layer.b);
      for (std::size_t i = 0; i < layer.inputs(); ++i)
        for (std::size_t j = 0; j < layer.outputs(); ++j) z[j] += a[i] * layer.W(i, j);
      for (std::size_t j = 0; j < z.size(); ++j) {
        const double lo = bounds.lower[m][j], hi = bounds.upper[m][j];
        const double tol = 1e-9 * (1.0 + std::max(std::abs(lo), std::abs(hi)));
        const double out = std::max(lo - z[j], z[j] - hi);
        if (out > tol) {
          ++escapes[s];
          worst[s] = std::max(worst[s], out);
        }
      }
      for (auto& v : z) v = std::max(v, 0.0);
      a = std::move(z);
    }
  };

  const auto n = static_cast<std::ptrdiff_t>(samples);
  if (exec == Execution::serial) {
    for (std::ptrdiff_t s = 0; s < n; ++s) run(static_cast<std::size_t>(s));
  } else {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t s = 0; s < n; ++s) run(static_cast<std::size_t>(s));
  }

  SoundnessReport r;
  r.samples = samples;
  for (std::size_t s = 0; s < samples; ++s) {
    r.escapes += escapes[s];
    r.worst_escape = std::max(r.worst_escape, worst[s]);
  }
  return r;
}

}  // namespace fcopf
