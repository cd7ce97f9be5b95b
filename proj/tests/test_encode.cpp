#include <doctest.h>

#include <algorithm>

#include "fcopf/encode.hpp"
#include "support.hpp"

using namespace fcopf;

namespace {

MlpModel scalar_model(double w, double b) {
  MlpModel m = make_model({1, 1}, 1);
  m.layers[0].W(0, 0) = w;
  m.layers[0].b[0] = b;
  return m;
}

// Input x, one hidden ReLU neuron z = x, output y = a.
MlpModel relu_identity() {
  MlpModel m = make_model({1, 1, 1}, 1);
  m.layers[0].W(0, 0) = 1.0;
  m.layers[0].b[0] = 0.0;
  m.layers[1].W(0, 0) = 1.0;
  m.layers[1].b[0] = 0.0;
  return m;
}

struct Encoded {
  MilpProblem problem;
  std::vector<std::size_t> x;
  MilpFragment frag;
};

Encoded encode(const MlpModel& m, const InputBox& box, const NeuronBounds& nb, EncodeMode mode) {
  Encoded e;
  std::vector<LinExpr> in;
  for (std::size_t i = 0; i < box.lower.size(); ++i) {
    e.x.push_back(e.problem.lp.add_variable("x" + std::to_string(i), box.lower[i], box.upper[i]));
    in.push_back(LinExpr::of(e.x.back()));
  }
  EncodeOptions opt;
  opt.mode = mode;
  e.frag = encode_network(e.problem, m, nb, in, opt);
  return e;
}

double optimum(MilpProblem p, std::size_t var, double sense) {
  p.lp.cost.assign(p.lp.variables(), 0.0);
  p.lp.cost[var] = sense;
  const auto s = solve_milp(p);
  REQUIRE(s.status == SolveStatus::optimal);
  return s.values[var];
}

InputBox unit_box(std::size_t n, double lo, double hi) { return {std::vector<double>(n, lo), std::vector<double>(n, hi)}; }

}  // namespace

TEST_CASE("interval propagation through a single affine layer") {
  auto nb = propagate_bounds(scalar_model(1.0, 0.0), InputBox{{-2.0}, {3.0}});
  CHECK(nb.lower[0][0] == doctest::Approx(-2.0).epsilon(1e-6));
  CHECK(nb.upper[0][0] == doctest::Approx(3.0).epsilon(1e-6));
  nb = propagate_bounds(scalar_model(-1.0, 1.0), InputBox{{0.0}, {4.0}});
  CHECK(nb.lower[0][0] == doctest::Approx(-3.0).epsilon(1e-6));
  CHECK(nb.upper[0][0] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("active and inactive neurons have a single completion") {
  const auto m = relu_identity();
  const InputBox box{{-1.0}, {2.0}};
  const auto nb = propagate_bounds(m, box);
  CHECK(nb.polarity(0, 0) == Polarity::unstable);
  for (auto mode : {EncodeMode::explicit_z, EncodeMode::compact}) {
    for (auto [x, a, bit] : {std::tuple{1.5, 1.5, 1.0}, std::tuple{-0.5, 0.0, 0.0}}) {
      auto e = encode(m, box, nb, mode);
      e.problem.lp.lower[e.x[0]] = e.problem.lp.upper[e.x[0]] = x;
      const auto av = e.frag.a[0][0], bv = e.frag.binary[0][0];
      REQUIRE(av != no_var);
      REQUIRE(bv != no_var);
      CHECK(optimum(e.problem, av, 1.0) == doctest::Approx(a).epsilon(1e-9));
      CHECK(optimum(e.problem, av, -1.0) == doctest::Approx(a).epsilon(1e-9));
      CHECK(optimum(e.problem, bv, 1.0) == doctest::Approx(bit));
      CHECK(optimum(e.problem, bv, -1.0) == doctest::Approx(bit));
    }
  }
}

TEST_CASE("2-2-1 network matches forward on a 21 x 21 grid") {
  const auto m = make_model({2, 2, 1}, 17);
  const auto box = unit_box(2, -1.0, 1.0);
  const auto nb = propagate_bounds(m, box);
  for (auto mode : {EncodeMode::explicit_z, EncodeMode::compact}) {
    const auto e = encode(m, box, nb, mode);
    double worst = 0.0;
    for (int i = 0; i <= 20; ++i)
      for (int j = 0; j <= 20; ++j) {
        const std::vector<double> x{-1.0 + 0.1 * i, -1.0 + 0.1 * j};
        auto p = e.problem;
        for (std::size_t k = 0; k < 2; ++k) p.lp.lower[e.x[k]] = p.lp.upper[e.x[k]] = x[k];
        const double expect = oracle::forward_loop(m, x)[0];
        for (double sense : {1.0, -1.0})
          worst = std::max(worst, std::fabs(optimum(p, e.frag.outputs[0], sense) - expect));
      }
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("verification passes on zero and random networks") {
  auto zero = make_model({3, 4, 2}, 3);
  for (auto& l : zero.layers) {
    for (std::size_t i = 0; i < l.inputs(); ++i)
      for (std::size_t j = 0; j < l.outputs(); ++j) l.W(i, j) = 0.0;
    std::fill(l.b.begin(), l.b.end(), 0.0);
  }
  const auto box = unit_box(3, -1.0, 1.0);
  const auto r0 = verify_encoding(zero, box, propagate_bounds(zero, box), 20, 1);
  CHECK(r0.passed);
  CHECK(r0.max_deviation == 0.0);

  const auto m = make_model({3, 8, 8, 2}, 9);
  const auto nb = propagate_bounds(m, box);
  for (auto mode : {EncodeMode::explicit_z, EncodeMode::compact}) {
    EncodeOptions opt;
    opt.mode = mode;
    const auto r = verify_encoding(m, box, nb, 60, 2, opt);
    CHECK(r.passed);
    CHECK(r.max_deviation < 1e-6);
    const auto s = verify_encoding(m, box, nb, 60, 2, opt, Execution::serial);
    CHECK(s.max_deviation == r.max_deviation);
  }
}

TEST_CASE("a corrupted upper bound is caught") {
  const auto m = make_model({3, 8, 8, 2}, 9);
  const auto box = unit_box(3, -1.0, 1.0);
  auto nb = propagate_bounds(m, box);
  std::size_t best = 0;
  for (std::size_t j = 1; j < nb.upper[0].size(); ++j)
    if (nb.upper[0][j] > nb.upper[0][best]) best = j;
  REQUIRE(nb.upper[0][best] > 0.0);
  // Make the neuron always active with half its true ceiling.
  nb.upper[0][best] *= 0.5;
  nb.lower[0][best] = std::max(nb.lower[0][best], 0.0);
  const auto r = verify_encoding(m, box, nb, 200, 4);
  CHECK_FALSE(r.passed);
  CHECK(r.failures > 0);
}

TEST_CASE("propagated and tightened bounds are sound") {
  const auto m = make_model({4, 16, 16, 2}, 12);
  const auto box = unit_box(4, 0.0, 2.0);
  const auto nb = propagate_bounds(m, box);
  const auto par = check_soundness(m, box, nb, 100000, 5);
  CHECK(par.escapes == 0);
  const auto ser = check_soundness(m, box, nb, 100000, 5, Execution::serial);
  CHECK(ser.escapes == 0);

  const auto tight = tighten_bounds(m, box, nb);
  CHECK(check_soundness(m, box, tight, 100000, 6).escapes == 0);
  CHECK(tight.total_width() <= nb.total_width() + 1e-9);
  CHECK(tight.stable_count() >= nb.stable_count());
  for (std::size_t l = 0; l + 1 < nb.lower.size(); ++l)
    for (std::size_t j = 0; j < nb.lower[l].size(); ++j) {
      CHECK(tight.lower[l][j] >= nb.lower[l][j] - 1e-9);
      CHECK(tight.upper[l][j] <= nb.upper[l][j] + 1e-9);
    }
  EncodeOptions opt;
  opt.mode = EncodeMode::compact;
  CHECK(verify_encoding(m, box, tight, 30, 7, opt).passed);
}

TEST_CASE("shrinking the box never widens the intervals") {
  const auto m = make_model({3, 8, 8, 2}, 21);
  const auto outer = propagate_bounds(m, unit_box(3, -2.0, 2.0));
  const auto inner = propagate_bounds(m, unit_box(3, -1.0, 1.0));
  for (std::size_t l = 0; l < outer.lower.size(); ++l)
    for (std::size_t j = 0; j < outer.lower[l].size(); ++j) {
      CHECK(inner.lower[l][j] >= outer.lower[l][j]);
      CHECK(inner.upper[l][j] <= outer.upper[l][j]);
    }
}

TEST_CASE("complete_fragment gives a feasible exact assignment") {
  const auto m = make_model({3, 8, 8, 2}, 33);
  const auto box = unit_box(3, -1.0, 1.0);
  const auto nb = propagate_bounds(m, box);
  Rng rng(8);
  for (auto mode : {EncodeMode::explicit_z, EncodeMode::compact}) {
    const auto e = encode(m, box, nb, mode);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> x(3);
      for (auto& v : x) v = rng.uniform(-1.0, 1.0);
      std::vector<double> values(e.problem.lp.variables(), 0.0);
      for (std::size_t i = 0; i < 3; ++i) values[e.x[i]] = x[i];
      complete_fragment(m, e.frag, x, values);
      CHECK(e.problem.lp.max_violation(values) < 1e-9);
      const auto y = oracle::forward_loop(m, x);
      for (std::size_t k = 0; k < y.size(); ++k) CHECK(values[e.frag.outputs[k]] == doctest::Approx(y[k]).epsilon(1e-12));
      for (const auto& row : e.frag.binary)
        for (auto b : row)
          if (b != no_var) CHECK((values[b] == 0.0 || values[b] == 1.0));
    }
  }
}

TEST_CASE("encoding rejects unfolded models and wrong arity") {
  auto m = make_model({2, 2, 1}, 1);
  const auto box = unit_box(2, -1.0, 1.0);
  const auto nb = propagate_bounds(m, box);
  MilpProblem p;
  const auto x = p.lp.add_variable("x", -1, 1);
  CHECK_THROWS_AS(encode_network(p, m, nb, {LinExpr::of(x)}), Error);
  m.input.scale[0] = 2.0;
  CHECK_THROWS_AS(encode_network(p, m, nb, {LinExpr::of(x), LinExpr::value(0.0)}), Error);
}
