#include <doctest.h>

#include "fcopf/dataset.hpp"
#include "fcopf/dynamics.hpp"
#include "fcopf/opf.hpp"
#include "support.hpp"

using namespace fcopf;

namespace {

double pwl_cost(const GridCase& g, const std::vector<double>& out, std::size_t segments) {
  double total = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto& gg = g.gen_groups[i];
    total += gg.unit_count * piecewise_linearize(gg.c2, gg.c1, gg.c0, gg.p_min, gg.p_max, segments)(out[i]);
  }
  return total;
}

// Small predictor trained on a few hundred labeled scenarios.
const MlpModel& small_model() {
  static const MlpModel model = [] {
    const auto& g = fixture::bundled();
    const SamplingConfig sampling;
    const SimConfig sim;
    const auto rows = label_scenarios(g, sample_scenarios(g, sampling, 400, 31), sim);
    TrainConfig tc;
    tc.hidden = {8, 8};
    tc.epochs = 150;
    tc.batch_size = 32;
    tc.learning_rate = 3e-3;
    return train(rows, make_manifest(g, sampling, sim, 31, rows.size()), tc).model;
  }();
  return model;
}

}  // namespace

TEST_CASE("single generator serves the whole load") {
  const GridCase g = parse_case(fixture::two_bus_json(0.1, 50.0, 1, 0.0));
  const auto d = solve_dispatch(g, build_topf(g, {50.0}));
  REQUIRE(d.group_output.size() == 1);
  CHECK(d.group_output[0] == doctest::Approx(50.0).epsilon(1e-9));
  CHECK(d.flows[0] == doctest::Approx(50.0).epsilon(1e-9));
  const double quad = 0.01 * 50 * 50 + 10 * 50;
  CHECK(d.quadratic_cost == doctest::Approx(quad));
  CHECK(d.cost >= quad - 1e-9);
  CHECK(d.cost <= quad + build_topf(g, {50.0}).cost_error_bound + 1e-9);
  CHECK(d.predicted.empty());
}

TEST_CASE("T-OPF beats every sampled feasible dispatch") {
  const auto& g = fixture::bundled();
  const auto loads = g.nominal_loads();
  const auto d = solve_dispatch(g, build_topf(g, loads));
  CHECK(check_operating_point(g, d.operating_point()).empty());
  CHECK(d.cost == doctest::Approx(pwl_cost(g, d.group_output, 10)).epsilon(1e-9));
  CHECK(d.cost <= pwl_cost(g, default_dispatch(g, loads), 10) + 1e-6);
  SamplingConfig fixed;
  fixed.load_min = fixed.load_max = 1.0;
  for (const auto& s : sample_scenarios(g, fixed, 300, 2)) CHECK(d.cost <= pwl_cost(g, s.group_outputs, 10) + 1e-6);
}

TEST_CASE("RoCoF output cap closed form") {
  const auto& g = fixture::bundled();
  for (const auto& c : credible_contingencies(g)) {
    double h = 0;
    for (const auto& gg : g.gen_groups) h += gg.unit_count * gg.H * gg.rated_mva;
    h -= g.gen_groups[c.group].H * g.gen_groups[c.group].rated_mva;
    const double expect = 0.5 * 2.0 * h / g.f0;
    CHECK(rocof_output_cap(g, c, -0.5) == doctest::Approx(expect).epsilon(1e-12));

    auto out = default_dispatch(g, g.nominal_loads());
    out[c.group] = rocof_output_cap(g, c, -0.5);
    const OperatingPoint op{out, g.nominal_loads(), {}, {}};
    CHECK(std::fabs(analytic_initial_rocof(g, op, c) - -0.5) < 1e-6);
  }
}

TEST_CASE("L-FCOPF respects the caps and never costs less") {
  const auto& g = fixture::bundled();
  FcopfConfig cfg;
  for (double s : {1.0, 1.2, 1.4}) {
    const auto loads = scaled_loads(g, s);
    const auto t = solve_dispatch(g, build_topf(g, loads));
    const auto l = solve_dispatch(g, build_lfcopf(g, loads, cfg));
    CHECK(l.cost >= t.cost - 1e-6);
    for (const auto& c : credible_contingencies(g))
      CHECK(l.group_output[c.group] <= rocof_output_cap(g, c, cfg.rocof_threshold) + 1e-6);
  }
  FcopfConfig loose;
  loose.rocof_threshold = -100;
  const auto loads = scaled_loads(g, 1.2);
  CHECK(solve_dispatch(g, build_lfcopf(g, loads, loose)).cost ==
        doctest::Approx(solve_dispatch(g, build_topf(g, loads)).cost).epsilon(1e-9));

  FcopfConfig strict;
  strict.rocof_threshold = -1e-3;
  try {
    solve_dispatch(g, build_lfcopf(g, loads, strict));
    FAIL("an infeasible cap was accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::infeasible);
  }
}

TEST_CASE("DNN-FCOPF with loose limits reproduces T-OPF") {
  const auto& g = fixture::bundled();
  const auto& m = small_model();
  FcopfConfig loose;
  loose.rocof_threshold = -100;
  loose.nadir_threshold = 1;
  const auto loads = g.nominal_loads();
  const auto t = solve_dispatch(g, build_topf(g, loads));
  const auto d = solve_dispatch(g, build_dnn_fcopf(g, loads, m, loose), &m);
  CHECK(d.cost == doctest::Approx(t.cost).epsilon(1e-9));
  REQUIRE(d.predicted.size() == credible_contingencies(g).size());
  for (const auto& p : d.predicted) {
    CHECK(std::fabs(p.nadir - p.forward_nadir) < 1e-6);
    CHECK(std::fabs(p.rocof - p.forward_rocof) < 1e-6);
    const auto y = oracle::forward_loop(m, dispatch_features(g, m, d.group_output, loads, p.contingency));
    CHECK(std::fabs(p.nadir - y[0]) < 1e-6);
    CHECK(std::fabs(p.rocof - y[1]) < 1e-6);
  }
}

TEST_CASE("DNN-FCOPF enforces the predicted limits") {
  const auto& g = fixture::bundled();
  const auto& m = small_model();
  const auto loads = scaled_loads(g, 1.1);
  const auto t = solve_dispatch(g, build_topf(g, loads));
  // Thresholds a little tighter than what T-OPF's dispatch is predicted to give.
  double worst_rocof = 0;
  for (const auto& c : credible_contingencies(g))
    worst_rocof = std::min(worst_rocof, forward(m, dispatch_features(g, m, t.group_output, loads, c))[1]);
  FcopfConfig cfg;
  cfg.nadir_threshold = 1;
  cfg.rocof_threshold = 0.9 * worst_rocof;
  const auto d = solve_dispatch(g, build_dnn_fcopf(g, loads, m, cfg), &m);
  CHECK(d.cost >= t.cost - 1e-6);
  for (const auto& p : d.predicted) CHECK(p.forward_rocof >= cfg.rocof_threshold - 1e-6);

  FcopfConfig impossible;
  impossible.nadir_threshold = 59.999999;
  impossible.rocof_threshold = -1e-6;
  CHECK_THROWS_AS(solve_dispatch(g, build_dnn_fcopf(g, loads, m, impossible), &m), Error);
}

TEST_CASE("DNN-FCOPF rejects a model with the wrong layout") {
  const auto& g = fixture::bundled();
  const auto wrong = make_model({3, 4, 2}, 1);
  CHECK_THROWS_AS(build_dnn_fcopf(g, g.nominal_loads(), wrong, FcopfConfig{}), Error);
}

TEST_CASE("readback re-checks the network equations") {
  const auto& g = fixture::bundled();
  const auto p = build_topf(g, g.nominal_loads());
  auto sol = solve_opf(p);
  REQUIRE(sol.status == SolveStatus::optimal);
  CHECK_NOTHROW(extract_dispatch(g, p, sol));
  sol.values[p.output_var[0]] += 5.0;
  try {
    extract_dispatch(g, p, sol);
    FAIL("a corrupted solution was accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::numerical);
  }
}

TEST_CASE("dispatch JSON round trip") {
  const auto& g = fixture::bundled();
  const auto d = solve_dispatch(g, build_lfcopf(g, scaled_loads(g, 1.2), FcopfConfig{}));
  const auto text = dispatch_to_json(g, d);
  const auto back = dispatch_from_json(g, text);
  CHECK(back.kind == ModelKind::lfcopf);
  CHECK(back.group_output == d.group_output);
  CHECK(back.load_mw == d.load_mw);
  CHECK(back.cost == d.cost);
  CHECK(dispatch_to_json(g, back) == text);
  CHECK(text.find("solve_time") == std::string::npos);
  CHECK_THROWS_AS(dispatch_from_json(g, "{}"), Error);
}

TEST_CASE("model kind names") {
  for (auto k : {ModelKind::topf, ModelKind::lfcopf, ModelKind::dnnfcopf}) CHECK(parse_model_kind(to_string(k)) == k);
  CHECK_THROWS_AS(parse_model_kind("acopf"), Error);
}
