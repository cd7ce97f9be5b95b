// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any FAIL.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "fcopf/cli.hpp"
#include "fcopf/harness.hpp"
#include "support.hpp"

using namespace fcopf;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

// Tolerances.
constexpr double kRocofSlopeRel = 0.02;
constexpr double kNadirMae = 0.02;   // Hz
constexpr double kRocofMae = 0.02;   // Hz/s
constexpr double kEncodingTol = 1e-6;
constexpr double kCostTol = 1e-6;    // $/h
constexpr double kBindingTol = 1e-6; // Hz/s
constexpr double kBindingLoad = 1.4;
constexpr double kNadirFloor = 59.45;
constexpr double kRocofFloor = -0.55;
constexpr double kLpTol = 1e-7;
constexpr double kGradTol = 1e-4;
constexpr double kFastSolve = 1.0;   // s
constexpr double kDnnSolve = 60.0;   // s

int failures = 0;

void report(int id, bool ok, const std::string& what, const std::string& detail) {
  if (!ok) ++failures;
  std::printf("%s [%d] %s: %s\n", ok ? "PASS" : "FAIL", id, what.c_str(), detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... v) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, v...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int run_pipeline_cli(const fs::path& dir) {
  fs::remove_all(dir);
  ::setenv(kOutputDirEnv, dir.c_str(), 1);
  std::ostringstream out, err;
  const int code = cli_main({"fcopf", "pipeline", "--seed", "42"}, out, err);
  ::unsetenv(kOutputDirEnv);
  if (code != 0) std::cerr << err.str();
  return code;
}

bool same_tree(const fs::path& a, const fs::path& b, std::string& why) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(a))
    if (e.is_regular_file()) files.push_back(fs::relative(e.path(), a));
  std::size_t count_b = 0;
  for (const auto& e : fs::recursive_directory_iterator(b))
    if (e.is_regular_file()) ++count_b;
  if (count_b != files.size()) {
    why = fmt("%zu vs %zu files", files.size(), count_b);
    return false;
  }
  for (const auto& f : files) {
    if (!fs::exists(b / f) || read_file((a / f).string()) != read_file((b / f).string())) {
      why = f.string() + " differs";
      return false;
    }
  }
  why = fmt("%zu files identical", files.size());
  return true;
}

// 1. Linearized RoCoF against the simulated centre-of-inertia slope.
void criterion_rocof_slope(const GridCase& g) {
  const auto loads = g.nominal_loads();
  const auto op = make_operating_point(g, default_dispatch(g, loads), loads);
  double worst = 0;
  for (const auto& c : credible_contingencies(g)) {
    const double a = analytic_initial_rocof(g, op, c);
    const double s = coi_initial_slope(simulate_trip(g, op, c, SimConfig{}), 0.05);
    worst = std::max(worst, std::fabs(s - a) / std::fabs(a));
  }
  report(1, worst <= kRocofSlopeRel, "analytic RoCoF vs simulated COI slope",
         fmt("worst relative gap %.3f%% (limit %.0f%%)", 100 * worst, 100 * kRocofSlopeRel));
}

// 2. Held-out accuracy from the pipeline's training summary.
void criterion_heldout(const fs::path& run) {
  const auto t = json::parse(read_file((run / "training.json").string()));
  const double n = t["heldout"]["nadir_mae"], r = t["heldout"]["rocof_mae"];
  const std::size_t rows = t["train_rows"].get<std::size_t>() + t["heldout_rows"].get<std::size_t>();
  report(2, n < kNadirMae && r < kRocofMae && rows == 8000, "held-out MAE",
         fmt("nadir %.3g Hz, rocof %.3g Hz/s over %zu held-out of %zu rows (limit %.2g each)", n, r,
             t["heldout_rows"].get<std::size_t>(), rows, kNadirMae));
}

// 3. Embedded network equals the forward pass.
void criterion_encoding(const GridCase& g, const MlpModel& model, const FcopfConfig& fc) {
  const auto loads = g.nominal_loads();
  const auto credible = credible_contingencies(g);
  EncodeOptions opt;
  opt.mode = fc.encode_mode;
  double worst = 0;
  std::size_t samples = 0, failed = 0;
  for (std::size_t i = 0; i < credible.size(); ++i) {
    const std::size_t n = 1000 / credible.size() + (i < 1000 % credible.size() ? 1 : 0);
    const auto box = operating_box(g, loads, model, credible[i]);
    const auto r = verify_encoding(model, box, propagate_bounds(model, box), n, 1000 + i, opt);
    worst = std::max(worst, r.max_deviation);
    samples += r.samples;
    failed += r.failures;
  }

  MlpModel tiny = make_model({2, 2, 1}, 5);
  Rng rng(6);
  for (auto& l : tiny.layers)
    for (auto& b : l.b) b = rng.uniform(-0.5, 0.5);
  const InputBox box{{-1, -1}, {1, 1}};
  const auto nb = propagate_bounds(tiny, box);
  double grid_worst = 0;
  for (int i = 0; i <= 20; ++i)
    for (int j = 0; j <= 20; ++j) {
      MilpProblem p;
      const double x0 = -1 + 0.1 * i, x1 = -1 + 0.1 * j;
      const auto a = p.lp.add_variable("x0", x0, x0), b = p.lp.add_variable("x1", x1, x1);
      const auto frag = encode_network(p, tiny, nb, {LinExpr::of(a), LinExpr::of(b)}, opt);
      const double expect = oracle::forward_loop(tiny, {x0, x1})[0];
      for (double sense : {1.0, -1.0}) {
        p.lp.cost[frag.outputs[0]] = sense;
        const auto s = solve_milp(p);
        grid_worst = s.status == SolveStatus::optimal
                         ? std::max(grid_worst, std::fabs(s.values[frag.outputs[0]] - expect))
                         : std::numeric_limits<double>::infinity();
      }
    }
  report(3, failed == 0 && worst < kEncodingTol && grid_worst < kEncodingTol, "MILP encoding equals forward pass",
         fmt("trained net %zu samples max dev %.2e, 2-2-1 grid 441 points max dev %.2e (limit %.0e)", samples, worst,
             grid_worst, kEncodingTol));
}

struct Solved {
  DispatchResult topf, lfcopf, dnn;
  double t_topf = 0, t_lfcopf = 0, t_dnn = 0;  // build plus solve, s
};

Solved solve_three(const GridCase& g, const MlpModel& model, const FcopfConfig& fc, const MilpOptions& milp,
                   double scale) {
  const auto loads = scaled_loads(g, scale);
  Solved s;
  auto t0 = std::chrono::steady_clock::now();
  s.topf = solve_dispatch(g, build_topf(g, loads, fc.segments), nullptr, milp);
  s.t_topf = seconds_since(t0);
  t0 = std::chrono::steady_clock::now();
  s.lfcopf = solve_dispatch(g, build_lfcopf(g, loads, fc), nullptr, milp);
  s.t_lfcopf = seconds_since(t0);
  t0 = std::chrono::steady_clock::now();
  s.dnn = solve_dispatch(g, build_dnn_fcopf(g, loads, model, fc), &model, milp);
  s.t_dnn = seconds_since(t0);
  return s;
}

// 4. T-OPF <= L-FCOPF <= DNN-FCOPF.
void criterion_ordering(const Solved& base, const Solved& high) {
  auto ordered = [](const Solved& s) {
    return s.topf.cost <= s.lfcopf.cost + kCostTol && s.lfcopf.cost <= s.dnn.cost + kCostTol;
  };
  report(4, ordered(base) && ordered(high), "cost ordering T-OPF <= L-FCOPF <= DNN-FCOPF",
         fmt("100%%: %.4f / %.4f / %.4f, 120%%: %.4f / %.4f / %.4f $/h", base.topf.cost, base.lfcopf.cost,
             base.dnn.cost, high.topf.cost, high.lfcopf.cost, high.dnn.cost));
}

// 5. The L-FCOPF RoCoF limit binds once load is high enough.
void criterion_binding(const GridCase& g, const FcopfConfig& fc) {
  const auto d = solve_dispatch(g, build_lfcopf(g, scaled_loads(g, kBindingLoad), fc));
  double steepest = 0;
  std::string at;
  for (const auto& c : credible_contingencies(g)) {
    const double r = analytic_initial_rocof(g, d.operating_point(), c);
    if (r < steepest) steepest = r, at = unit_name(g, c);
  }
  report(5, std::fabs(steepest - fc.rocof_threshold) <= kBindingTol, "L-FCOPF RoCoF limit binds",
         fmt("%.0f%% load: steepest linearized RoCoF %.9f Hz/s at %s (target %.2f +- %.0e)", 100 * kBindingLoad,
             steepest, at.c_str(), fc.rocof_threshold, kBindingTol));
}

// 6. High-load G11 trip, re-simulated from the written dispatch files.
void criterion_high_load(const GridCase& g, const fs::path& run, const PipelineConfig& cfg) {
  const UnitId trip = parse_unit(g, "G11");
  auto sim = [&](const char* file) {
    const auto d = dispatch_from_json(g, read_file((run / "high_load" / file).string()));
    return measure(simulate_trip(g, d.operating_point(), trip, cfg.sim), cfg.sim);
  };
  const auto t = sim("dispatch_topf.json"), d = sim("dispatch_dnnfcopf.json");
  const bool topf_violates = t.nadir < cfg.fcopf.nadir_threshold || t.rocof < cfg.fcopf.rocof_threshold;
  const bool dnn_ok = d.nadir >= kNadirFloor && d.rocof >= kRocofFloor;
  report(6, topf_violates && dnn_ok, "120% load G11 trip",
         fmt("T-OPF %.4f Hz / %.4f Hz/s (%s), DNN-FCOPF %.4f Hz / %.4f Hz/s (floors %.2f, %.2f)", t.nadir, t.rocof,
             topf_violates ? "violates" : "within limits", d.nadir, d.rocof, kNadirFloor, kRocofFloor));
}

// 7. Solver against dense oracles.
void criterion_solver() {
  Rng rng(7007);
  double worst_lp = 0;
  int lp_bad = 0;
  for (int i = 0; i < 50; ++i) {
    const auto lp = fixture::random_lp(rng, 10, 8);
    const auto ref = oracle::tableau_simplex(lp);
    const auto s = solve_lp(lp);
    if (!ref.feasible || s.status != SolveStatus::optimal) {
      ++lp_bad;
      continue;
    }
    worst_lp = std::max(worst_lp, std::fabs(s.objective - ref.objective) / std::max(1.0, std::fabs(ref.objective)));
  }
  double worst_milp = 0;
  int milp_bad = 0, feasible = 0;
  for (int i = 0; i < 20; ++i) {
    const auto p = fixture::random_milp(rng);
    const auto ref = oracle::enumerate_milp(p);
    MilpOptions opt;
    opt.gap = 1e-9;
    const auto s = solve_milp(p, opt);
    if (!ref.feasible) {
      if (s.status != SolveStatus::infeasible) ++milp_bad;
      continue;
    }
    ++feasible;
    if (s.status != SolveStatus::optimal) {
      ++milp_bad;
      continue;
    }
    worst_milp =
        std::max(worst_milp, std::fabs(s.objective - ref.objective) / std::max(1.0, std::fabs(ref.objective)));
  }
  report(7, lp_bad == 0 && milp_bad == 0 && worst_lp <= kLpTol && worst_milp <= kLpTol,
         "LP and MILP against oracles",
         fmt("50 LPs worst %.2e, 20 MILPs (%d feasible) worst %.2e, status mismatches %d (limit %.0e)", worst_lp,
             feasible, worst_milp, lp_bad + milp_bad, kLpTol));
}

// 8. Backpropagation against central differences.
void criterion_gradient() {
  Rng rng(8008);
  double worst = 0;
  int models = 0;
  for (std::uint64_t seed = 1; models < 50; ++seed) {
    MlpModel m = make_model({4, 6, 5, 2}, seed);
    for (auto& l : m.layers)
      for (auto& b : l.b) b = rng.uniform(-0.5, 0.5);
    Matrix x(5, 4), y(5, 2);
    for (auto& v : x.data()) v = rng.uniform(-1, 1);
    for (auto& v : y.data()) v = rng.uniform(-1, 1);
    auto loss = [&] {
      Matrix p(5, 2);
      for (std::size_t r = 0; r < 5; ++r) {
        const auto o = oracle::forward_loop(m, std::vector<double>(x.row(r).begin(), x.row(r).end()));
        p(r, 0) = o[0], p(r, 1) = o[1];
      }
      return oracle::mse_loop(p, y);
    };
    // Skip models with a pre-activation near a kink.
    double margin = 1e300;
    for (std::size_t r = 0; r < 5; ++r) {
      std::vector<double> a(x.row(r).begin(), x.row(r).end());
      for (std::size_t l = 0; l + 1 < m.layers.size(); ++l) {
        std::vector<double> z(m.layers[l].b);
        for (std::size_t i = 0; i < a.size(); ++i)
          for (std::size_t j = 0; j < z.size(); ++j) z[j] += a[i] * m.layers[l].W(i, j);
        for (auto& v : z) margin = std::min(margin, std::fabs(v)), v = std::max(v, 0.0);
        a = z;
      }
    }
    if (margin < 1e-3) continue;
    ++models;
    const auto g = gradient(m, x, y);
    const double h = 1e-5;
    auto probe = [&](double& p, double analytic) {
      const double keep = p;
      p = keep + h;
      const double up = loss();
      p = keep - h;
      const double down = loss();
      p = keep;
      if (std::fabs(analytic) > 1e-6) worst = std::max(worst, std::fabs((up - down) / (2 * h) - analytic) / std::fabs(analytic));
    };
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
      for (std::size_t k = 0; k < m.layers[l].W.data().size(); ++k) probe(m.layers[l].W.data()[k], g.layers[l].W.data()[k]);
      for (std::size_t k = 0; k < m.layers[l].b.size(); ++k) probe(m.layers[l].b[k], g.layers[l].b[k]);
    }
  }
  report(8, worst < kGradTol, "gradient vs finite differences",
         fmt("50 models, worst relative error %.2e (limit %.0e)", worst, kGradTol));
}

// 10. Solve times.
void criterion_timing(const Solved& base, const Solved& high) {
  const double fast = std::max({base.t_topf, base.t_lfcopf, high.t_topf, high.t_lfcopf});
  const double dnn = std::max(base.t_dnn, high.t_dnn);
  report(10, fast < kFastSolve && dnn < kDnnSolve, "solve times",
         fmt("T-OPF/L-FCOPF worst %.3f s (limit %.0f), DNN-FCOPF worst %.2f s (limit %.0f)", fast, kFastSolve, dnn,
             kDnnSolve));
}

}  // namespace

int main() {
  try {
    const auto root = fs::temp_directory_path() / "fcopf_acceptance";
    const fs::path run_a = root / "a", run_b = root / "b";
    const PipelineConfig cfg;
    const GridCase& g = fixture::bundled();

    criterion_rocof_slope(g);

    const int code_a = run_pipeline_cli(run_a);
    const int code_b = run_pipeline_cli(run_b);
    if (code_a != 0 || code_b != 0) {
      report(9, false, "pipeline --seed 42 is byte-identical", fmt("pipeline exit codes %d, %d", code_a, code_b));
      std::printf("acceptance: pipeline failed, remaining criteria not evaluated\n");
      return 1;
    }

    criterion_heldout(run_a);
    const MlpModel model = load_model((run_a / "model.json").string());
    const FcopfConfig fc = cfg.fcopf_config(g);
    criterion_encoding(g, model, fc);
    const Solved base = solve_three(g, model, fc, cfg.milp, 1.0);
    const Solved high = solve_three(g, model, fc, cfg.milp, 1.2);
    criterion_ordering(base, high);
    criterion_binding(g, fc);
    criterion_high_load(g, run_a, cfg);
    criterion_solver();
    criterion_gradient();
    std::string why;
    const bool same = same_tree(run_a, run_b, why);
    report(9, same, "pipeline --seed 42 is byte-identical", why);
    criterion_timing(base, high);
  } catch (const std::exception& e) {
    std::printf("acceptance: aborted: %s\n", e.what());
    return 1;
  }
  std::printf("acceptance: %d failed\n", failures);
  return failures == 0 ? 0 : 1;
}
