#include "fcopf/cli.hpp"

#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "fcopf/harness.hpp"
#include "fcopf/report.hpp"

namespace fcopf {

namespace {

struct Common {
  std::string config = "default";
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "pipeline config file, or 'default'")->capture_default_str();
  cmd->add_option("--seed", c.seed, "run seed; overrides the config");
}

PipelineConfig resolve(const Common& c) {
  PipelineConfig cfg = load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  return cfg;
}

std::string seconds(double s) { return format_double(std::round(s * 1000) / 1000); }

MlpModel require_model(const std::string& path) {
  if (!std::filesystem::exists(path))
    throw Error(ErrorKind::io, path,
                "no trained model here; run `fcopf train` (or `fcopf pipeline`) first, or pass --model-file");
  return load_model(path);
}

void print_metrics(std::ostream& out, const std::string& prefix, const ContingencyCheck& c) {
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string("N/A"); };
  out << prefix << c.contingency << ": nadir " << format_double(c.simulated.nadir) << " Hz (pred "
      << opt(c.predicted_nadir) << ", err " << opt(c.nadir_error) << " %), rocof " << format_double(c.simulated.rocof)
      << " Hz/s (pred " << opt(c.predicted_rocof) << ", err " << opt(c.rocof_error) << " %)"
      << (c.nadir_ok && c.rocof_ok ? "" : "  [threshold violated]") << '\n';
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Frequency-constrained DC-OPF with an embedded ReLU predictor", "fcopf"};
  app.require_subcommand(1);
  Common common;

  auto* case_cmd = app.add_subcommand("case", "grid case utilities")->require_subcommand(1);
  auto* case_check = case_cmd->add_subcommand("check", "parse the case and check its reference dispatch");
  std::string case_path;
  case_check->add_option("--case", case_path, "case file; default from the config");
  add_common(case_check, common);

  auto* ds_cmd = app.add_subcommand("dataset", "training data")->require_subcommand(1);
  auto* ds_gen = ds_cmd->add_subcommand("generate", "sample and label scenarios into <out>/dataset.tsv");
  std::optional<std::size_t> rows;
  ds_gen->add_option("--rows", rows, "row count; overrides the config")->check(CLI::PositiveNumber);
  add_common(ds_gen, common);

  auto* train_cmd = app.add_subcommand("train", "fit the predictor to <out>/dataset.tsv");
  std::string dataset_path;
  train_cmd->add_option("--dataset", dataset_path, "dataset file; default <out>/dataset.tsv");
  add_common(train_cmd, common);

  std::string model_name, model_file, contingency, dispatch_path, scenario_name;
  std::optional<double> load_scale;
  auto* solve_cmd = app.add_subcommand("solve", "solve one dispatch model");
  solve_cmd->add_option("--model", model_name, "topf | lfcopf | dnnfcopf")
      ->required()
      ->check(CLI::IsMember({"topf", "lfcopf", "dnnfcopf"}));
  solve_cmd->add_option("--load-scale", load_scale, "uniform load scale")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--model-file", model_file, "trained predictor; default <out>/model.json");
  add_common(solve_cmd, common);

  auto* validate_cmd = app.add_subcommand("validate", "simulate a solved dispatch and score its predictions");
  validate_cmd->add_option("--model", model_name, "reads <out>/dispatch_<model>.json")
      ->check(CLI::IsMember({"topf", "lfcopf", "dnnfcopf"}));
  validate_cmd->add_option("--dispatch", dispatch_path, "dispatch file");
  validate_cmd->add_option("--contingency", contingency, "unit to trip; default every credible one");
  add_common(validate_cmd, common);

  auto* compare_cmd = app.add_subcommand("compare", "solve and validate all three models");
  compare_cmd->add_option("--scenario", scenario_name, "scenario from the config; default the first");
  compare_cmd->add_option("--load-scale", load_scale, "uniform load scale")->check(CLI::PositiveNumber);
  compare_cmd->add_option("--contingency", contingency, "unit to trip");
  compare_cmd->add_option("--model-file", model_file, "trained predictor; default <out>/model.json");
  add_common(compare_cmd, common);

  auto* pipeline_cmd = app.add_subcommand("pipeline", "dataset, training and every configured comparison");
  add_common(pipeline_cmd, common);

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "fcopf: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    PipelineConfig cfg = resolve(common);
    const std::string dir = output_dir(cfg);
    if (model_file.empty()) model_file = dir + "/model.json";

    if (case_check->parsed()) {
      const GridCase grid = load_case(case_path.empty() ? cfg.resolved_case_path() : case_path);
      const auto loads = grid.nominal_loads();
      const auto op = make_operating_point(grid, default_dispatch(grid, loads), loads);
      double capacity = 0, demand = 0;
      for (const auto& g : grid.gen_groups) capacity += g.unit_count * g.p_max;
      for (double l : loads) demand += l;
      out << "case " << grid.fingerprint << ": " << grid.buses.size() << " buses, " << grid.lines.size() << " lines, "
          << grid.gen_groups.size() << " generator groups, " << all_units(grid).size() << " units, "
          << grid.loads.size() << " loads\n";
      out << "capacity " << format_double(capacity) << " MW, load " << format_double(demand) << " MW\n";
      const auto violations = check_operating_point(grid, op);
      for (const auto& v : violations)
        out << "violation: " << to_string(v.kind) << " at " << v.element << ", " << format_double(v.magnitude) << '\n';
      if (!violations.empty()) throw Error(ErrorKind::invariant, "case check", "reference dispatch is infeasible");
      out << "reference dispatch feasible\n";
      return 0;
    }

    const GridCase grid = load_case(cfg.resolved_case_path());
    std::filesystem::create_directories(dir);

    if (ds_gen->parsed()) {
      const std::size_t n = rows.value_or(cfg.dataset_rows);
      const auto scenarios = sample_scenarios(grid, cfg.sampling, n, cfg.dataset_seed());
      const auto labeled = label_scenarios(grid, scenarios, cfg.sim);
      write_dataset(dir + "/dataset.tsv", make_manifest(grid, cfg.sampling, cfg.sim, cfg.dataset_seed(), n), labeled);
      out << "wrote " << n << " rows to " << dir << "/dataset.tsv\n";
      return 0;
    }

    if (train_cmd->parsed()) {
      const std::string path = dataset_path.empty() ? dir + "/dataset.tsv" : dataset_path;
      if (!std::filesystem::exists(path))
        throw Error(ErrorKind::io, path, "no dataset here; run `fcopf dataset generate` first, or pass --dataset");
      const Dataset ds = read_dataset(path, grid.fingerprint);
      const Split parts = split(ds.rows, 1.0 - cfg.heldout_fraction, cfg.split_seed());
      TrainConfig tc = cfg.train;
      tc.seed = cfg.train_seed();
      const TrainResult result = train(parts.train, ds.manifest, tc);
      save_model(model_file, result.model);
      const Evaluation ev = evaluate(result.model, parts.validation);
      out << "trained on " << parts.train.size() << " rows, best epoch " << result.history.best_epoch << '\n'
          << "held-out MAE: nadir " << format_double(ev.mae[0]) << " Hz, rocof " << format_double(ev.mae[1])
          << " Hz/s over " << ev.rows << " rows\n"
          << "wrote " << model_file << '\n';
      return 0;
    }

    if (solve_cmd->parsed()) {
      const ModelKind kind = parse_model_kind(model_name);
      const auto loads = scaled_loads(grid, load_scale.value_or(1.0));
      const FcopfConfig fc = cfg.fcopf_config(grid);
      DispatchResult d;
      if (kind == ModelKind::dnnfcopf) {
        const MlpModel model = require_model(model_file);
        d = solve_dispatch(grid, build_dnn_fcopf(grid, loads, model, fc), &model, cfg.milp);
      } else {
        d = solve_dispatch(grid, kind == ModelKind::topf ? build_topf(grid, loads, fc.segments)
                                                         : build_lfcopf(grid, loads, fc),
                           nullptr, cfg.milp);
      }
      const std::string path = dir + "/dispatch_" + model_name + ".json";
      write_file(path, dispatch_to_json(grid, d) + "\n");
      out << model_name << ": cost " << format_double(d.cost) << " $/h, solve " << seconds(d.solve_time) << " s, "
          << d.nodes << " nodes\n";
      for (const auto& p : d.predicted)
        out << "  predicted " << unit_name(grid, p.contingency) << ": nadir " << format_double(p.nadir)
            << " Hz, rocof " << format_double(p.rocof) << " Hz/s\n";
      out << "wrote " << path << '\n';
      return 0;
    }

    if (validate_cmd->parsed()) {
      if (dispatch_path.empty() && model_name.empty())
        throw Error(ErrorKind::usage, "validate", "pass --model or --dispatch");
      const std::string path = dispatch_path.empty() ? dir + "/dispatch_" + model_name + ".json" : dispatch_path;
      if (!std::filesystem::exists(path))
        throw Error(ErrorKind::io, path, "no dispatch here; run `fcopf solve --model " +
                                             (model_name.empty() ? std::string("<kind>") : model_name) + "` first");
      const DispatchResult d = dispatch_from_json(grid, read_file(path));
      const FcopfConfig fc = cfg.fcopf_config(grid);
      std::vector<UnitId> units =
          contingency.empty() ? credible_contingencies(grid) : std::vector<UnitId>{parse_unit(grid, contingency)};
      out << to_string(d.kind) << " dispatch from " << path << '\n';
      for (const auto& u : units) {
        const Validation v = validate_dispatch(grid, d, u, cfg.sim);
        ContingencyCheck c{unit_name(grid, u), false, false, v.simulated, v.predicted_nadir, v.predicted_rocof,
                           v.nadir_error, v.rocof_error, v.simulated.nadir >= fc.nadir_threshold,
                           v.simulated.rocof >= fc.rocof_threshold};
        print_metrics(out, "  ", c);
      }
      return 0;
    }

    if (compare_cmd->parsed()) {
      ScenarioOverride s = cfg.scenarios.empty() ? ScenarioOverride{} : cfg.scenarios.front();
      if (!scenario_name.empty()) {
        auto it = std::find_if(cfg.scenarios.begin(), cfg.scenarios.end(),
                               [&](const ScenarioOverride& x) { return x.name == scenario_name; });
        if (it == cfg.scenarios.end()) throw Error(ErrorKind::usage, "--scenario", "no scenario named " + scenario_name);
        s = *it;
      }
      if (load_scale || !contingency.empty()) {
        if (scenario_name.empty()) s.name = "custom";
        if (load_scale) s.load_scales = {*load_scale};
        if (!contingency.empty()) s.contingency = contingency;
      }
      const MlpModel model = require_model(model_file);
      const Comparison c = compare_models(grid, model, cfg, s);
      write_comparison(grid, c, dir + "/" + s.name);
      for (const auto& m : c.report.models) {
        out << to_string(m.kind) << ": cost " << format_double(m.dispatch.cost) << " $/h, solve "
            << seconds(m.dispatch.solve_time) << " s"
            << (m.same_dispatch_as.empty() ? "" : ", same dispatch as " + m.same_dispatch_as) << '\n';
        for (const auto& chk : m.checks) print_metrics(out, "  ", chk);
      }
      if (!c.report.ood_features.empty()) {
        out << "outside the training range:";
        for (const auto& f : c.report.ood_features) out << ' ' << f;
        out << '\n';
      }
      out << "wrote " << dir << '/' << s.name << '\n';
      return 0;
    }

    if (pipeline_cmd->parsed()) {
      const PipelineResult r = run_pipeline(cfg, &out);
      out << "wrote " << dir << " (" << r.reports.size() << " scenarios)\n";
      return 0;
    }
  } catch (const Error& e) {
    err << "fcopf: " << to_string(e.kind()) << " error: " << e.what() << '\n';
    if (e.kind() == ErrorKind::usage) {
      err << '\n' << app.help();
      return 2;
    }
    return 1;
  } catch (const std::exception& e) {
    err << "fcopf: " << e.what() << '\n';
    return 1;
  }
  err << app.help();
  return 2;
}

int cli_main(int argc, char** argv) {
  return cli_main(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}

}  // namespace fcopf
