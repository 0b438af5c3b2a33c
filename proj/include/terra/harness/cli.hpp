#pragma once

// Command-line front end. Exit codes: 0 success, 1 scenario/config error,
// 2 numerical failure (the failure time is printed when known).

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "terra/errors.hpp"
#include "terra/harness/experiments.hpp"
#include "terra/harness/report.hpp"
#include "terra/harness/scenario.hpp"

namespace terra::harness {

enum ExitCode : int { kExitOk = 0, kExitScenario = 1, kExitNumerical = 2 };

namespace cli_detail {

namespace fs = std::filesystem;

struct Options {
  std::string scenario;
  std::string out = "runs";
  std::optional<std::uint64_t> seed;
  std::optional<std::string> model;
};

class Output {
 public:
  explicit Output(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  template <class Writer>
  std::string write(const std::string& name, Writer&& writer) {
    const fs::path p = dir_ / name;
    std::ofstream os(p, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + p.string());
    writer(os);
    files_.push_back(p.string());
    return p.string();
  }

  void write_report(nlohmann::json doc) {
    doc["files"] = files_;
    const fs::path p = dir_ / "report.json";
    std::ofstream os(p, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + p.string());
    os << doc.dump(2) << '\n';
  }

  const std::vector<std::string>& files() const { return files_; }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
};

inline Scenario load(const Options& o) {
  Scenario sc = load_scenario(o.scenario);
  if (o.seed) sc.seed = *o.seed;
  return sc;
}

inline ModelKind model_or(const Options& o, ModelKind fallback) {
  if (!o.model) return fallback;
  try {
    return parse_model_kind(*o.model);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("--model: ") + e.what());
  }
}

inline void run_simulate(const Options& o, std::ostream& log) {
  const Scenario sc = load(o);
  const ModelKind kind = model_or(o, ModelKind::coupled);
  const VehicleModel m = sc.model(kind);
  const Trajectory traj = simulate(m, settled_state(m, sc.start), sc.simulation_config());
  Output out(o.out);
  out.write("trajectory_" + to_string(kind) + ".csv",
            [&](std::ostream& os) { csv::write_trajectory(os, traj); });
  nlohmann::json doc = report_document(sc, {});
  doc["model"] = to_string(kind);
  doc["liftoff_events"] = traj.liftoff_events;
  out.write_report(std::move(doc));
  log << "simulate: " << traj.samples.size() << " samples written to " << o.out << '\n';
}

inline void run_compare_models(const Options& o, std::ostream& log) {
  const Scenario sc = load(o);
  const ModelComparison c = compare_models(sc);
  Output out(o.out);
  out.write("trajectory_coupled.csv", [&](std::ostream& os) { csv::write_trajectory(os, c.coupled); });
  out.write("trajectory_bicycle.csv", [&](std::ostream& os) { csv::write_trajectory(os, c.bicycle); });
  out.write("separation.csv", [&](std::ostream& os) { write_separation(os, c); });
  nlohmann::json doc = report_document(sc, {});
  doc["final_separation"] = c.final_separation();
  doc["max_separation"] = c.max_separation();
  out.write_report(std::move(doc));
  log << "compare-models: final separation " << csv::number(c.final_separation()) << " m\n";
}

inline void print_run(std::ostream& log, const RunReport& r) {
  log << r.model << ": ";
  if (!r.error.empty()) {
    log << "failed: " << r.error << '\n';
    return;
  }
  log << "final n = " << (r.final_estimate ? csv::number(*r.final_estimate) : "-")
      << ", mse = " << (r.mse ? csv::number(*r.mse) : "-") << ", converged at "
      << (r.convergence_time ? csv::number(*r.convergence_time) + " s" : "never") << " (true n "
      << csv::number(r.true_n) << ")\n";
}

inline void run_estimate(const Options& o, std::ostream& log) {
  const Scenario sc = load(o);
  const ModelKind kind = model_or(o, ModelKind::coupled);
  const ObservationSet obs = generate_observations(sc);
  const FilterTuning& tuning = sc.filters.at(kind);
  EstimationOutcome outcome;
  outcome.model = kind;
  outcome.tuning = tuning;
  outcome.trace = estimate(sc, kind, tuning, obs);  // numerical failures propagate
  Output out(o.out);
  out.write("observations.csv", [&](std::ostream& os) { write_observations(os, obs.noisy); });
  out.write("truth.csv", [&](std::ostream& os) { csv::write_trajectory(os, obs.truth); });
  out.write("estimate_" + to_string(kind) + ".csv",
            [&](std::ostream& os) { csv::write_estimate(os, *outcome.trace); });
  RunReport r = make_report(sc, outcome);
  r.files = out.files();
  out.write_report(report_document(sc, {r}));
  print_run(log, r);
}

inline void run_compare_estimators(const Options& o, std::ostream& log) {
  const Scenario sc = load(o);
  const EstimatorComparison c = compare_estimators(sc);
  Output out(o.out);
  out.write("observations.csv",
            [&](std::ostream& os) { write_observations(os, c.observations.noisy); });
  out.write("truth.csv", [&](std::ostream& os) { csv::write_trajectory(os, c.observations.truth); });
  std::vector<RunReport> runs;
  for (const EstimationOutcome* e : {&c.coupled, &c.bicycle}) {
    RunReport r = make_report(sc, *e);
    if (e->ok()) {
      r.files.push_back(out.write("estimate_" + to_string(e->model) + ".csv",
                                  [&](std::ostream& os) { csv::write_estimate(os, *e->trace); }));
    }
    print_run(log, r);
    runs.push_back(std::move(r));
  }
  out.write_report(report_document(sc, runs));
  if (!c.coupled.ok() || !c.bicycle.ok()) {
    const EstimationOutcome& bad = c.coupled.ok() ? c.bicycle : c.coupled;
    throw NumericalError(to_string(bad.model) + " estimator: " + bad.error);
  }
}

inline void run_sweep(const Options& o, std::ostream& log) {
  const Scenario sc = load(o);
  if (sc.sweep.alpha.empty() || sc.sweep.process_noise.empty()) {
    throw ConfigError("scenario key 'sweep': alpha and process_noise grids are required");
  }
  const ModelKind kind = model_or(o, ModelKind::coupled);
  const SweepResult r = sweep_filter_params(sc, kind);
  Output out(o.out);
  out.write("sweep_" + to_string(kind) + ".csv", [&](std::ostream& os) { write_sweep(os, r); });
  nlohmann::json doc = report_document(sc, {});
  doc["model"] = to_string(kind);
  doc["cells"] = r.ranked.size() + r.failed.size();
  doc["failed_cells"] = r.failed.size();
  if (!r.ranked.empty()) {
    doc["best"] = {{"alpha", r.best().alpha},
                   {"process_noise", r.best().process_noise},
                   {"mse", *r.best().mse}};
    log << "sweep: best alpha " << csv::number(r.best().alpha) << ", R_n "
        << csv::number(r.best().process_noise) << ", mse " << csv::number(*r.best().mse) << '\n';
  }
  out.write_report(std::move(doc));
}

}  // namespace cli_detail

inline int run_cli(int argc, const char* const* argv, std::ostream& log = std::cout,
                   std::ostream& err = std::cerr) {
  using namespace cli_detail;
  CLI::App app{"terra: wheeled-vehicle terramechanics simulation and sinkage-exponent estimation"};
  app.require_subcommand(1);
  Options opt;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--scenario", opt.scenario, "scenario YAML file")->required();
    sub->add_option("--out", opt.out, "output directory")->capture_default_str();
    sub->add_option("--seed", opt.seed, "noise seed (overrides the scenario file)");
  };
  auto add_model = [&](CLI::App* sub) {
    sub->add_option("--model", opt.model, "coupled|bicycle");
  };
  CLI::App* simulate_cmd = app.add_subcommand("simulate", "forward simulation of one model");
  CLI::App* compare_models_cmd = app.add_subcommand("compare-models", "coupled vs. bicycle forward runs");
  CLI::App* estimate_cmd = app.add_subcommand("estimate", "estimate the sinkage exponent");
  CLI::App* compare_est_cmd =
      app.add_subcommand("compare-estimators", "both estimators on one observation stream");
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "filter parameter grid search");
  for (CLI::App* sub : {simulate_cmd, compare_models_cmd, estimate_cmd, compare_est_cmd, sweep_cmd}) {
    add_common(sub);
  }
  for (CLI::App* sub : {simulate_cmd, estimate_cmd, sweep_cmd}) add_model(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, log, err);
    return code == 0 ? kExitOk : kExitScenario;
  }

  try {
    if (simulate_cmd->parsed()) run_simulate(opt, log);
    if (compare_models_cmd->parsed()) run_compare_models(opt, log);
    if (estimate_cmd->parsed()) run_estimate(opt, log);
    if (compare_est_cmd->parsed()) run_compare_estimators(opt, log);
    if (sweep_cmd->parsed()) run_sweep(opt, log);
  } catch (const ConfigError& e) {
    err << "scenario error: " << e.what() << '\n';
    return kExitScenario;
  } catch (const SimulationError& e) {
    err << "numerical failure at " << e.what() << '\n';
    return kExitNumerical;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitScenario;
  }
  return kExitOk;
}

}  // namespace terra::harness
