#pragma once

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

#include "terra/harness/experiments.hpp"
#include "terra/harness/metrics.hpp"
#include "terra/harness/scenario.hpp"

namespace terra::harness {

/// Machine-readable summary of one estimation run.
struct RunReport {
  std::string scenario;
  std::string model;
  std::string soil;
  double true_n = 0.0;
  std::uint64_t seed = 0;
  FilterTuning tuning;
  std::optional<double> mse;
  std::optional<double> final_estimate;
  std::optional<double> convergence_time;
  bool diverged = false;
  std::string error;
  std::optional<double> failure_time;
  std::vector<std::string> files;
};

inline RunReport make_report(const Scenario& sc, const EstimationOutcome& o) {
  RunReport r;
  r.scenario = sc.name;
  r.model = to_string(o.model);
  r.soil = sc.soil_name;
  r.true_n = sc.true_n();
  r.seed = sc.seed;
  r.tuning = o.tuning;
  if (o.ok()) {
    if (!o.trace->entries.empty()) {
      r.mse = mse(*o.trace, sc.true_n());
      r.final_estimate = o.trace->final_estimate();
      r.convergence_time = convergence_time(*o.trace, sc.true_n());
    }
    r.diverged = o.trace->diverged;
  } else {
    r.error = o.error;
    if (o.failure_time > 0.0) r.failure_time = o.failure_time;
  }
  return r;
}

inline nlohmann::json scenario_echo(const Scenario& sc) {
  nlohmann::json j;
  j["name"] = sc.name;
  j["source"] = sc.source.string();
  j["soil"] = sc.soil_name;
  j["vehicle"] = sc.vehicle_name;
  j["true_n"] = sc.true_n();
  j["duration"] = sc.duration;
  j["dt"] = sc.dt;
  j["observation_rate"] = sc.observation_rate;
  j["noise"] = {{"accel", sc.noise.accel}, {"gyro", sc.noise.gyro}};
  j["seed"] = sc.seed;
  j["slip"] = sc.vehicle.slip;
  j["terrain_kind"] = std::string(sc.terrain.kind());
  if (const auto* s = std::get_if<SinusoidalTerrain>(&sc.terrain.profile())) {
    j["terrain_amplitude"] = s->amplitude;
  }
  auto schedule = [](const Schedule& s) {
    return nlohmann::json{{"offset", s.offset},
                          {"amplitude", s.amplitude},
                          {"frequency", s.frequency},
                          {"phase", s.phase},
                          {"per_unit_mass", s.per_unit_mass}};
  };
  j["inputs"] = {{"force", schedule(sc.inputs.force)}, {"steer", schedule(sc.inputs.steer)}};
  return j;
}

template <class T>
nlohmann::json optional_json(const std::optional<T>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline nlohmann::json to_json(const RunReport& r) {
  nlohmann::json j;
  j["model"] = r.model;
  j["true_n"] = r.true_n;
  j["seed"] = r.seed;
  j["filter"] = {{"alpha", r.tuning.alpha},
                 {"kappa", r.tuning.kappa},
                 {"process_noise", r.tuning.process_noise},
                 {"initial_mean", r.tuning.initial_mean},
                 {"initial_variance", r.tuning.initial_variance},
                 {"state_feed", r.tuning.known_states ? "truth" : "self"}};
  j["mse"] = optional_json(r.mse);
  j["final_estimate"] = optional_json(r.final_estimate);
  j["convergence_time"] = optional_json(r.convergence_time);
  j["diverged"] = r.diverged;
  j["error"] = r.error.empty() ? nlohmann::json(nullptr) : nlohmann::json(r.error);
  j["failure_time"] = optional_json(r.failure_time);
  j["files"] = r.files;
  return j;
}

inline nlohmann::json report_document(const Scenario& sc, const std::vector<RunReport>& runs) {
  nlohmann::json j;
  j["schema"] = "terra-report/1";
  j["scenario"] = scenario_echo(sc);
  j["runs"] = nlohmann::json::array();
  for (const RunReport& r : runs) j["runs"].push_back(to_json(r));
  return j;
}

}  // namespace terra::harness
