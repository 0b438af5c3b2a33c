#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "terra/estimation.hpp"
#include "terra/harness/metrics.hpp"
#include "terra/harness/noise.hpp"
#include "terra/harness/scenario.hpp"
#include "terra/simulation.hpp"

namespace terra::harness {

struct ObservationSet {
  Trajectory truth;                        // clean coupled-model run
  double truth_static_sinkage = 0.0;
  std::vector<TimedObservation> clean;
  std::vector<TimedObservation> noisy;
};

/// Ground truth from the coupled model, sampled at the observation rate, with
/// independent Gaussian noise keyed by (seed, channel, sample index).
inline ObservationSet generate_observations(const Scenario& sc) {
  const VehicleModel truth_model = sc.model(ModelKind::coupled);
  SimulationConfig cfg{sc.duration, sc.dt, sc.observation_rate};
  ObservationSet out;
  out.truth = simulate(truth_model, settled_state(truth_model, sc.start), cfg);
  out.truth_static_sinkage = truth_model.static_sinkage;
  const CounterGaussian noise(sc.seed);
  out.clean.reserve(out.truth.samples.size());
  out.noisy.reserve(out.truth.samples.size());
  for (std::size_t k = 0; k < out.truth.samples.size(); ++k) {
    const Sample& s = out.truth.samples[k];
    out.clean.push_back({s.t, s.imu});
    ImuObservation o = s.imu;
    o.a_x += noise.draw(sc.noise.accel, 0, k);
    o.a_y += noise.draw(sc.noise.accel, 1, k);
    o.a_z += noise.draw(sc.noise.accel, 2, k);
    o.w_y += noise.draw(sc.noise.gyro, 3, k);
    o.w_z += noise.draw(sc.noise.gyro, 4, k);
    out.noisy.push_back({s.t, o});
  }
  return out;
}

inline void write_observations(std::ostream& os, const std::vector<TimedObservation>& obs) {
  os << "t,ax,ay,az,wy,wz\n";
  for (const TimedObservation& o : obs) {
    os << csv::number(o.t);
    for (double v : as_array(o.imu)) os << ',' << csv::number(v);
    os << '\n';
  }
}

struct ModelComparison {
  Trajectory coupled;
  Trajectory bicycle;
  std::vector<double> t;
  std::vector<double> separation;

  double final_separation() const { return separation.empty() ? 0.0 : separation.back(); }
  double max_separation() const {
    return separation.empty() ? 0.0 : *std::max_element(separation.begin(), separation.end());
  }
};

/// Separation series between two runs sampled on the same grid.
inline void fill_separation(ModelComparison& c) {
  const std::size_t n = std::min(c.coupled.samples.size(), c.bicycle.samples.size());
  c.t.resize(n);
  c.separation.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    c.t[i] = c.coupled.samples[i].t;
    c.separation[i] = planar_separation(c.coupled.samples[i].state, c.bicycle.samples[i].state);
  }
}

/// Forward runs of both models with identical inputs; no filtering.
inline ModelComparison compare_models(const Scenario& sc) {
  ModelComparison c;
  const SimulationConfig cfg = sc.simulation_config();
  const VehicleModel coupled = sc.model(ModelKind::coupled);
  const VehicleModel bicycle = sc.model(ModelKind::bicycle);
  c.coupled = simulate(coupled, settled_state(coupled, sc.start), cfg);
  c.bicycle = simulate(bicycle, settled_state(bicycle, sc.start), cfg);
  fill_separation(c);
  return c;
}

inline void write_separation(std::ostream& os, const ModelComparison& c) {
  os << "t,separation\n";
  for (std::size_t i = 0; i < c.t.size(); ++i) {
    os << csv::number(c.t[i]) << ',' << csv::number(c.separation[i]) << '\n';
  }
}

struct EstimationOutcome {
  ModelKind model = ModelKind::coupled;
  FilterTuning tuning;
  std::optional<EstimateTrace> trace;
  std::string error;        // set when the run failed
  double failure_time = 0;  // meaningful for simulation failures

  bool ok() const { return trace.has_value(); }
};

inline EstimationSettings estimation_settings(const Scenario& sc, ModelKind model) {
  EstimationSettings s;
  s.dt = sc.dt;
  s.observation_rate = sc.observation_rate;
  s.start = sc.start;
  s.channels = ChannelSet::for_model(model);
  return s;
}

inline StateReference state_reference(const ObservationSet& obs) {
  StateReference ref;
  ref.static_sinkage = obs.truth_static_sinkage;
  ref.states.reserve(obs.truth.samples.size());
  for (const Sample& s : obs.truth.samples) ref.states.push_back(s.state);
  return ref;
}

/// Runs one estimator on the set's noisy stream; the filter's model is the
/// scenario's model with the exponent left to the filter.
inline EstimateTrace estimate(const Scenario& sc, ModelKind model, const FilterTuning& tuning,
                              const ObservationSet& obs) {
  EstimationSettings settings = estimation_settings(sc, model);
  const ukf::UkfConfig cfg = make_ukf_config(tuning, settings.channels, sc.noise);
  StateReference ref;
  if (tuning.known_states) {
    ref = state_reference(obs);
    settings.reference = &ref;
  }
  return run_estimation(sc.model(model), obs.noisy, cfg, settings);
}

/// Like `estimate` but records failures instead of throwing.
inline EstimationOutcome try_estimate(const Scenario& sc, ModelKind model, const FilterTuning& tuning,
                                      const ObservationSet& obs) {
  EstimationOutcome out;
  out.model = model;
  out.tuning = tuning;
  try {
    out.trace = estimate(sc, model, tuning, obs);
  } catch (const SimulationError& e) {
    out.error = e.what();
    out.failure_time = e.time();
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

struct EstimatorComparison {
  ObservationSet observations;
  EstimationOutcome coupled;
  EstimationOutcome bicycle;
};

/// One observation stream, both estimators. The bicycle estimator sees only
/// the planar channels. A failure in one does not abort the other.
inline EstimatorComparison compare_estimators(const Scenario& sc) {
  EstimatorComparison c;
  c.observations = generate_observations(sc);
  c.coupled = try_estimate(sc, ModelKind::coupled, sc.filters.at(ModelKind::coupled),
                           c.observations);
  c.bicycle = try_estimate(sc, ModelKind::bicycle, sc.filters.at(ModelKind::bicycle),
                           c.observations);
  return c;
}

struct SweepCell {
  double alpha = 0.0;
  double process_noise = 0.0;
  std::optional<double> mse;
  std::optional<double> final_estimate;
  std::string error;
};

struct SweepResult {
  ModelKind model = ModelKind::coupled;
  std::vector<SweepCell> ranked;  // successful cells, ascending MSE
  std::vector<SweepCell> failed;

  const SweepCell& best() const {
    if (ranked.empty()) throw std::runtime_error("sweep: no successful cell");
    return ranked.front();
  }
};

/// Grid search over (alpha, R_n) on one shared observation stream.
inline SweepResult sweep_filter_params(const Scenario& sc, ModelKind model,
                                       const std::vector<double>& alphas,
                                       const std::vector<double>& process_noises,
                                       const ObservationSet& obs) {
  if (alphas.empty() || process_noises.empty()) {
    throw std::invalid_argument("sweep: empty parameter grid");
  }
  SweepResult result;
  result.model = model;
  for (double alpha : alphas) {
    for (double rn : process_noises) {
      FilterTuning t = sc.filters.at(model);
      t.alpha = alpha;
      t.process_noise = rn;
      SweepCell cell{alpha, rn, std::nullopt, std::nullopt, {}};
      const EstimationOutcome o = try_estimate(sc, model, t, obs);
      if (o.ok() && !o.trace->entries.empty()) {
        cell.mse = mse(*o.trace, sc.true_n());
        cell.final_estimate = o.trace->final_estimate();
        result.ranked.push_back(cell);
      } else {
        cell.error = o.ok() ? "no observations" : o.error;
        result.failed.push_back(cell);
      }
    }
  }
  std::stable_sort(result.ranked.begin(), result.ranked.end(),
                   [](const SweepCell& a, const SweepCell& b) { return *a.mse < *b.mse; });
  return result;
}

inline SweepResult sweep_filter_params(const Scenario& sc, ModelKind model) {
  const ObservationSet obs = generate_observations(sc);
  return sweep_filter_params(sc, model, sc.sweep.alpha, sc.sweep.process_noise, obs);
}

inline void write_sweep(std::ostream& os, const SweepResult& r) {
  os << "rank,alpha,process_noise,mse,final_estimate,error\n";
  int rank = 1;
  for (const SweepCell& c : r.ranked) {
    os << rank++ << ',' << csv::number(c.alpha) << ',' << csv::number(c.process_noise) << ','
       << csv::number(*c.mse) << ',' << csv::number(*c.final_estimate) << ",\n";
  }
  for (const SweepCell& c : r.failed) {
    std::string why = c.error;
    std::replace(why.begin(), why.end(), ',', ';');
    std::replace(why.begin(), why.end(), '\n', ' ');
    os << ',' << csv::number(c.alpha) << ',' << csv::number(c.process_noise) << ",,," << why
       << '\n';
  }
}

}  // namespace terra::harness
