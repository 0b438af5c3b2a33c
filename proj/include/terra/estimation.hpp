#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "terra/simulation.hpp"
#include "terra/ukf.hpp"

namespace terra {

/// IMU channels fed to an estimator, in `ImuObservation` order.
struct ChannelSet {
  std::vector<std::size_t> indices;

  static ChannelSet all() { return {{0, 1, 2, 3, 4}}; }
  /// a_x, a_y, w_z: what a model without vertical dynamics can predict.
  static ChannelSet planar() { return {{0, 1, 4}}; }
  static ChannelSet for_model(ModelKind k) { return k == ModelKind::coupled ? all() : planar(); }

  std::size_t size() const { return indices.size(); }

  ukf::Vector select(const ImuObservation& o) const {
    const auto full = as_array(o);
    ukf::Vector v(static_cast<Eigen::Index>(indices.size()));
    for (std::size_t i = 0; i < indices.size(); ++i) v(Eigen::Index(i)) = full[indices[i]];
    return v;
  }

  static constexpr const char* name(std::size_t channel) {
    constexpr const char* kNames[] = {"ax", "ay", "az", "wy", "wz"};
    return kNames[channel];
  }
};

/// Diagonal observation noise for the selected channels.
inline ukf::Matrix imu_noise_covariance(const ChannelSet& ch, double sigma_accel, double sigma_gyro) {
  const auto m = static_cast<Eigen::Index>(ch.size());
  ukf::Matrix r = ukf::Matrix::Zero(m, m);
  for (std::size_t i = 0; i < ch.size(); ++i) {
    const double s = ch.indices[i] < 3 ? sigma_accel : sigma_gyro;
    r(Eigen::Index(i), Eigen::Index(i)) = s * s;
  }
  return r;
}

struct TimedObservation {
  double t = 0.0;
  ImuObservation imu;
};

struct TraceEntry {
  double t = 0.0;
  ukf::Vector mean;
  ukf::Matrix covariance;
  ukf::Vector predicted;
  ukf::Vector innovation;
  ukf::Matrix gain;
  bool singular = false;
  bool clamped = false;
};

struct EstimateTrace {
  ModelKind model = ModelKind::coupled;
  ChannelSet channels;
  std::vector<TraceEntry> entries;
  bool diverged = false;
  std::optional<double> divergence_time;

  double final_estimate() const { return entries.empty() ? NAN : entries.back().mean(0); }
};

/// Known vehicle states at the observation instants (index k at t = k / rate),
/// with the static sinkage of the model that produced them.
struct StateReference {
  std::vector<VehicleState> states;
  double static_sinkage = 0.0;
};

struct EstimationSettings {
  double dt = 1e-3;
  double observation_rate = 100.0;
  PlanarStart start;
  ChannelSet channels = ChannelSet::all();
  double lower_bound = 0.1;
  double upper_bound = 2.0;
  int divergence_run = 10;  // consecutive clamps that count as divergence
  // Null: the filter propagates its own nominal state. Otherwise each
  // prediction starts from the reference state at the previous observation.
  const StateReference* reference = nullptr;
};

/// Moves sinkage memory from one model's static datum to another's, so the
/// ground displacement is unchanged when the sinkage exponent is swapped.
inline VehicleState rebase_sinkage(VehicleState s, const VehicleModel& from, const VehicleModel& to) {
  const double shift = to.static_sinkage - from.static_sinkage;
  const double cap = 0.9 * to.params.wheel.radius;
  s.sinkage_front = std::clamp(s.sinkage_front + shift, 0.0, cap);
  s.sinkage_rear = std::clamp(s.sinkage_rear + shift, 0.0, cap);
  return s;
}

namespace detail {

inline VehicleState propagate(VehicleState s, std::size_t first_step, std::size_t steps, double dt,
                              const VehicleModel& m) {
  for (std::size_t i = 0; i < steps; ++i) {
    s = advance(s, static_cast<double>(first_step + i) * dt, dt, m).state;
  }
  return s;
}

}  // namespace detail

/// Estimates the sinkage exponent from a timestamped IMU stream.
///
/// A nominal vehicle state is kept by the filter itself. At each observation,
/// every sigma point's exponent is written into the soil model and the nominal
/// state is advanced one observation period to predict that point's IMU reading.
/// After the update, the nominal state is re-advanced with the posterior mean.
inline EstimateTrace run_estimation(const VehicleModel& base, const std::vector<TimedObservation>& obs,
                                    const ukf::UkfConfig& cfg, const EstimationSettings& settings) {
  cfg.validate();
  if (cfg.parameter_count() != 1) {
    throw std::invalid_argument("run_estimation: only the sinkage exponent is estimated (L = 1)");
  }
  if (cfg.observation_noise.rows() != static_cast<Eigen::Index>(settings.channels.size())) {
    throw std::invalid_argument("run_estimation: R_e does not match the channel set");
  }
  const std::size_t stride = steps_per_period(settings.dt, settings.observation_rate);
  const double period = static_cast<double>(stride) * settings.dt;
  const ukf::SigmaWeights weights =
      ukf::sigma_weights(cfg.parameter_count(), cfg.alpha, cfg.kappa);
  auto bounded = [&](double n) { return std::clamp(n, settings.lower_bound, settings.upper_bound); };

  EstimateTrace trace;
  trace.model = base.kind;
  trace.channels = settings.channels;

  ukf::Vector mean = cfg.initial_mean;
  ukf::Matrix cov = cfg.initial_covariance;
  mean(0) = bounded(mean(0));
  VehicleModel nominal = with_sinkage_exponent(base, mean(0));
  VehicleState state = settled_state(nominal, settings.start);
  std::size_t step = 0;
  int clamp_run = 0;

  for (const TimedObservation& o : obs) {
    if (o.t <= 0.0) continue;  // nothing to predict at the initial instant
    const double k_real = o.t / period;
    const auto k = static_cast<std::size_t>(std::llround(k_real));
    if (std::abs(k_real - double(k)) > 1e-6 || k * stride != step + stride) {
      throw std::invalid_argument("run_estimation: observation at t=" + std::to_string(o.t) +
                                  " is off the filter grid");
    }

    if (settings.reference) {
      const std::size_t prev = k - 1;
      if (prev >= settings.reference->states.size()) {
        throw std::invalid_argument("run_estimation: reference states end before the observations");
      }
      VehicleModel ref_datum = nominal;
      ref_datum.static_sinkage = settings.reference->static_sinkage;
      state = rebase_sinkage(settings.reference->states[prev], ref_datum, nominal);
    }

    const ukf::Moments prior = ukf::time_update(mean, cov, cfg.process_noise);
    const ukf::Matrix points = ukf::sigma_points(prior.mean, prior.covariance, weights.lambda);
    const auto count = points.cols();
    ukf::Matrix predictions(static_cast<Eigen::Index>(settings.channels.size()), count);
    for (Eigen::Index i = 0; i < count; ++i) {
      const VehicleModel sigma_model = with_sinkage_exponent(base, bounded(points(0, i)));
      const VehicleState start = rebase_sinkage(state, nominal, sigma_model);
      const VehicleState end = detail::propagate(start, step, stride, settings.dt, sigma_model);
      const Evaluation e = evaluate(end, o.t, sigma_model);
      predictions.col(i) = settings.channels.select(imu_output(end, e.derivative));
    }
    const ukf::Vector observed = settings.channels.select(o.imu);
    ukf::UpdateResult upd = ukf::measurement_update(predictions, weights, observed,
                                                    cfg.observation_noise, prior.mean,
                                                    prior.covariance, points);
    TraceEntry entry;
    entry.t = o.t;
    entry.singular = upd.singular;
    const double raw = upd.mean(0);
    upd.mean(0) = bounded(raw);
    entry.clamped = upd.mean(0) != raw;
    clamp_run = entry.clamped ? clamp_run + 1 : 0;
    if (clamp_run >= settings.divergence_run && !trace.diverged) {
      trace.diverged = true;
      trace.divergence_time = o.t;
    }
    mean = upd.mean;
    cov = upd.covariance;
    entry.mean = mean;
    entry.covariance = cov;
    entry.predicted = std::move(upd.predicted);
    entry.innovation = std::move(upd.innovation);
    entry.gain = std::move(upd.gain);
    trace.entries.push_back(std::move(entry));

    const VehicleModel posterior = with_sinkage_exponent(base, mean(0));
    if (!settings.reference) {
      state = detail::propagate(rebase_sinkage(state, nominal, posterior), step, stride,
                                settings.dt, posterior);
    }
    nominal = posterior;
    step += stride;
  }
  return trace;
}

namespace csv {

inline void write_estimate(std::ostream& os, const EstimateTrace& trace) {
  os << "t,w_hat,P_w";
  for (std::size_t c : trace.channels.indices) os << ",d_hat_" << ChannelSet::name(c);
  for (std::size_t c : trace.channels.indices) os << ",innov_" << ChannelSet::name(c);
  os << ",gain,singular,clamped\n";
  for (const TraceEntry& e : trace.entries) {
    os << number(e.t) << ',' << number(e.mean(0)) << ',' << number(e.covariance(0, 0));
    for (Eigen::Index i = 0; i < e.predicted.size(); ++i) os << ',' << number(e.predicted(i));
    for (Eigen::Index i = 0; i < e.innovation.size(); ++i) os << ',' << number(e.innovation(i));
    os << ',' << number(e.gain.size() ? e.gain.norm() : 0.0) << ',' << int(e.singular) << ','
       << int(e.clamped) << '\n';
  }
}

}  // namespace csv

}  // namespace terra
