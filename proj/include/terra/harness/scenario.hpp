#pragma once

// Scenario files: YAML with a versioned `schema` key. Vehicle and soil
// sections may be inline mappings or names of preset files under config/.

#include <yaml-cpp/yaml.h>

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "terra/errors.hpp"
#include "terra/estimation.hpp"
#include "terra/simulation.hpp"

#ifndef TERRA_DEFAULT_CONFIG_DIR
#define TERRA_DEFAULT_CONFIG_DIR "config"
#endif

namespace terra::harness {

inline constexpr const char* kScenarioSchema = "terra-scenario/1";
inline constexpr const char* kSoilSchema = "terra-soil/1";
inline constexpr const char* kVehicleSchema = "terra-vehicle/1";
inline constexpr const char* kFilterSchema = "terra-filter/1";

struct NoiseConfig {
  double accel = 0.2;    // m/s^2
  double gyro = 0.0175;  // rad/s
};

struct FilterTuning {
  double alpha = 1.0;
  double kappa = 0.0;
  double process_noise = 1e-6;   // R_n (scalar)
  double initial_mean = 1.0;     // w_0
  double initial_variance = 0.04;  // P_w0
  // Predict from the ground-truth state at each observation instead of the
  // filter's own propagated state (simulation studies only).
  bool known_states = false;
};

struct SweepGrid {
  std::vector<double> alpha;
  std::vector<double> process_noise;
};

struct Scenario {
  std::string name;
  std::filesystem::path source;
  std::string soil_name;
  SoilParams soil;  // soil.n is the true exponent
  std::string vehicle_name;
  VehicleParams vehicle;
  TerrainField terrain;
  InputSignal inputs;
  PlanarStart start;
  double duration = 50.0;
  double dt = 1e-3;
  double observation_rate = 100.0;
  NoiseConfig noise;
  std::uint64_t seed = 1;
  std::vector<ModelKind> models{ModelKind::coupled, ModelKind::bicycle};
  std::string filter_name = "builtin";
  std::map<ModelKind, FilterTuning> filters{{ModelKind::coupled, {}}, {ModelKind::bicycle, {}}};
  SweepGrid sweep;

  double true_n() const { return soil.n; }

  SimulationConfig simulation_config() const { return {duration, dt, observation_rate}; }

  VehicleModel model(ModelKind kind) const {
    return make_model(kind, vehicle, soil, terrain, inputs);
  }

  void validate() const {
    if (!(duration > 0.0)) throw ConfigError("scenario key 'duration': must be positive");
    if (!(dt > 0.0)) throw ConfigError("scenario key 'dt': must be positive");
    if (!(observation_rate > 0.0)) {
      throw ConfigError("scenario key 'observation_rate': must be positive");
    }
    try {
      steps_per_period(dt, observation_rate);
    } catch (const std::invalid_argument&) {
      throw ConfigError("scenario key 'observation_rate': period is not a multiple of dt");
    }
    if (!(noise.accel >= 0.0 && noise.gyro >= 0.0)) {
      throw ConfigError("scenario key 'noise': standard deviations must be nonnegative");
    }
  }
};

/// Filter configuration for one model under a scenario's noise levels.
inline ukf::UkfConfig make_ukf_config(const FilterTuning& t, const ChannelSet& channels,
                                      const NoiseConfig& noise) {
  ukf::UkfConfig cfg;
  cfg.alpha = t.alpha;
  cfg.kappa = t.kappa;
  cfg.process_noise = ukf::Matrix::Constant(1, 1, t.process_noise);
  cfg.initial_mean = ukf::Vector::Constant(1, t.initial_mean);
  cfg.initial_covariance = ukf::Matrix::Constant(1, 1, t.initial_variance);
  cfg.observation_noise = imu_noise_covariance(channels, noise.accel, noise.gyro);
  return cfg;
}

namespace detail {

class Reader {
 public:
  Reader(YAML::Node node, std::string context) : node_(std::move(node)), ctx_(std::move(context)) {
    if (!node_.IsMap()) throw ConfigError(ctx_ + ": expected a mapping");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return bool(node_[key]);
  }

  YAML::Node node(const std::string& key) {
    seen_.insert(key);
    return node_[key];
  }

  template <class T>
  T get(const std::string& key) {
    seen_.insert(key);
    const YAML::Node n = node_[key];
    if (!n) throw ConfigError(where(key) + ": missing required key");
    return convert<T>(n, key);
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    seen_.insert(key);
    const YAML::Node n = node_[key];
    if (!n) return fallback;
    return convert<T>(n, key);
  }

  Reader child(const std::string& key) {
    seen_.insert(key);
    const YAML::Node n = node_[key];
    if (!n) throw ConfigError(where(key) + ": missing required key");
    if (!n.IsMap()) throw ConfigError(where(key) + ": expected a mapping");
    return Reader(n, where(key));
  }

  std::string where(const std::string& key) const { return ctx_ + " key '" + key + "'"; }

  /// Rejects keys that were never asked for (typos, unsupported options).
  void finish() const {
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!seen_.count(key)) throw ConfigError(where(key) + ": unknown key");
    }
  }

 private:
  template <class T>
  T convert(const YAML::Node& n, const std::string& key) {
    try {
      return n.as<T>();
    } catch (const YAML::Exception&) {
      throw ConfigError(where(key) + ": wrong type or malformed value");
    }
  }

  YAML::Node node_;
  std::string ctx_;
  std::set<std::string> seen_;
};

inline YAML::Node load_file(const std::filesystem::path& path, const std::string& what) {
  if (!std::filesystem::exists(path)) {
    throw ConfigError(what + " file not found: " + path.string());
  }
  try {
    return YAML::LoadFile(path.string());
  } catch (const YAML::Exception& e) {
    throw ConfigError(what + " file " + path.string() + ": parse error: " + e.what());
  }
}

inline void check_schema(Reader& r, const char* expected) {
  const auto schema = r.get<std::string>("schema");
  if (schema != expected) {
    throw ConfigError(r.where("schema") + ": expected '" + expected + "', got '" + schema + "'");
  }
}

/// Resolves a preset name ("clay") or a relative/absolute path to a file.
inline std::filesystem::path resolve_preset(const std::string& ref, const std::string& subdir,
                                            const std::filesystem::path& base_dir) {
  namespace fs = std::filesystem;
  const bool looks_like_path = ref.find('/') != std::string::npos ||
                               fs::path(ref).has_extension();
  if (looks_like_path) {
    const fs::path p(ref);
    return p.is_absolute() ? p : base_dir / p;
  }
  // config/ next to the scenario or in any ancestor, then the environment, then the build default
  std::vector<fs::path> roots;
  for (fs::path dir = fs::absolute(base_dir).lexically_normal(); !dir.empty();
       dir = dir.parent_path()) {
    roots.push_back(dir / "config");
    if (dir == dir.root_path()) break;
  }
  if (const char* env = std::getenv("TERRA_CONFIG_DIR")) roots.emplace_back(env);
  roots.emplace_back(TERRA_DEFAULT_CONFIG_DIR);
  for (const fs::path& root : roots) {
    const fs::path candidate = root / subdir / (ref + ".yaml");
    if (fs::exists(candidate)) return candidate;
  }
  throw ConfigError("no " + subdir + " preset named '" + ref + "'");
}

inline SoilParams parse_soil(Reader r) {
  SoilParams s;
  s.k_c = 1e3 * r.get<double>("k_c");      // kN/m^(n+1)
  s.k_phi = 1e3 * r.get<double>("k_phi");  // kN/m^(n+2)
  s.n = r.get<double>("n");
  s.cohesion = 1e3 * r.get<double>("cohesion");  // kPa
  s.friction_angle = r.get<double>("friction_angle") * std::numbers::pi / 180.0;  // deg
  s.k_x = r.get<double>("k_x");
  s.k_y = r.get<double>("k_y");
  s.a0 = r.get<double>("a0");
  s.a1 = r.get<double>("a1");
  s.b0 = r.get<double>("b0", 0.0);
  s.b1 = r.get<double>("b1", 0.0);
  r.get<std::string>("name", "");
  r.get<std::string>("source", "");
  r.finish();
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("soil: ") + e.what());
  }
  return s;
}

inline VehicleParams parse_vehicle(Reader r) {
  VehicleParams v;
  v.mass = r.get<double>("mass");
  v.yaw_inertia = r.get<double>("yaw_inertia");
  v.pitch_inertia = r.get<double>("pitch_inertia");
  v.l_f = r.get<double>("l_f");
  v.l_r = r.get<double>("l_r");
  v.k_f = r.get<double>("k_f");
  v.k_r = r.get<double>("k_r");
  v.c_f = r.get<double>("c_f");
  v.c_r = r.get<double>("c_r");
  v.slip = r.get<double>("slip", 0.1);
  Reader w = r.child("wheel");
  v.wheel.radius = w.get<double>("radius");
  v.wheel.width = w.get<double>("width");
  v.wheel.mass = w.get<double>("mass");
  w.finish();
  r.get<std::string>("name", "");
  r.get<std::string>("source", "");
  r.finish();
  try {
    v.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("vehicle: ") + e.what());
  }
  return v;
}

inline Schedule parse_schedule(Reader r) {
  Schedule s;
  s.offset = r.get<double>("offset", 0.0);
  s.amplitude = r.get<double>("amplitude", 0.0);
  s.frequency = r.get<double>("frequency", 0.0);
  s.phase = r.get<double>("phase", 0.0);
  s.per_unit_mass = r.get<bool>("per_unit_mass", false);
  r.finish();
  return s;
}

inline FilterTuning parse_tuning(Reader r, FilterTuning t) {
  t.alpha = r.get<double>("alpha", t.alpha);
  t.kappa = r.get<double>("kappa", t.kappa);
  t.process_noise = r.get<double>("process_noise", t.process_noise);
  t.initial_mean = r.get<double>("initial_mean", t.initial_mean);
  t.initial_variance = r.get<double>("initial_variance", t.initial_variance);
  if (r.has("state_feed")) {
    const auto feed = r.get<std::string>("state_feed");
    if (feed != "self" && feed != "truth") {
      throw ConfigError(r.where("state_feed") + ": expected self|truth, got '" + feed + "'");
    }
    t.known_states = feed == "truth";
  }
  r.finish();
  return t;
}

/// `default` applies to both models; per-model sections override it.
inline std::map<ModelKind, FilterTuning> parse_filters(Reader f) {
  FilterTuning shared{};
  if (f.has("default")) shared = parse_tuning(f.child("default"), shared);
  std::map<ModelKind, FilterTuning> out;
  for (ModelKind k : {ModelKind::coupled, ModelKind::bicycle}) {
    const std::string key = to_string(k);
    out[k] = f.has(key) ? parse_tuning(f.child(key), shared) : shared;
  }
  f.get<std::string>("name", "");
  f.get<std::string>("source", "");
  f.finish();
  return out;
}

template <class Parse>
auto section_or_preset(Reader& parent, const std::string& key, const char* subdir,
                       const char* schema, const std::filesystem::path& base, std::string& name,
                       Parse parse) {
  const YAML::Node n = parent.node(key);
  if (!n) throw ConfigError(parent.where(key) + ": missing required key");
  if (n.IsScalar()) {
    name = n.as<std::string>();
    const std::filesystem::path file = resolve_preset(name, subdir, base);
    Reader r(load_file(file, key), file.filename().string());
    check_schema(r, schema);
    return parse(std::move(r));
  }
  name = "inline";
  Reader r = parent.child(key);
  return parse(std::move(r));
}

}  // namespace detail

inline Scenario parse_scenario(const YAML::Node& root, const std::filesystem::path& source) {
  using detail::Reader;
  Reader r(root, "scenario");
  detail::check_schema(r, kScenarioSchema);
  const std::filesystem::path base = source.empty() ? std::filesystem::path(".") : source.parent_path();

  Scenario sc;
  sc.source = source;
  sc.name = r.get<std::string>("name", source.stem().string());
  sc.vehicle = detail::section_or_preset(r, "vehicle", "vehicles", kVehicleSchema, base,
                                         sc.vehicle_name, detail::parse_vehicle);
  sc.soil = detail::section_or_preset(r, "soil", "soils", kSoilSchema, base, sc.soil_name,
                                      detail::parse_soil);
  if (r.has("true_n")) {
    sc.soil.n = r.get<double>("true_n");
    if (!(sc.soil.n > 0.0)) throw ConfigError(r.where("true_n") + ": must be positive");
  }
  if (r.has("slip")) sc.vehicle.slip = r.get<double>("slip");

  {
    Reader t = r.child("terrain");
    const auto kind = t.get<std::string>("kind");
    if (kind == "flat") {
      sc.terrain = TerrainField::flat();
    } else if (kind == "sinusoidal") {
      SinusoidalTerrain s;
      s.amplitude = t.get<double>("amplitude");
      s.kx = t.get<double>("kx", s.kx);
      s.ky = t.get<double>("ky", s.ky);
      sc.terrain = TerrainField(s);
    } else {
      throw ConfigError(t.where("kind") + ": expected flat|sinusoidal, got '" + kind + "'");
    }
    t.finish();
  }
  {
    Reader in = r.child("inputs");
    sc.inputs.force = in.has("force") ? detail::parse_schedule(in.child("force")) : Schedule{};
    sc.inputs.steer = in.has("steer") ? detail::parse_schedule(in.child("steer")) : Schedule{};
    in.finish();
  }
  if (r.has("initial")) {
    Reader s = r.child("initial");
    sc.start.X = s.get<double>("X", 0.0);
    sc.start.Y = s.get<double>("Y", 0.0);
    sc.start.psi = s.get<double>("psi", 0.0);
    sc.start.xdot = s.get<double>("xdot", 0.0);
    sc.start.ydot = s.get<double>("ydot", 0.0);
    sc.start.psidot = s.get<double>("psidot", 0.0);
    s.finish();
  }
  sc.duration = r.get<double>("duration");
  sc.dt = r.get<double>("dt", sc.dt);
  sc.observation_rate = r.get<double>("observation_rate", sc.observation_rate);
  if (r.has("noise")) {
    Reader nz = r.child("noise");
    sc.noise.accel = nz.get<double>("accel", sc.noise.accel);
    sc.noise.gyro = nz.get<double>("gyro", sc.noise.gyro);
    nz.finish();
  }
  sc.seed = r.get<std::uint64_t>("seed", sc.seed);
  if (r.has("models")) {
    sc.models.clear();
    for (const auto& m : r.get<std::vector<std::string>>("models")) {
      try {
        sc.models.push_back(parse_model_kind(m));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(r.where("models") + ": " + e.what());
      }
    }
  }
  if (r.has("filter")) {
    sc.filters = detail::section_or_preset(r, "filter", "filters", kFilterSchema, base,
                                           sc.filter_name, detail::parse_filters);
  }
  if (r.has("sweep")) {
    Reader s = r.child("sweep");
    sc.sweep.alpha = s.get<std::vector<double>>("alpha");
    sc.sweep.process_noise = s.get<std::vector<double>>("process_noise");
    s.finish();
  }
  r.finish();
  sc.validate();
  return sc;
}

inline Scenario load_scenario(const std::filesystem::path& path) {
  return parse_scenario(detail::load_file(path, "scenario"), path);
}

}  // namespace terra::harness
