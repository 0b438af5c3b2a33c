// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
//
//   acceptance [--only 1,2,...] [--out DIR]

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "terra/harness/experiments.hpp"
#include "terra/quadrature.hpp"
#include "terra/ukf.hpp"

namespace fs = std::filesystem;
using namespace terra;
using namespace terra::harness;

namespace {

const fs::path kScenarios = TERRA_SCENARIO_DIR;

struct Verdict {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Verdict flat_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  const ModelComparison c = compare_models(load_scenario(kScenarios / "flat.yaml"));
  const double secs = seconds_since(t0);
  const double dev = c.max_separation();
  return {dev < 1e-6 && secs < 30.0,
          fmt("max planar deviation %.3g m over %.0f s (< 1e-6), %.1f s runtime (< 30)", dev,
              c.t.back(), secs)};
}

Verdict sinkage_solver() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const WheelGeom g;
  double worst_f = 0.0, worst_h = 0.0;
  int bad = 0;
  for (int i = 0; i < 200; ++i) {
    const SoilParams s = oracle::random_soil(rng);
    const double slip = 0.3 * u(rng);
    const double capacity = vertical_force(0.9 * g.radius, slip, g, s);
    const double load = std::min(500.0 + 9500.0 * u(rng), 0.8 * capacity);
    const double h = solve_sinkage(load, {slip, 0.0, 0.0}, g, s, 0.0);
    const double ef = std::abs(vertical_force(h, slip, g, s) - load);
    const double eh = std::abs(h - oracle::bisect_sinkage(load, slip, g, s));
    worst_f = std::max(worst_f, ef / std::max(1e-8 * load, 1e-6));
    worst_h = std::max(worst_h, eh);
    if (ef > std::max(1e-8 * load, 1e-6) || eh > 1e-10) ++bad;
  }
  const double secs = seconds_since(t0);
  return {bad == 0 && secs < 10.0,
          fmt("200 cases, %d outside tolerance; worst |Fz-N|/tol %.2g, worst |h-h_bisect| %.2g m, "
              "%.1f s runtime (< 10)",
              bad, worst_f, worst_h, secs)};
}

Verdict quadrature_fidelity() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const WheelGeom g;
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const SoilParams s = oracle::random_soil(rng);
    const double h = 0.005 + 0.15 * u(rng);
    const WheelKinematics kin{0.4 * u(rng), -0.3 + 0.6 * u(rng), 0.0};
    const ForceIntegrals got = integrate_forces(h, kin, g, s);
    const ForceIntegrals ref = oracle::forces(h, kin, g, s);
    const double err = std::max({std::abs(got.fx - ref.fx), std::abs(got.fy - ref.fy),
                                 std::abs(got.fz - ref.fz)}) /
                       oracle::norm(ref);
    worst = std::max(worst, err);
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-6 && secs < 10.0,
          fmt("100 cases, worst relative error %.2g (<= 1e-6), %.1f s runtime (< 10)", worst, secs)};
}

Verdict exponent_sensitivity() {
  const Scenario a = load_scenario(kScenarios / "rough_clay_n04.yaml");
  const Scenario b = load_scenario(kScenarios / "rough_clay_n06.yaml");
  const VehicleModel ma = a.model(ModelKind::coupled), mb = b.model(ModelKind::coupled);
  const Trajectory ta = simulate(ma, settled_state(ma, a.start), a.simulation_config());
  const Trajectory tb = simulate(mb, settled_state(mb, b.start), b.simulation_config());
  const double sep = planar_separation(ta.samples.back().state, tb.samples.back().state);
  return {sep > 1.0, fmt("n=0.4 vs n=0.6 separation %.3g m at t=%.0f s (> 1)", sep,
                         ta.samples.back().t)};
}

Verdict rough_divergence() {
  const ModelComparison c = compare_models(load_scenario(kScenarios / "rough_clay.yaml"));
  return {c.final_separation() > 1.0,
          fmt("coupled vs bicycle separation %.3g m at t=%.0f s (> 1), max %.3g m",
              c.final_separation(), c.t.back(), c.max_separation())};
}

Verdict ukf_exactness() {
  using ukf::Matrix;
  using ukf::Vector;
  const double a = 3.0, b = 0.2, r = 0.04, w0 = 0.9, p0 = 0.05, d = 2.5;
  const ukf::SigmaWeights wts = ukf::sigma_weights(1, 1.0, 0.0);
  const Matrix pts = ukf::sigma_points(Vector::Constant(1, w0), Matrix::Constant(1, 1, p0), wts.lambda);
  const Matrix pred = (a * pts).array() + b;
  const ukf::UpdateResult u =
      ukf::measurement_update(pred, wts, Vector::Constant(1, d), Matrix::Constant(1, 1, r),
                              Vector::Constant(1, w0), Matrix::Constant(1, 1, p0), pts);
  const double s = a * a * p0 + r, k = p0 * a / s;
  const double e_update = std::max({std::abs(u.gain(0, 0) - k),
                                    std::abs(u.mean(0) - (w0 + k * (d - a * w0 - b))),
                                    std::abs(u.covariance(0, 0) - (1 - k * a) * p0)});
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> dim(1, 6);
  std::uniform_real_distribution<double> alpha(1e-3, 2.0), kappa(0.0, 3.0);
  double e_sum = 0.0;
  for (int i = 0; i < 50; ++i) {
    const ukf::SigmaWeights w = ukf::sigma_weights(dim(rng), alpha(rng), kappa(rng));
    e_sum = std::max(e_sum, std::abs(w.mean.sum() - 1.0) / std::max(1.0, w.mean.cwiseAbs().sum()));
  }
  return {e_update <= 1e-12 && e_sum <= 1e-14,
          fmt("scalar update error %.2g (<= 1e-12), worst weight-sum error %.2g (<= 1e-14)",
              e_update, e_sum)};
}

struct Row {
  std::string name;
  EstimatorComparison result;
  double seconds = 0.0;
};

Row run_row(const std::string& file) {
  Row row;
  row.name = file;
  const auto t0 = std::chrono::steady_clock::now();
  row.result = compare_estimators(load_scenario(kScenarios / "table1" / file));
  row.seconds = seconds_since(t0);
  return row;
}

void write_row(const Row& row, const fs::path& dir) {
  fs::create_directories(dir);
  std::ofstream(dir / "observations.csv", std::ios::binary) << [&] {
    std::ostringstream os;
    write_observations(os, row.result.observations.noisy);
    return os.str();
  }();
  for (const EstimationOutcome* o : {&row.result.coupled, &row.result.bicycle}) {
    if (!o->ok()) continue;
    std::ofstream os(dir / ("estimate_" + to_string(o->model) + ".csv"), std::ios::binary);
    csv::write_estimate(os, *o->trace);
  }
}

Verdict estimation(const std::vector<std::string>& files, std::vector<Row>& rows) {
  bool pass = true;
  std::string detail;
  for (const std::string& f : files) {
    rows.push_back(run_row(f));
    const Row& row = rows.back();
    const Scenario sc = load_scenario(kScenarios / "table1" / f);
    const double n = sc.true_n();
    std::string part = sc.name + ": ";
    if (!row.result.coupled.ok() || !row.result.bicycle.ok()) {
      pass = false;
      part += "estimator failed (" + row.result.coupled.error + row.result.bicycle.error + ")";
    } else {
      const EstimateTrace& c = *row.result.coupled.trace;
      const EstimateTrace& b = *row.result.bicycle.trace;
      const double mc = mse(c, n), mb = mse(b, n);
      const bool ordered = mc < mb;
      const bool fast = row.seconds < 300.0;
      pass = pass && ordered && fast;
      part += fmt("MSE coupled %.3g %s bicycle %.3g, %.0f s", mc, ordered ? "<" : ">=", mb,
                  row.seconds);
      if (f.rfind("clay", 0) == 0) {
        const double err = std::abs(c.final_estimate() - n);
        pass = pass && err <= 0.05;
        const auto tc = convergence_time(c, n);
        part += fmt(", coupled final n %.4f (|err| %.3g <= 0.05, settled at %s)",
                    c.final_estimate(), err, tc ? fmt("%.1f s", *tc).c_str() : "never");
      }
    }
    detail += (detail.empty() ? "" : "; ") + part;
  }
  return {pass, detail};
}

Verdict determinism(const Row& first, const fs::path& out) {
  const Row again = run_row(first.name);
  const fs::path a = out / "determinism_a", b = out / "determinism_b";
  fs::remove_all(a);
  fs::remove_all(b);
  write_row(first, a);
  write_row(again, b);
  int files = 0, differ = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    ++files;
    std::ifstream fa(e.path(), std::ios::binary), fb(b / e.path().filename(), std::ios::binary);
    std::ostringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    if (sa.str() != sb.str()) ++differ;
  }
  return {files == 3 && differ == 0,
          fmt("%s rerun: %d of %d CSVs differ", first.name.c_str(), differ, files)};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  fs::path out = fs::temp_directory_path() / "terra_acceptance";
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      for (std::string tok; std::getline(ss, tok, ',');) only.insert(std::stoi(tok));
    } else if (arg == "--out" && i + 1 < argc) {
      out = argv[++i];
    } else {
      std::cerr << "usage: acceptance [--only 1,2,...] [--out DIR]\n";
      return 2;
    }
  }
  auto wanted = [&](int c) { return only.empty() || only.count(c); };

  int failures = 0;
  auto report = [&](int id, const char* title, const std::function<Verdict()>& run) {
    if (!wanted(id)) return;
    Verdict v;
    try {
      v = run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    if (!v.pass) ++failures;
    std::cout << (v.pass ? "PASS" : "FAIL") << "  criterion " << id << "  " << title << ": "
              << v.detail << std::endl;
  };

  report(1, "flat-ground model equivalence", flat_equivalence);
  report(2, "sinkage solver", sinkage_solver);
  report(3, "force quadrature", quadrature_fidelity);
  report(4, "sinkage exponent sensitivity", exponent_sensitivity);
  report(5, "rough-terrain model divergence", rough_divergence);
  report(6, "UKF exactness on linear maps", ukf_exactness);
  std::vector<Row> rows;
  report(7, "estimation convergence and ordering", [&] {
    return estimation({"clay_steer02_h005.yaml", "sand_steer05_h005.yaml"}, rows);
  });
  report(8, "determinism", [&] {
    if (rows.empty()) rows.push_back(run_row("clay_steer02_h005.yaml"));
    return determinism(rows.front(), out);
  });
  return failures == 0 ? 0 : 1;
}
