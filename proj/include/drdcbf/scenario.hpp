#pragma once

#include "drdcbf/drd_cbf.hpp"
#include "drdcbf/safety_filter.hpp"
#include "drdcbf/sampling.hpp"
#include "drdcbf/sim.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace drdcbf {

/// Nominal full input u_nom(t, x); receives the certificate evaluation at x so
/// it can reuse theta_des and k1.
using NominalFn = std::function<Vec(double t, const Vec& x, const DrdEval& eval)>;

/// Time-varying output reference y_d(t) = offset + amplitude * sin(2 pi f t + phase).
struct SinusoidReference {
  Vec offset;
  Vec amplitude;
  Vec frequency;  // Hz
  Vec phase;      // rad

  Vec position(double t) const;
  Vec velocity(double t) const;
  Vec acceleration(double t) const;
};

struct VerifySuite {
  std::string kind;
  std::string target;     // grad_check: h0 | V | drd_h
  int samples = 1000;
  int dim = 2;            // lemma_bound
  double tol = 0.0;       // 0 selects the suite default
  double gamma_scale = 2.0;  // mutation
  double h0_floor = -std::numeric_limits<double>::infinity();  // issf
};

struct Scenario {
  std::string name;
  std::string config_json;  // normalized copy of the parsed config

  SystemPtr system;
  std::shared_ptr<const DrdCbf> drd;
  BarrierCertificate certificate;
  NominalFn nominal;
  std::string nominal_kind;
  std::optional<SinusoidReference> reference;

  std::vector<Vec> initial_states;
  std::vector<std::string> labels;
  double horizon = 20.0;
  double dt = 1e-3;
  std::uint64_t seed = 0;
  bool compare_unfiltered = false;
  bool is_sweep = false;
  /// true: u1 = k1(x) and the QP acts on u2 only; false: the QP acts on the
  /// full nominal input.
  bool filter_u2_only = true;

  std::optional<Box> state_box;  // sampling box for state-space suites
  std::optional<Box> chain_box;  // sampling box for the output-chain ISSf check
  std::vector<VerifySuite> suites;
};

/// Overrides applied on top of a config file (command-line flags).
struct ScenarioOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> dt;
  std::optional<double> horizon;
};

/// Parses and validates a JSON config (schema_version 1). Throws ConfigError
/// on any schema or parameter problem, including the DRD parameter condition.
Scenario parse_scenario(const std::string& json_text, const ScenarioOverrides& overrides = {});
Scenario load_scenario(const std::string& path, const ScenarioOverrides& overrides = {});

/// Path of a bundled scenario file by name (e.g. "unicycle_ellipse").
std::string bundled_scenario_path(const std::string& name);

struct MonitorReport {
  bool pass = true;
  bool started_safe = false;  // h(x0) >= 0
  double min_h = 0.0;
  double min_h0 = 0.0;
  double min_h0_when_safe = 0.0;  // min h0 over rows with h >= 0
  int infeasible = 0;
  std::string message;
};

/// Safety monitors: a run that starts with h >= 0 keeps h >= -tol_h, rows with
/// h >= 0 have h0 >= -tol_h, and the filter never hits the infeasible corner.
MonitorReport monitor_trajectory(const Trajectory& traj, double tol_h = 1e-3);

struct RunResult {
  std::string label;
  Trajectory filtered;
  std::optional<Trajectory> unfiltered;
  MonitorReport monitor;
};

struct RunOptions {
  double filter_gamma_scale = 1.0;  // mutation hook: gamma used inside the filter only
  bool unfiltered = false;          // apply u_nom directly, still logging h
};

/// One closed-loop run with the DRD-CBF QP filter.
Trajectory simulate(const Scenario& sc, const Vec& x0, const RunOptions& opts = {});

/// Runs every initial state (concurrently for sweeps) and merges results in
/// index order.
std::vector<RunResult> run_scenario(const Scenario& sc, const RunOptions& opts = {});

/// JSON sidecar: scenario echo plus summary statistics.
std::string summary_json(const Scenario& sc, const RunResult& run);

}  // namespace drdcbf
