#pragma once

#include "drdcbf/drd_cbf.hpp"
#include "drdcbf/safety_filter.hpp"
#include "drdcbf/sampling.hpp"
#include "drdcbf/scenario.hpp"
#include "drdcbf/sim.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace drdcbf {

// ---------------------------------------------------------------------------
// Gradient checks.

using ScalarFn = std::function<double(const Vec&)>;
using GradientFn = std::function<Vec(const Vec&)>;

struct GradReport {
  bool pass = true;
  int samples = 0;
  double max_rel_error = 0.0;  // |g_fd - g| / max(|g_fd|, 1)
  Vec worst_point;
};

/// Central differences of f against grad_f at every point. Throws
/// std::invalid_argument if step <= 0.
GradReport grad_check(const ScalarFn& f, const GradientFn& grad_f, const std::vector<Vec>& points,
                      double step, double tol);

// ---------------------------------------------------------------------------
// Tracking-error bound V >= |e|^2 / 2 for the geometric CLFs.

struct LemmaReport {
  int dim = 2;
  int samples = 0;
  std::uint64_t seed = 0;
  int bound_violations = 0;   // V < |e|^2 / 2 - 1e-12
  int angle_violations = 0;   // ||e| - |k~| |sin theta|| > 1e-9
  double min_bound_margin = 0.0;  // min of V - |e|^2 / 2
  double max_angle_error = 0.0;
  bool pass() const { return bound_violations == 0 && angle_violations == 0; }
};

/// Samples n uniform attitudes and targets k~ with |k~| in [0, 10], evaluated
/// through GeometricClf2d / GeometricClf3d and tracking_error with a constant
/// chain controller. dim must be 2 or 3.
LemmaReport lemma_bound_sampler(int dim, int n, std::uint64_t seed);

// ---------------------------------------------------------------------------
// CLF decay condition inf_u2 L_f1 V + L_g2 V u2 <= -lambda V along the
// partial closed loop f1 = f + g1 k1.

enum class DecayClass {
  Controllable,    // L_g2 V != 0: the infimum is unbounded below
  DriftDecay,      // L_g2 V == 0 and L_f1 V <= -lambda V
  EVacuous,        // decay fails, L_g1 h != 0
  EChecked,        // decay fails, L_g1 h == 0 and L_f h >= -gamma h
  Counterexample,  // decay fails, L_g1 h == 0 and L_f h < -gamma h
};

const char* to_string(DecayClass c);

struct DecaySample {
  Vec x;
  DecayClass cls = DecayClass::Controllable;
  double lg2_v_norm = 0.0;
  double decay_margin = 0.0;  // -(L_f1 V + lambda V)
  double v_over_e2 = std::numeric_limits<double>::infinity();  // V / |e|^2, inf when e = 0
};

struct DecayReport {
  int samples = 0;
  int controllable = 0;
  int drift_decay = 0;
  int e_vacuous = 0;
  int e_checked = 0;
  int counterexamples = 0;
  // Sampled min of V / |e|^2; must not fall below the configured beta.
  double beta_estimate = std::numeric_limits<double>::infinity();
  double beta = 0.0;
  std::vector<DecaySample> e_states;  // every sample that failed the decay test
  bool pass() const { return counterexamples == 0 && beta_estimate >= beta * (1.0 - 1e-9); }
};

/// Classifies one state. `tol` is the threshold on |L_g2 V| and the slack
/// allowed in the drift decay inequality.
DecaySample classify_decay(const Vec& x, const DrdCbf& drd, double tol = 1e-9);
DecayReport clf_decay_sampler(const DrdCbf& drd, const std::vector<Vec>& points,
                              double tol = 1e-9);
/// n Halton points of `box`.
DecayReport clf_decay_sampler(const DrdCbf& drd, const Box& box, int n, double tol = 1e-9);

// ---------------------------------------------------------------------------
// Discrete invariance audit of a simulated trajectory.

struct AuditReport {
  bool pass = true;
  bool uniform_grid = true;
  int steps = 0;
  int decay_violations = 0;   // h_{k+1} - h_k < -gamma h_k dt - tol dt
  int h0_violations = 0;      // h_k >= 0 and h0_k < -tol
  int subset_violations = 0;  // h_k >= 0 and h0_k < h_k - 1e-12
  double min_margin = 0.0;    // min (h_{k+1} - h_k) / dt + gamma h_k
  double worst_time = 0.0;
};

AuditReport audit_trajectory(const Trajectory& traj, double gamma, double tol);

// ---------------------------------------------------------------------------
// QP filter against the grid oracle.

struct QpEquivalenceReport {
  bool pass = true;
  int problems = 0;
  int mismatches = 0;            // |u - u_oracle| above the grid bound
  int residual_violations = 0;   // a != 0 and a.u + b < -1e-10
  int infeasible_disagreements = 0;
  double max_distance = 0.0;
  double min_residual = 0.0;
};

/// n seeded random problems with input dimension 1 or 2. Grid spacing `step`.
QpEquivalenceReport qp_equivalence(int n, std::uint64_t seed, double step = 0.02);

// ---------------------------------------------------------------------------
// Scenario-level suites.

struct SuiteResult {
  std::string kind;
  std::string target;
  bool pass = false;
  std::string summary;  // one human-readable line
  std::string json;     // machine-readable detail
};

struct VerifyReport {
  std::string scenario;
  bool pass = true;
  std::vector<SuiteResult> suites;
  std::string to_json() const;
};

/// Runs one suite against a parsed scenario. Throws ConfigError for an
/// unknown kind or target, or when a needed sampling box is missing.
SuiteResult run_suite(const Scenario& sc, const VerifySuite& suite);
/// Runs every suite declared by the scenario. Throws ConfigError when the
/// scenario declares none.
VerifyReport run_verify(const Scenario& sc);

}  // namespace drdcbf
