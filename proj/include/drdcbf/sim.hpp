#pragma once

#include "drdcbf/types.hpp"

#include <functional>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace drdcbf {

/// Certificate values logged alongside each trajectory row. NaN when the
/// controller has no certificate.
struct CertificateChannels {
  double h = std::numeric_limits<double>::quiet_NaN();
  double h0 = std::numeric_limits<double>::quiet_NaN();
  double V = std::numeric_limits<double>::quiet_NaN();
  double e_norm = std::numeric_limits<double>::quiet_NaN();
  double slack = std::numeric_limits<double>::quiet_NaN();  // a.u + b after filtering
  bool active = false;
  bool region = false;  // outside the region where L_g2 V != 0
  bool infeasible = false;
};

struct ControlSample {
  Vec u;
  CertificateChannels cert;
};

using DynamicsFn = std::function<Vec(const Vec& x, const Vec& u)>;
using ControllerFn = std::function<ControlSample(double t, const Vec& x)>;
using NormalizeFn = std::function<void(Vec& x)>;

struct Trajectory {
  std::vector<std::string> state_names;
  int input_dim = 0;
  std::vector<double> times;
  std::vector<Vec> states;
  std::vector<Vec> inputs;
  std::vector<CertificateChannels> cert;

  std::size_t size() const { return times.size(); }
  double dt() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }
  int infeasible_count() const;
  double min_h() const;
  double min_h0() const;
};

/// Classical RK4 with zero-order-hold control: the controller is evaluated
/// once per step at the step's start state. `normalize` runs after each step.
/// Rows are logged at t_k = k dt for k = 0..N with N = round(T / dt); the
/// last row's input is evaluated but not applied. Throws SimulationError on a
/// non-finite state.
Trajectory integrate_rk4(const DynamicsFn& dynamics, const Vec& x0, const ControllerFn& controller,
                         double horizon, double dt, const NormalizeFn& normalize = {});

/// CSV header: t, state names, u0..u{m-1}, h, h0, V, e_norm, slack, active, region.
std::string csv_header(const Trajectory& traj);
void write_csv(const Trajectory& traj, std::ostream& out);
void write_csv(const Trajectory& traj, const std::string& path);
/// Parses a trajectory CSV. Throws ConfigError on a schema mismatch.
Trajectory read_csv(std::istream& in);
Trajectory read_csv_file(const std::string& path);

}  // namespace drdcbf
