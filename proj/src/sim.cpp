#include "drdcbf/sim.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace drdcbf {
namespace {

const char* const kCertColumns[] = {"h", "h0", "V", "e_norm", "slack", "active", "region"};
constexpr int kCertCount = 7;

void append_number(std::string& line, double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof(buf), "%.17g", v);
  line.append(buf, static_cast<std::size_t>(n));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s) {
  if (s == "nan" || s == "-nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ConfigError("trajectory CSV: cannot parse number '" + s + "'");
  }
  return v;
}

double min_of(const Trajectory& t, double CertificateChannels::*field) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& c : t.cert) {
    if (!std::isnan(c.*field)) m = std::min(m, c.*field);
  }
  return m;
}

}  // namespace

int Trajectory::infeasible_count() const {
  return static_cast<int>(
      std::count_if(cert.begin(), cert.end(), [](const auto& c) { return c.infeasible; }));
}

double Trajectory::min_h() const { return min_of(*this, &CertificateChannels::h); }
double Trajectory::min_h0() const { return min_of(*this, &CertificateChannels::h0); }

Trajectory integrate_rk4(const DynamicsFn& dynamics, const Vec& x0, const ControllerFn& controller,
                         double horizon, double dt, const NormalizeFn& normalize) {
  if (!(dt > 0.0)) throw ConfigError("integrate_rk4: dt must be positive");
  if (!(horizon >= dt)) throw ConfigError("integrate_rk4: horizon must be at least dt");
  const long steps = std::lround(horizon / dt);

  Trajectory traj;
  traj.times.reserve(static_cast<std::size_t>(steps + 1));
  traj.states.reserve(static_cast<std::size_t>(steps + 1));
  traj.inputs.reserve(static_cast<std::size_t>(steps + 1));
  traj.cert.reserve(static_cast<std::size_t>(steps + 1));

  Vec x = x0;
  if (normalize) normalize(x);
  for (long k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    ControlSample sample = controller(t, x);
    if (!sample.u.allFinite()) {
      throw SimulationError("controller returned a non-finite input at t = " + std::to_string(t), t);
    }
    traj.times.push_back(t);
    traj.states.push_back(x);
    traj.inputs.push_back(sample.u);
    traj.cert.push_back(sample.cert);
    if (k == steps) break;

    const Vec& u = sample.u;
    const Vec k1 = dynamics(x, u);
    const Vec k2 = dynamics(x + 0.5 * dt * k1, u);
    const Vec k3 = dynamics(x + 0.5 * dt * k2, u);
    const Vec k4 = dynamics(x + dt * k3, u);
    x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (normalize) normalize(x);
    if (!x.allFinite()) {
      const double tn = static_cast<double>(k + 1) * dt;
      throw SimulationError("non-finite state at t = " + std::to_string(tn), tn);
    }
  }
  traj.input_dim = traj.inputs.empty() ? 0 : static_cast<int>(traj.inputs.front().size());
  return traj;
}

std::string csv_header(const Trajectory& traj) {
  std::string line = "t";
  for (const auto& n : traj.state_names) line += "," + n;
  for (int i = 0; i < traj.input_dim; ++i) line += ",u" + std::to_string(i);
  for (const char* c : kCertColumns) line += std::string(",") + c;
  return line;
}

void write_csv(const Trajectory& traj, std::ostream& out) {
  out << csv_header(traj) << '\n';
  std::string line;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    line.clear();
    append_number(line, traj.times[k]);
    for (Eigen::Index i = 0; i < traj.states[k].size(); ++i) {
      line += ',';
      append_number(line, traj.states[k][i]);
    }
    for (Eigen::Index i = 0; i < traj.inputs[k].size(); ++i) {
      line += ',';
      append_number(line, traj.inputs[k][i]);
    }
    const auto& c = traj.cert[k];
    for (double v : {c.h, c.h0, c.V, c.e_norm, c.slack}) {
      line += ',';
      append_number(line, v);
    }
    line += c.active ? ",1" : ",0";
    line += c.region ? ",1" : ",0";
    out << line << '\n';
  }
}

void write_csv(const Trajectory& traj, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  write_csv(traj, out);
}

Trajectory read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("trajectory CSV: empty input");
  const auto header = split(line);
  const int ncols = static_cast<int>(header.size());
  if (ncols < 1 + kCertCount || header[0] != "t") {
    throw ConfigError("trajectory CSV: header does not match the trajectory schema");
  }
  for (int i = 0; i < kCertCount; ++i) {
    if (header[static_cast<std::size_t>(ncols - kCertCount + i)] != kCertColumns[i]) {
      throw ConfigError("trajectory CSV: expected certificate column '" +
                        std::string(kCertColumns[i]) + "'");
    }
  }
  Trajectory traj;
  int first_input = ncols - kCertCount;
  for (int i = 1; i < ncols - kCertCount; ++i) {
    const auto& name = header[static_cast<std::size_t>(i)];
    if (name.size() > 1 && name[0] == 'u' &&
        std::all_of(name.begin() + 1, name.end(), [](char ch) { return ch >= '0' && ch <= '9'; })) {
      first_input = i;
      break;
    }
    traj.state_names.push_back(name);
  }
  const int n = first_input - 1;
  const int m = ncols - kCertCount - first_input;
  if (n < 1) throw ConfigError("trajectory CSV: no state columns");
  traj.input_dim = m;

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    if (static_cast<int>(cells.size()) != ncols) {
      throw ConfigError("trajectory CSV: row has " + std::to_string(cells.size()) +
                        " columns, expected " + std::to_string(ncols));
    }
    std::size_t c = 0;
    traj.times.push_back(parse_number(cells[c++]));
    Vec x(n);
    for (int i = 0; i < n; ++i) x[i] = parse_number(cells[c++]);
    Vec u(m);
    for (int i = 0; i < m; ++i) u[i] = parse_number(cells[c++]);
    CertificateChannels cert;
    cert.h = parse_number(cells[c++]);
    cert.h0 = parse_number(cells[c++]);
    cert.V = parse_number(cells[c++]);
    cert.e_norm = parse_number(cells[c++]);
    cert.slack = parse_number(cells[c++]);
    cert.active = parse_number(cells[c++]) != 0.0;
    cert.region = parse_number(cells[c++]) != 0.0;
    traj.states.push_back(std::move(x));
    traj.inputs.push_back(std::move(u));
    traj.cert.push_back(cert);
  }
  return traj;
}

Trajectory read_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open trajectory file " + path);
  return read_csv(in);
}

}  // namespace drdcbf
