#include "drdcbf/safety_filter.hpp"

#include <cmath>
#include <limits>

namespace drdcbf {

FilterResult cbf_qp_filter(const FilterProblem& p) {
  if (p.a.size() != p.u_nom.size()) throw std::invalid_argument("cbf_qp_filter: size mismatch");
  FilterResult out;
  const double s = p.a.dot(p.u_nom) + p.b;
  const double a2 = p.a.squaredNorm();
  if (s >= 0.0) {
    out.u = p.u_nom;
  } else if (a2 > 0.0) {
    out.u = p.u_nom - (s / a2) * p.a;
    out.active = true;
  } else {
    out.u = p.u_nom;
    out.infeasible = true;
  }
  out.residual = p.a.dot(out.u) + p.b;
  return out;
}

OracleResult qp_oracle(const FilterProblem& p, double radius, double step) {
  if (!(step > 0.0) || !(radius >= 0.0)) throw std::invalid_argument("qp_oracle: bad grid");
  const int m = static_cast<int>(p.u_nom.size());
  const long per_axis = 2 * static_cast<long>(std::floor(radius / step)) + 1;
  const long half = per_axis / 2;
  long total = 1;
  for (int i = 0; i < m; ++i) total *= per_axis;

  OracleResult out;
  double best = std::numeric_limits<double>::infinity();
  Vec u(m);
  Vec offset(m);
  for (long idx = 0; idx < total; ++idx) {
    long rem = idx;
    for (int i = 0; i < m; ++i) {
      offset[i] = static_cast<double>(rem % per_axis - half) * step;
      rem /= per_axis;
    }
    u = p.u_nom + offset;
    if (p.a.dot(u) + p.b < 0.0) continue;
    const double cost = offset.squaredNorm();
    if (cost < best) {
      best = cost;
      out.u = u;
      out.feasible = true;
    }
  }
  return out;
}

FilterProblem drd_filter_problem(const DrdEval& e, const Vec& u_nom, double gamma) {
  FilterProblem p;
  p.u_nom = u_nom;
  p.a.resize(e.lg1_h.size() + e.lg2_h.size());
  p.a << e.lg1_h, e.lg2_h;
  p.b = e.lf_h + gamma * e.h;
  return p;
}

FilterProblem drd_filter_problem_u2(const DrdEval& e, const Vec& u1, const Vec& u2_nom,
                                    double gamma) {
  FilterProblem p;
  p.u_nom = u2_nom;
  p.a = e.lg2_h;
  p.b = e.lf_h + e.lg1_h.dot(u1) + gamma * e.h;
  return p;
}

Vec nominal_unicycle_tracker(const Vec& x, const Vec& y_des, double theta_des, double kp,
                             double kq) {
  if (kp <= 0.0 || kq <= 0.0) throw ConfigError("unicycle tracker gains must be positive");
  Vec u(2);
  u << kp * (x.head(2) - y_des).norm(), -kq * std::sin(x[2] - theta_des);
  return u;
}

Vec nominal_planar_quad(const Vec& x, const PlanarQuad& sys, const ChainController& khat,
                        double theta_des, double kp, double kq) {
  if (kp <= 0.0 || kq <= 0.0) throw ConfigError("planar quadrotor gains must be positive");
  const double rate = desired_heading_rate(x, sys, khat);
  Vec u(2);
  u << k1_pullback(x, sys, khat)[0], kp * wrap_angle(theta_des - x[2]) + kq * (rate - x[5]);
  return u;
}

}  // namespace drdcbf
