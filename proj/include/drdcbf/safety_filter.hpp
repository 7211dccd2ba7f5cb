#pragma once

#include "drdcbf/drd_cbf.hpp"
#include "drdcbf/types.hpp"

namespace drdcbf {

/// min |u - u_nom|^2 subject to a.u + b >= 0.
struct FilterProblem {
  Vec u_nom;
  Vec a;
  double b = 0.0;
};

struct FilterResult {
  Vec u;
  bool active = false;      // the constraint moved u away from u_nom
  bool infeasible = false;  // a == 0 and b < 0
  double residual = 0.0;    // a.u + b at the returned input
};

/// Closed-form single-constraint QP.
FilterResult cbf_qp_filter(const FilterProblem& p);

struct OracleResult {
  bool feasible = false;
  Vec u;
};

/// Exhaustive search over a grid of half-width `radius` and spacing `step`
/// centred on u_nom. Test oracle only: cost grows as (2 radius / step)^m.
OracleResult qp_oracle(const FilterProblem& p, double radius, double step);

/// Builds the DRD-CBF constraint row at x: a = L_g h, b = L_f h + gamma h.
FilterProblem drd_filter_problem(const DrdEval& e, const Vec& u_nom, double gamma);
/// Constraint on u2 alone with u1 fixed: a = L_g2 h, b = L_f h + L_g1 h u1 + gamma h.
FilterProblem drd_filter_problem_u2(const DrdEval& e, const Vec& u1, const Vec& u2_nom,
                                    double gamma);

/// (K_p |y - y_des|, -K_q sin(theta - theta_des)).
Vec nominal_unicycle_tracker(const Vec& x, const Vec& y_des, double theta_des, double kp,
                              double kq);

/// (k1(x), K_p (theta_des - theta) + K_q (theta_des' - omega)) with the angle
/// difference wrapped to (-pi, pi].
Vec nominal_planar_quad(const Vec& x, const PlanarQuad& sys, const ChainController& khat,
                         double theta_des, double kp, double kq);

}  // namespace drdcbf
