#pragma once

#include "drdcbf/models.hpp"
#include "drdcbf/output_chain.hpp"
#include "drdcbf/types.hpp"

#include <memory>
#include <optional>
#include <string>

namespace drdcbf {

/// (A^T A)^{-1} A^T. Throws RankError when cond(A^T A) > 1e12.
Mat left_pseudo_inverse(const Mat& a);

/// k~(x) = k^(y^(x)) - L_f^r y(x): the output acceleration u1 has to realize.
Vec khat_residual(const Vec& x, const ControlAffineSystem& sys, const ChainController& khat);
/// Jacobian of khat_residual with respect to the state.
Mat khat_residual_jacobian(const Vec& x, const ControlAffineSystem& sys,
                           const ChainController& khat);

/// u1 = (L_g1 L_f^{r-1} y)^+ k~(x).
Vec k1_pullback(const Vec& x, const ControlAffineSystem& sys, const ChainController& khat);

/// e = (G G^+ - I) k~ with G = L_g1 L_f^{r-1} y.
Vec tracking_error(const Vec& x, const ControlAffineSystem& sys, const ChainController& khat);

/// d/dt k~ along the partial closed loop x' = f(x) + g1(x) k1(x) (u2 = 0).
Vec khat_residual_rate(const Vec& x, const ControlAffineSystem& sys, const ChainController& khat);

/// Rotation rate of the planar target direction k~ along the partial closed
/// loop (theta_des' for planar models). Zero when |k~| <= eta.
double desired_heading_rate(const Vec& x, const ControlAffineSystem& sys,
                            const ChainController& khat, double eta = 1e-8);

// ---------------------------------------------------------------------------
// Tracking CLFs.

/// Last attitude target of one simulation run. Used when |k~| <= eta.
struct AttitudeHold {
  std::optional<double> heading;
  std::optional<Mat3> rotation;
};

struct ClfEval {
  double V = 0.0;
  double V0 = 0.0;  // attitude part (equals V for the geometric CLFs)
  Vec grad;
  std::optional<double> heading_des;
  std::optional<Mat3> rotation_des;
};

class TrackingClf {
 public:
  virtual ~TrackingClf() = default;
  virtual std::string kind() const = 0;
  /// Evaluates V and its gradient. `hold` is read for degenerate targets and
  /// updated with the new target; pass nullptr for a stateless evaluation.
  virtual ClfEval evaluate(const Vec& x, AttitudeHold* hold = nullptr) const = 0;
  double value(const Vec& x) const { return evaluate(x).V; }
  Vec gradient(const Vec& x) const { return evaluate(x).grad; }

  double beta() const { return beta_; }
  double lambda() const { return lambda_; }

 protected:
  TrackingClf(double beta, double lambda);

 private:
  double beta_;
  double lambda_;
};

using ClfPtr = std::shared_ptr<const TrackingClf>;

/// V = |k~|^2 (1 - cos(theta - theta_des)) for planar models, written as
/// |k~|^2 - |k~| (G^ . k~) with G^ the unit actuation direction.
class GeometricClf2d final : public TrackingClf {
 public:
  GeometricClf2d(SystemPtr sys, ChainControllerPtr khat, double lambda, double beta = 0.5,
                 double eta = 1e-8);
  std::string kind() const override { return "geometric_2d"; }
  ClfEval evaluate(const Vec& x, AttitudeHold* hold = nullptr) const override;

 private:
  SystemPtr sys_;
  ChainControllerPtr khat_;
  double eta_;
};

/// Closed-form V for a given |k~| and attitude error angle (planar).
double geometric_clf_2d_value(double ktilde_norm, double angle_error);

/// Desired rotation whose body z axis is b3 = k~ / |k~| and whose heading
/// follows `yaw`.
Mat3 desired_rotation(const Vec3& ktilde, double yaw);

/// V = (|k~|^2 / 2) tr(I - R^T R_des), k~ = k^ + g e_z.
class GeometricClf3d final : public TrackingClf {
 public:
  GeometricClf3d(std::shared_ptr<const Quad3D> sys, ChainControllerPtr khat, double lambda,
                 double beta = 0.5, double yaw = 0.0, double eta = 1e-8);
  std::string kind() const override { return "geometric_3d"; }
  ClfEval evaluate(const Vec& x, AttitudeHold* hold = nullptr) const override;

  /// R_des and its time derivative along the partial closed loop.
  std::pair<Mat3, Mat3> desired_rotation_and_rate(const Vec& x) const;

 private:
  std::shared_ptr<const Quad3D> sys_;
  ChainControllerPtr khat_;
  double yaw_;
  double eta_;
};

/// Closed-form V for a given |k~| and error rotation R_e.
double geometric_clf_3d_value(double ktilde_norm, const Mat3& re);

/// V = V0 + (omega - k_omega)^2 / (2 mu2), k_omega = theta_des' - k_theta sin(theta - theta_des).
class PlanarBackstepClf final : public TrackingClf {
 public:
  PlanarBackstepClf(std::shared_ptr<const PlanarQuad> sys, ChainControllerPtr khat, double mu2,
                    double k_theta, double lambda, double beta = 0.5, double eta = 1e-8);
  std::string kind() const override { return "backstep_planar"; }
  ClfEval evaluate(const Vec& x, AttitudeHold* hold = nullptr) const override;

  double k_omega(const Vec& x) const;
  /// Desired heading rate along the partial closed loop.
  double heading_rate(const Vec& x) const;
  /// L_{f1} V0 + lambda V0 evaluated with omega replaced by k_omega(x); the
  /// decay condition requires this to be <= 0.
  double decay_residual(const Vec& x) const;

 private:
  std::shared_ptr<const PlanarQuad> sys_;
  ChainControllerPtr khat_;
  GeometricClf2d base_;
  double mu2_;
  double k_theta_;
  double eta_;
};

/// V = V0 + |omega - k_omega|^2 / (2 mu2), k_omega = R_e omega_des + k_R vee(skew(R_e)).
class Quad3dBackstepClf final : public TrackingClf {
 public:
  Quad3dBackstepClf(std::shared_ptr<const Quad3D> sys, ChainControllerPtr khat, double mu2,
                    double k_r, double lambda, double beta = 0.5, double yaw = 0.0,
                    double eta = 1e-8);
  std::string kind() const override { return "backstep_3d"; }
  ClfEval evaluate(const Vec& x, AttitudeHold* hold = nullptr) const override;

  Vec3 k_omega(const Vec& x) const;
  /// Analogue of PlanarBackstepClf::decay_residual.
  double decay_residual(const Vec& x) const;

 private:
  std::shared_ptr<const Quad3D> sys_;
  ChainControllerPtr khat_;
  GeometricClf3d base_;
  double mu2_;
  double k_r_;
  double eta_;
};

// ---------------------------------------------------------------------------
// Composite certificate h = h0(y^(x)) - V(x) / mu.

struct ParameterCheck {
  bool pass = false;
  double slack = 0.0;      // lambda - gamma - eps mu / (4 beta)
  double threshold = 0.0;  // gamma + eps mu / (4 beta)
};

/// Throws ConfigError on a non-positive argument.
ParameterCheck check_parameter_condition(double gamma, double epsilon, double mu, double beta,
                                         double lambda);
/// As above, but throws ConfigError naming the inequality when it fails.
ParameterCheck require_parameter_condition(double gamma, double epsilon, double mu, double beta,
                                           double lambda);

struct DrdParams {
  double mu = 0.06;
  double gamma = 1.0;
  double epsilon = 1.0;
};

struct DrdEval {
  double h = 0.0;
  double h0 = 0.0;
  double V = 0.0;
  Vec grad;      // dh/dx
  double lf_h = 0.0;
  Vec lg1_h;     // 1 x m1 as a vector
  Vec lg2_h;     // 1 x m2 as a vector
  Vec lg1_h0;
  Vec lg1_V;
  Vec lg2_V;
  double e_norm = 0.0;
  bool outside_region = false;  // |L_g2 V| <= region tolerance
  std::optional<double> heading_des;
};

class DrdCbf {
 public:
  static constexpr double kRegionTol = 1e-9;

  /// Validates the parameter condition with the CLF's beta and lambda.
  DrdCbf(SystemPtr sys, BarrierPtr h0, ChainControllerPtr khat, ClfPtr clf, DrdParams params);

  DrdEval evaluate(const Vec& x, AttitudeHold* hold = nullptr) const;
  double h(const Vec& x) const { return evaluate(x).h; }
  Vec grad_h(const Vec& x) const { return evaluate(x).grad; }

  const ControlAffineSystem& system() const { return *sys_; }
  const SystemPtr& system_ptr() const { return sys_; }
  const Barrier& h0() const { return *h0_; }
  const ChainController& khat() const { return *khat_; }
  const ChainControllerPtr& khat_ptr() const { return khat_; }
  const TrackingClf& clf() const { return *clf_; }
  const DrdParams& params() const { return params_; }
  ParameterCheck parameter_check() const { return check_; }

 private:
  SystemPtr sys_;
  BarrierPtr h0_;
  ChainControllerPtr khat_;
  ClfPtr clf_;
  DrdParams params_;
  ParameterCheck check_;
};

enum class CorollaryStatus { NotApplicable, Vacuous, Checked, Counterexample };

const char* to_string(CorollaryStatus s);

struct CorollaryResult {
  CorollaryStatus status = CorollaryStatus::NotApplicable;
  double lg1_h_norm = 0.0;
  double drift_margin = 0.0;  // L_f h + gamma h
};

/// Outside the region where L_g2 V != 0, checks that L_g1 h = 0 implies
/// L_f h >= -gamma h.
CorollaryResult check_corollary_condition(const Vec& x, const DrdCbf& drd, double tol = 1e-9);

}  // namespace drdcbf
