#pragma once

#include "drdcbf/sampling.hpp"
#include "drdcbf/types.hpp"

#include <limits>
#include <memory>
#include <string>

namespace drdcbf {

/// Integrator chain d/dt yc = A yc + B v on stacked output coordinates
/// yc = (y, y', ..., y^(r-1)) in R^{p r}.
struct OutputChainSpec {
  int p = 1;
  int r = 1;
  Mat A;
  Mat B;

  static OutputChainSpec integrator(int p, int r);
  int dim() const { return p * r; }
};

// ---------------------------------------------------------------------------
// Barrier functions on output coordinates.

class Barrier {
 public:
  virtual ~Barrier() = default;
  virtual std::string kind() const = 0;
  virtual int dim() const = 0;
  virtual double value(const Vec& yc) const = 0;
  virtual Vec gradient(const Vec& yc) const = 0;
  /// Central differences of gradient() unless overridden.
  virtual Mat hessian(const Vec& yc) const;
};

using BarrierPtr = std::shared_ptr<const Barrier>;

/// 1 - (y - c)^T diag(w) (y - c). Throws ConfigError on non-positive weights.
double ellipse_h0(const Vec& y, const Vec& center, const Vec& weights);
/// |y - y_obs|^2 - r^2.
double obstacle_h(const Vec& y, const Vec& obstacle, double radius);
/// limit - y[axis].
double geofence_h(const Vec& y, double limit, int axis = 0);

class EllipseBarrier final : public Barrier {
 public:
  EllipseBarrier(Vec center, Vec weights);
  std::string kind() const override { return "ellipse"; }
  int dim() const override { return static_cast<int>(center_.size()); }
  double value(const Vec& y) const override;
  Vec gradient(const Vec& y) const override;
  Mat hessian(const Vec& y) const override;

  const Vec& center() const { return center_; }
  const Vec& weights() const { return weights_; }

 private:
  Vec center_;
  Vec weights_;
};

class ObstacleBarrier final : public Barrier {
 public:
  ObstacleBarrier(Vec obstacle, double radius);
  std::string kind() const override { return "obstacle"; }
  int dim() const override { return static_cast<int>(obstacle_.size()); }
  double value(const Vec& y) const override;
  Vec gradient(const Vec& y) const override;
  Mat hessian(const Vec& y) const override;

  const Vec& obstacle() const { return obstacle_; }
  double radius() const { return radius_; }

 private:
  Vec obstacle_;
  double radius_;
};

class GeofenceBarrier final : public Barrier {
 public:
  GeofenceBarrier(int dim, int axis, double limit);
  std::string kind() const override { return "geofence"; }
  int dim() const override { return dim_; }
  double value(const Vec& y) const override;
  Vec gradient(const Vec& y) const override;
  Mat hessian(const Vec& y) const override;

  int axis() const { return axis_; }
  double limit() const { return limit_; }

 private:
  int dim_;
  int axis_;
  double limit_;
};

/// h0(y, y') = grad h_base(y)^T y' + alpha h_base(y) on a second-order chain.
class HocbfBarrier final : public Barrier {
 public:
  HocbfBarrier(BarrierPtr base, double alpha);
  std::string kind() const override { return "hocbf(" + base_->kind() + ")"; }
  int dim() const override { return 2 * base_->dim(); }
  double value(const Vec& yc) const override;
  Vec gradient(const Vec& yc) const override;
  Mat hessian(const Vec& yc) const override;

  const Barrier& base() const { return *base_; }
  double alpha() const { return alpha_; }

 private:
  BarrierPtr base_;
  double alpha_;
};

class ChainController;
using ChainControllerPtr = std::shared_ptr<const ChainController>;

/// h0(y, y') = h_base(y) - |y' - k_v(y)|^2 / (2 mu_b).
class BackstepBarrier final : public Barrier {
 public:
  BackstepBarrier(BarrierPtr base, ChainControllerPtr safe_velocity, double mu_b);
  std::string kind() const override { return "backstep(" + base_->kind() + ")"; }
  int dim() const override { return 2 * base_->dim(); }
  double value(const Vec& yc) const override;
  Vec gradient(const Vec& yc) const override;

  const Barrier& base() const { return *base_; }
  const ChainController& safe_velocity() const { return *kv_; }

 private:
  BarrierPtr base_;
  ChainControllerPtr kv_;
  double mu_b_;
};

/// High-order CBF extension of a first-order barrier; the chain must have r == 2.
BarrierPtr hocbf_extend(BarrierPtr base, double alpha, const OutputChainSpec& chain);
/// Backstepping extension with safe velocity k_v. Throws ConfigError if mu_b <= 0.
BarrierPtr backstep_extend(BarrierPtr base, ChainControllerPtr safe_velocity, double mu_b);

// ---------------------------------------------------------------------------
// Controllers for the integrator chain, R^{p r} -> R^p.

class ChainController {
 public:
  virtual ~ChainController() = default;
  virtual int dim() const = 0;
  virtual int output_dim() const = 0;
  virtual Vec evaluate(const Vec& yc) const = 0;
  /// Central differences (step 1e-6) unless overridden.
  virtual Mat jacobian(const Vec& yc) const;
};

/// k(y) = -rho P^{1/2} (y - c) for a diagonal P.
class LinearEllipseController final : public ChainController {
 public:
  LinearEllipseController(Vec center, Vec weights, double rho);
  int dim() const override { return static_cast<int>(center_.size()); }
  int output_dim() const override { return dim(); }
  Vec evaluate(const Vec& y) const override;
  Mat jacobian(const Vec& y) const override;

 private:
  Vec center_;
  Vec sqrt_weights_;
  double rho_;
};

/// k(y, y') = -kp (y - goal) - kd y'. For r == 1 the velocity term is absent.
class ChainPd final : public ChainController {
 public:
  ChainPd(int p, int r, Vec goal, double kp, double kd);
  int dim() const override { return p_ * r_; }
  int output_dim() const override { return p_; }
  Vec evaluate(const Vec& yc) const override;
  Mat jacobian(const Vec& yc) const override;

 private:
  int p_;
  int r_;
  Vec goal_;
  double kp_;
  double kd_;
};

struct SmoothSafeParams {
  double gamma = 1.0;
  double epsilon = 1.0;
  double kappa = 10.0;  // softplus sharpness
  double floor = 1e-2;  // lower cap on |a|^2 in the correction gain
};

/// (1/kappa) log(1 + exp(kappa z)), overflow safe.
double softplus(double z, double kappa);
/// d softplus / dz.
double softplus_slope(double z, double kappa);
/// C2 smoothing of max(s, floor): equals s for s >= floor, bounded below by s
/// and by 0.61 floor.
double smooth_floor(double s, double floor);
double smooth_floor_slope(double s, double floor);

/// Softplus-relaxed min-norm correction of a nominal chain controller:
///   k(yc) = k_nom(yc) + a sp(-psi) / D(|a|^2),
///   a   = B^T grad h0,
///   psi = grad h0 (A yc + B k_nom) + gamma h0 - |a|^2 / epsilon.
/// The ISSf inequality holds strictly wherever |a|^2 >= floor.
class SmoothSafeController final : public ChainController {
 public:
  SmoothSafeController(BarrierPtr barrier, OutputChainSpec chain, ChainControllerPtr nominal,
                       SmoothSafeParams params);
  int dim() const override { return chain_.dim(); }
  int output_dim() const override { return chain_.p; }
  Vec evaluate(const Vec& yc) const override;
  Mat jacobian(const Vec& yc) const override;

  /// Filter activation psi at yc.
  double activation(const Vec& yc) const;
  const SmoothSafeParams& params() const { return params_; }

 private:
  BarrierPtr barrier_;
  OutputChainSpec chain_;
  ChainControllerPtr nominal_;
  SmoothSafeParams params_;
};

/// Free-function form of SmoothSafeController::evaluate.
Vec smooth_safe_khat(const Vec& yc, const Barrier& barrier, const OutputChainSpec& chain,
                     const ChainController& nominal, const SmoothSafeParams& params);

// ---------------------------------------------------------------------------

/// h0 together with its ISSf-safe chain controller.
struct BarrierCertificate {
  BarrierPtr h0;
  ChainControllerPtr khat;
  OutputChainSpec chain;
  double gamma = 1.0;
  double epsilon = 1.0;
};

/// grad h0 (A yc + B khat) + gamma h0 - |grad h0 B|^2 / epsilon.
double issf_margin(const BarrierCertificate& cert, const Vec& yc);

struct IssfReport {
  bool pass = false;
  int samples = 0;
  int skipped = 0;         // samples with h0 below the floor
  int rounding_ties = 0;   // |margin| within rounding of its terms
  int violations = 0;      // margin below -(rounding tolerance)
  double min_margin = 0.0;
  Vec worst_point;
};

/// Samples the ISSf margin on n Halton points of `box`. A margin counts as a
/// violation when it is below -1e-12 times the magnitude of its terms; smaller
/// magnitudes are rounding ties (the softplus tail of a strictly positive
/// margin underflows far from the boundary). Points with h0 < h0_floor are
/// skipped: at a critical point of h0 with h0 < 0 no controller satisfies the
/// inequality, so it is only required on a neighbourhood of the safe set.
IssfReport verify_issf_linear(const BarrierCertificate& cert, const Box& box, int n,
                              double h0_floor = -std::numeric_limits<double>::infinity());

}  // namespace drdcbf
