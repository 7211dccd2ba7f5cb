#pragma once

#include "drdcbf/types.hpp"

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace drdcbf {

struct DualRelativeDegree {
  int r = 1;
  int q = 1;
};

/**
 * Control-affine system x' = f(x) + g1(x) u1 + g2(x) u2 with an output y(x).
 *
 * Implementations expose the Lie derivatives of y in closed form:
 *   lie_f(x, i)  = L_f^i y        for i = 0..r
 *   lie_g1(x, i) = L_g1 L_f^i y   for i = 0..r-1  (p x m1)
 *   lie_g2(x, i) = L_g2 L_f^i y   for i = 0..r-1  (p x m2)
 * and the Jacobians needed to differentiate certificates built on them.
 */
class ControlAffineSystem {
 public:
  virtual ~ControlAffineSystem() = default;

  virtual std::string id() const = 0;
  virtual int state_dim() const = 0;
  virtual int u1_dim() const = 0;
  virtual int u2_dim() const = 0;
  virtual int output_dim() const = 0;
  virtual DualRelativeDegree declared_drd() const = 0;
  virtual std::vector<std::string> state_names() const = 0;

  virtual Vec drift(const Vec& x) const = 0;
  virtual Mat g1(const Vec& x) const = 0;
  virtual Mat g2(const Vec& x) const = 0;
  virtual Vec output(const Vec& x) const = 0;

  virtual Vec lie_f(const Vec& x, int order) const = 0;
  virtual Mat lie_g1(const Vec& x, int order) const = 0;
  virtual Mat lie_g2(const Vec& x, int order) const = 0;

  /// d(L_f^i y)/dx, p x n.
  virtual Mat lie_f_jacobian(const Vec& x, int order) const = 0;
  /// d(L_g1 L_f^{r-1} y)/dx for single-column u1 (m1 == 1), p x n.
  virtual Mat decoupling_jacobian(const Vec& x) const = 0;

  /// Projects a state back onto its manifold (angle wrap, unit quaternion).
  virtual void normalize(Vec& x) const { (void)x; }

  /// Heading angle whose actuation direction L_g1 L_f^{r-1} y points along
  /// `direction`. Only meaningful for planar models with a scalar heading.
  virtual std::optional<double> heading_of(const Vec& direction) const {
    (void)direction;
    return std::nullopt;
  }

  int input_dim() const { return u1_dim() + u2_dim(); }
  int relative_degree() const { return declared_drd().r; }
  int chain_dim() const { return output_dim() * relative_degree(); }

  /// f(x) + g1(x) u1 + g2(x) u2 with u = (u1, u2).
  Vec dynamics(const Vec& x, const Vec& u) const;
  /// Full actuation matrix [g1 g2].
  Mat g(const Vec& x) const;
  /// Output coordinates (y, L_f y, ..., L_f^{r-1} y).
  Vec chain_coords(const Vec& x) const;
  Mat chain_jacobian(const Vec& x) const;
  /// L_g1 L_f^{r-1} y.
  Mat decoupling(const Vec& x) const { return lie_g1(x, relative_degree() - 1); }
};

using SystemPtr = std::shared_ptr<const ControlAffineSystem>;

// ---------------------------------------------------------------------------
// Unicycle with constant drift: state (x, y, theta), input (v, omega).

struct UnicycleState {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
  double drift_x = 0.0;
  double drift_y = 0.0;
};

Vec3 unicycle_dynamics(const UnicycleState& s, double v, double omega);

class Unicycle final : public ControlAffineSystem {
 public:
  explicit Unicycle(double drift_x = 0.0, double drift_y = 0.0)
      : drift_(drift_x, drift_y) {}

  std::string id() const override { return "unicycle"; }
  int state_dim() const override { return 3; }
  int u1_dim() const override { return 1; }
  int u2_dim() const override { return 1; }
  int output_dim() const override { return 2; }
  DualRelativeDegree declared_drd() const override { return {1, 1}; }
  std::vector<std::string> state_names() const override { return {"x", "y", "theta"}; }

  Vec drift(const Vec& x) const override;
  Mat g1(const Vec& x) const override;
  Mat g2(const Vec& x) const override;
  Vec output(const Vec& x) const override;
  Vec lie_f(const Vec& x, int order) const override;
  Mat lie_g1(const Vec& x, int order) const override;
  Mat lie_g2(const Vec& x, int order) const override;
  Mat lie_f_jacobian(const Vec& x, int order) const override;
  Mat decoupling_jacobian(const Vec& x) const override;
  void normalize(Vec& x) const override;
  std::optional<double> heading_of(const Vec& direction) const override;

  const Eigen::Vector2d& drift_velocity() const { return drift_; }

 private:
  Eigen::Vector2d drift_;
};

// ---------------------------------------------------------------------------
// Planar quadrotor with unit mass and inertia: state (x, z, theta, xd, zd, omega),
// input (thrust, moment). Thrust acts along (-sin theta, cos theta).

struct PlanarQuadState {
  double x = 0.0;
  double z = 0.0;
  double theta = 0.0;
  double vx = 0.0;
  double vz = 0.0;
  double omega = 0.0;
  double gravity = 9.81;
};

Eigen::Matrix<double, 6, 1> planar_quad_dynamics(const PlanarQuadState& s, double thrust, double moment);

class PlanarQuad final : public ControlAffineSystem {
 public:
  explicit PlanarQuad(double gravity = 9.81) : gravity_(gravity) {}

  std::string id() const override { return "planar_quad"; }
  int state_dim() const override { return 6; }
  int u1_dim() const override { return 1; }
  int u2_dim() const override { return 1; }
  int output_dim() const override { return 2; }
  DualRelativeDegree declared_drd() const override { return {2, 2}; }
  std::vector<std::string> state_names() const override {
    return {"x", "z", "theta", "vx", "vz", "omega"};
  }

  Vec drift(const Vec& x) const override;
  Mat g1(const Vec& x) const override;
  Mat g2(const Vec& x) const override;
  Vec output(const Vec& x) const override;
  Vec lie_f(const Vec& x, int order) const override;
  Mat lie_g1(const Vec& x, int order) const override;
  Mat lie_g2(const Vec& x, int order) const override;
  Mat lie_f_jacobian(const Vec& x, int order) const override;
  Mat decoupling_jacobian(const Vec& x) const override;
  void normalize(Vec& x) const override;
  std::optional<double> heading_of(const Vec& direction) const override;

  double gravity() const { return gravity_; }

 private:
  double gravity_;
};

// ---------------------------------------------------------------------------
// 3D quadrotor: state (y[3], yd[3], q[4] scalar-first, omega[3]), input
// (thrust, moment[3]).

/// Hamilton product of scalar-first quaternions.
Vec4 quat_multiply(const Vec4& a, const Vec4& b);
/// Rotation matrix of a scalar-first quaternion (homogeneous quadratic form).
Mat3 quat_to_rotation(const Vec4& q);
/// d R(q) / d q_j for j = 0..3.
std::array<Mat3, 4> quat_rotation_partials(const Vec4& q);
/// Unit quaternion of a rotation matrix (scalar-first, w >= 0).
Vec4 rotation_to_quat(const Mat3& r);

struct Quad3DState {
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  Vec4 attitude = Vec4(1.0, 0.0, 0.0, 0.0);
  Vec3 body_rate = Vec3::Zero();
};

struct Quad3DParams {
  double mass = 1.0;
  Mat3 inertia = Mat3::Identity();
  double gravity = 9.81;
};

/// Throws ConfigError when |q| deviates from 1 by more than 1e-6.
Eigen::Matrix<double, 13, 1> quad3d_dynamics(const Quad3DState& s, const Quad3DParams& p,
                                             double thrust, const Vec3& moment);

class Quad3D final : public ControlAffineSystem {
 public:
  explicit Quad3D(Quad3DParams params = {});

  std::string id() const override { return "quad3d"; }
  int state_dim() const override { return 13; }
  int u1_dim() const override { return 1; }
  int u2_dim() const override { return 3; }
  int output_dim() const override { return 3; }
  DualRelativeDegree declared_drd() const override { return {2, 2}; }
  std::vector<std::string> state_names() const override;

  Vec drift(const Vec& x) const override;
  Mat g1(const Vec& x) const override;
  Mat g2(const Vec& x) const override;
  Vec output(const Vec& x) const override;
  Vec lie_f(const Vec& x, int order) const override;
  Mat lie_g1(const Vec& x, int order) const override;
  Mat lie_g2(const Vec& x, int order) const override;
  Mat lie_f_jacobian(const Vec& x, int order) const override;
  Mat decoupling_jacobian(const Vec& x) const override;
  void normalize(Vec& x) const override;

  const Quad3DParams& params() const { return params_; }
  static Vec pack(const Quad3DState& s);
  static Quad3DState unpack(const Vec& x);

 private:
  Quad3DParams params_;
  Mat3 inertia_inv_;
};

// ---------------------------------------------------------------------------
// Dual relative degree diagnostics.

struct DrdCheckReport {
  bool pass = true;
  int samples = 0;
  DualRelativeDegree drd;
  // Per-condition outcome across all samples.
  bool zero_lower_order = true;   // L_g L_f^i y == 0, i < r-1
  bool g2_decoupled = true;       // L_g2 L_f^{r-1} y == 0
  bool g1_full_rank = true;       // rank L_g1 L_f^{r-1} y == m1
  bool second_order_rank = true;  // rank L_g2 L_f^{q-1} L_g1 L_f^{r-1} y == m2
  int min_second_order_rank = -1;
  std::string failed_condition;
  std::optional<Vec> counterexample;
};

/// Evaluates the dual relative degree conditions at each sample. The
/// second-order rank condition is evaluated by central-difference Lie
/// differentiation (step 1e-6) and is supported for q <= 2.
DrdCheckReport check_dual_relative_degree(const ControlAffineSystem& sys,
                                          const std::vector<Vec>& samples,
                                          double tol = 1e-6);

/// Numerical rank: number of singular values above tol.
int numerical_rank(const Mat& m, double tol);

}  // namespace drdcbf
