#include "drdcbf/models.hpp"

#include <Eigen/SVD>

#include <sstream>

namespace drdcbf {

namespace {

void require_order(int order, int max_order, const char* what) {
  if (order < 0 || order > max_order) {
    throw std::out_of_range(std::string(what) + ": Lie derivative order out of range");
  }
}

}  // namespace

Vec ControlAffineSystem::dynamics(const Vec& x, const Vec& u) const {
  const int m1 = u1_dim();
  const int m2 = u2_dim();
  if (u.size() != m1 + m2) {
    throw std::invalid_argument("dynamics: input has wrong dimension");
  }
  return drift(x) + g1(x) * u.head(m1) + g2(x) * u.tail(m2);
}

Mat ControlAffineSystem::g(const Vec& x) const {
  Mat out(state_dim(), input_dim());
  out << g1(x), g2(x);
  return out;
}

Vec ControlAffineSystem::chain_coords(const Vec& x) const {
  const int p = output_dim();
  const int r = relative_degree();
  Vec yc(p * r);
  for (int i = 0; i < r; ++i) yc.segment(i * p, p) = lie_f(x, i);
  return yc;
}

Mat ControlAffineSystem::chain_jacobian(const Vec& x) const {
  const int p = output_dim();
  const int r = relative_degree();
  Mat jac(p * r, state_dim());
  for (int i = 0; i < r; ++i) jac.middleRows(i * p, p) = lie_f_jacobian(x, i);
  return jac;
}

// ---------------------------------------------------------------------------

Vec3 unicycle_dynamics(const UnicycleState& s, double v, double omega) {
  return Vec3(s.drift_x + v * std::cos(s.theta), s.drift_y + v * std::sin(s.theta), omega);
}

Vec Unicycle::drift(const Vec&) const { return Vec3(drift_.x(), drift_.y(), 0.0); }

Mat Unicycle::g1(const Vec& x) const {
  return Vec3(std::cos(x[2]), std::sin(x[2]), 0.0);
}

Mat Unicycle::g2(const Vec&) const { return Vec3(0.0, 0.0, 1.0); }

Vec Unicycle::output(const Vec& x) const { return x.head<2>(); }

Vec Unicycle::lie_f(const Vec& x, int order) const {
  require_order(order, 1, "unicycle");
  return order == 0 ? Vec(x.head<2>()) : Vec(drift_);
}

Mat Unicycle::lie_g1(const Vec& x, int order) const {
  require_order(order, 0, "unicycle");
  return Eigen::Vector2d(std::cos(x[2]), std::sin(x[2]));
}

Mat Unicycle::lie_g2(const Vec&, int order) const {
  require_order(order, 0, "unicycle");
  return Mat::Zero(2, 1);
}

Mat Unicycle::lie_f_jacobian(const Vec&, int order) const {
  require_order(order, 1, "unicycle");
  Mat jac = Mat::Zero(2, 3);
  if (order == 0) jac.leftCols<2>().setIdentity();
  return jac;
}

Mat Unicycle::decoupling_jacobian(const Vec& x) const {
  Mat jac = Mat::Zero(2, 3);
  jac(0, 2) = -std::sin(x[2]);
  jac(1, 2) = std::cos(x[2]);
  return jac;
}

void Unicycle::normalize(Vec& x) const { x[2] = wrap_angle(x[2]); }

std::optional<double> Unicycle::heading_of(const Vec& d) const {
  return std::atan2(d[1], d[0]);
}

// ---------------------------------------------------------------------------

Eigen::Matrix<double, 6, 1> planar_quad_dynamics(const PlanarQuadState& s, double thrust,
                                                 double moment) {
  Eigen::Matrix<double, 6, 1> d;
  d << s.vx, s.vz, s.omega, -thrust * std::sin(s.theta), -s.gravity + thrust * std::cos(s.theta),
      moment;
  return d;
}

Vec PlanarQuad::drift(const Vec& x) const {
  Vec f(6);
  f << x[3], x[4], x[5], 0.0, -gravity_, 0.0;
  return f;
}

Mat PlanarQuad::g1(const Vec& x) const {
  Mat g = Mat::Zero(6, 1);
  g(3, 0) = -std::sin(x[2]);
  g(4, 0) = std::cos(x[2]);
  return g;
}

Mat PlanarQuad::g2(const Vec&) const {
  Mat g = Mat::Zero(6, 1);
  g(5, 0) = 1.0;
  return g;
}

Vec PlanarQuad::output(const Vec& x) const { return x.head<2>(); }

Vec PlanarQuad::lie_f(const Vec& x, int order) const {
  require_order(order, 2, "planar_quad");
  switch (order) {
    case 0: return x.head<2>();
    case 1: return x.segment<2>(3);
    default: return Eigen::Vector2d(0.0, -gravity_);
  }
}

Mat PlanarQuad::lie_g1(const Vec& x, int order) const {
  require_order(order, 1, "planar_quad");
  if (order == 0) return Mat::Zero(2, 1);
  return Eigen::Vector2d(-std::sin(x[2]), std::cos(x[2]));
}

Mat PlanarQuad::lie_g2(const Vec&, int order) const {
  require_order(order, 1, "planar_quad");
  return Mat::Zero(2, 1);
}

Mat PlanarQuad::lie_f_jacobian(const Vec&, int order) const {
  require_order(order, 2, "planar_quad");
  Mat jac = Mat::Zero(2, 6);
  if (order == 0) jac.block<2, 2>(0, 0).setIdentity();
  if (order == 1) jac.block<2, 2>(0, 3).setIdentity();
  return jac;
}

Mat PlanarQuad::decoupling_jacobian(const Vec& x) const {
  Mat jac = Mat::Zero(2, 6);
  jac(0, 2) = -std::cos(x[2]);
  jac(1, 2) = -std::sin(x[2]);
  return jac;
}

void PlanarQuad::normalize(Vec& x) const { x[2] = wrap_angle(x[2]); }

std::optional<double> PlanarQuad::heading_of(const Vec& d) const {
  // (-sin t, cos t) is parallel to d.
  return std::atan2(-d[0], d[1]);
}

// ---------------------------------------------------------------------------

Vec4 quat_multiply(const Vec4& a, const Vec4& b) {
  const double w1 = a[0], x1 = a[1], y1 = a[2], z1 = a[3];
  const double w2 = b[0], x2 = b[1], y2 = b[2], z2 = b[3];
  return Vec4(w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
              w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
              w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
              w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2);
}

Mat3 quat_to_rotation(const Vec4& q) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Mat3 r;
  r << w * w + x * x - y * y - z * z, 2.0 * (x * y - w * z), 2.0 * (x * z + w * y),
       2.0 * (x * y + w * z), w * w - x * x + y * y - z * z, 2.0 * (y * z - w * x),
       2.0 * (x * z - w * y), 2.0 * (y * z + w * x), w * w - x * x - y * y + z * z;
  return r;
}

std::array<Mat3, 4> quat_rotation_partials(const Vec4& q) {
  const double w = 2.0 * q[0], x = 2.0 * q[1], y = 2.0 * q[2], z = 2.0 * q[3];
  std::array<Mat3, 4> d;
  d[0] << w, -z, y,
          z, w, -x,
          -y, x, w;
  d[1] << x, y, z,
          y, -x, -w,
          z, w, -x;
  d[2] << -y, x, w,
          x, y, z,
          -w, z, -y;
  d[3] << -z, -w, x,
          w, -z, y,
          x, y, z;
  return d;
}

Vec4 rotation_to_quat(const Mat3& r) {
  Eigen::Quaterniond q(r);
  q.normalize();
  Vec4 out(q.w(), q.x(), q.y(), q.z());
  if (out[0] < 0.0) out = -out;
  return out;
}

Eigen::Matrix<double, 13, 1> quad3d_dynamics(const Quad3DState& s, const Quad3DParams& p,
                                             double thrust, const Vec3& moment) {
  if (std::abs(s.attitude.norm() - 1.0) > 1e-6) {
    throw ConfigError("quad3d_dynamics: attitude quaternion is not unit norm");
  }
  const Quad3D model(p);
  Vec u(4);
  u << thrust, moment;
  return model.dynamics(Quad3D::pack(s), u);
}

Quad3D::Quad3D(Quad3DParams params) : params_(std::move(params)) {
  if (params_.mass <= 0.0) throw ConfigError("quad3d: mass must be positive");
  if (!params_.inertia.isApprox(params_.inertia.transpose(), 1e-12)) {
    throw ConfigError("quad3d: inertia must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig(params_.inertia);
  if (eig.eigenvalues().minCoeff() <= 0.0) {
    throw ConfigError("quad3d: inertia must be positive definite");
  }
  inertia_inv_ = params_.inertia.inverse();
}

std::vector<std::string> Quad3D::state_names() const {
  return {"x", "y", "z", "vx", "vy", "vz", "qw", "qx", "qy", "qz", "wx", "wy", "wz"};
}

Vec Quad3D::pack(const Quad3DState& s) {
  Vec x(13);
  x << s.position, s.velocity, s.attitude, s.body_rate;
  return x;
}

Quad3DState Quad3D::unpack(const Vec& x) {
  Quad3DState s;
  s.position = x.segment<3>(0);
  s.velocity = x.segment<3>(3);
  s.attitude = x.segment<4>(6);
  s.body_rate = x.segment<3>(10);
  return s;
}

Vec Quad3D::drift(const Vec& x) const {
  const Vec4 q = x.segment<4>(6);
  const Vec3 w = x.segment<3>(10);
  Vec f(13);
  f.segment<3>(0) = x.segment<3>(3);
  f.segment<3>(3) = Vec3(0.0, 0.0, -params_.gravity);
  f.segment<4>(6) = 0.5 * quat_multiply(q, Vec4(0.0, w.x(), w.y(), w.z()));
  // Gyroscopic coupling lives in the drift so the model is physical for any thrust.
  f.segment<3>(10) = -inertia_inv_ * w.cross(params_.inertia * w);
  return f;
}

Mat Quad3D::g1(const Vec& x) const {
  Mat g = Mat::Zero(13, 1);
  g.block<3, 1>(3, 0) = quat_to_rotation(x.segment<4>(6)).col(2) / params_.mass;
  return g;
}

Mat Quad3D::g2(const Vec&) const {
  Mat g = Mat::Zero(13, 3);
  g.block<3, 3>(10, 0) = inertia_inv_;
  return g;
}

Vec Quad3D::output(const Vec& x) const { return x.head<3>(); }

Vec Quad3D::lie_f(const Vec& x, int order) const {
  require_order(order, 2, "quad3d");
  switch (order) {
    case 0: return x.head<3>();
    case 1: return x.segment<3>(3);
    default: return Vec3(0.0, 0.0, -params_.gravity);
  }
}

Mat Quad3D::lie_g1(const Vec& x, int order) const {
  require_order(order, 1, "quad3d");
  if (order == 0) return Mat::Zero(3, 1);
  return Mat(quat_to_rotation(x.segment<4>(6)).col(2) / params_.mass);
}

Mat Quad3D::lie_g2(const Vec&, int order) const {
  require_order(order, 1, "quad3d");
  return Mat::Zero(3, 3);
}

Mat Quad3D::lie_f_jacobian(const Vec&, int order) const {
  require_order(order, 2, "quad3d");
  Mat jac = Mat::Zero(3, 13);
  if (order == 0) jac.block<3, 3>(0, 0).setIdentity();
  if (order == 1) jac.block<3, 3>(0, 3).setIdentity();
  return jac;
}

Mat Quad3D::decoupling_jacobian(const Vec& x) const {
  const auto partials = quat_rotation_partials(x.segment<4>(6));
  Mat jac = Mat::Zero(3, 13);
  for (int j = 0; j < 4; ++j) jac.col(6 + j) = partials[j].col(2) / params_.mass;
  return jac;
}

void Quad3D::normalize(Vec& x) const { x.segment<4>(6).normalize(); }

// ---------------------------------------------------------------------------

int numerical_rank(const Mat& m, double tol) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Mat> svd(m);
  int rank = 0;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) {
    if (svd.singularValues()[i] > tol) ++rank;
  }
  return rank;
}

namespace {

// Directional central difference of a vector field along `dir`.
template <typename F>
Vec directional_fd(const F& fn, const Vec& x, const Vec& dir, double step) {
  return (fn(Vec(x + step * dir)) - fn(Vec(x - step * dir))) / (2.0 * step);
}

}  // namespace

DrdCheckReport check_dual_relative_degree(const ControlAffineSystem& sys,
                                          const std::vector<Vec>& samples, double tol) {
  if (samples.empty()) throw std::invalid_argument("check_dual_relative_degree: no samples");
  DrdCheckReport report;
  report.drd = sys.declared_drd();
  report.samples = static_cast<int>(samples.size());
  const int r = report.drd.r;
  const int q = report.drd.q;
  const int m1 = sys.u1_dim();
  const int m2 = sys.u2_dim();
  if (q < 1 || q > 2) throw std::invalid_argument("check_dual_relative_degree: q must be 1 or 2");

  constexpr double kStep = 1e-6;
  // Nested central differences carry ~1e-4 noise; rank threshold sits above it.
  const double rank_tol = std::max(tol, 1e-3);

  auto fail = [&](const Vec& x, const std::string& what) {
    if (report.pass) {
      report.pass = false;
      report.failed_condition = what;
      report.counterexample = x;
    }
  };

  // Vectorized decoupling matrix.
  auto decoupling_vec = [&](const Vec& x) -> Vec {
    const Mat d = sys.decoupling(x);
    return Eigen::Map<const Vec>(d.data(), d.size());
  };

  for (const Vec& x : samples) {
    for (int i = 0; i + 1 < r; ++i) {
      if (sys.lie_g1(x, i).norm() > tol || sys.lie_g2(x, i).norm() > tol) {
        report.zero_lower_order = false;
        fail(x, "L_g L_f^i y != 0 for i < r-1");
      }
    }
    if (sys.lie_g2(x, r - 1).norm() > tol) {
      report.g2_decoupled = false;
      fail(x, "L_g2 L_f^{r-1} y != 0");
    }
    if (numerical_rank(sys.decoupling(x), tol) != m1) {
      report.g1_full_rank = false;
      fail(x, "rank L_g1 L_f^{r-1} y != m1");
    }

    const Mat g2 = sys.g2(x);
    Mat second(sys.output_dim() * m1, m2);
    for (int j = 0; j < m2; ++j) {
      const Vec dir = g2.col(j);
      if (q == 1) {
        second.col(j) = directional_fd(decoupling_vec, x, dir, kStep);
      } else {
        auto lf_decoupling = [&](const Vec& z) -> Vec {
          return directional_fd(decoupling_vec, z, sys.drift(z), kStep);
        };
        second.col(j) = directional_fd(lf_decoupling, x, dir, kStep);
      }
    }
    const int rank = numerical_rank(second, rank_tol);
    if (report.min_second_order_rank < 0 || rank < report.min_second_order_rank) {
      report.min_second_order_rank = rank;
    }
    if (rank != m2) {
      report.second_order_rank = false;
      fail(x, "rank L_g2 L_f^{q-1} L_g1 L_f^{r-1} y != m2");
    }
  }
  return report;
}

}  // namespace drdcbf
