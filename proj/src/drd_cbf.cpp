#include "drdcbf/drd_cbf.hpp"

#include <cmath>
#include <sstream>

namespace drdcbf {
namespace {

constexpr double kMaxCondition = 1e12;

Mat pseudo_inverse_at(const Mat& a, const Vec* x) {
  const Mat ata = a.transpose() * a;
  const Eigen::JacobiSVD<Mat> svd(ata);
  const Vec& sv = svd.singularValues();
  const double smax = sv.size() > 0 ? sv[0] : 0.0;
  const double smin = sv.size() > 0 ? sv[sv.size() - 1] : 0.0;
  if (!(smin > 0.0) || smax / smin > kMaxCondition) {
    std::ostringstream msg;
    msg << "decoupling matrix L_g1 L_f^{r-1} y lost column rank";
    if (x != nullptr) msg << " at state " << format_vec(*x);
    throw RankError(msg.str());
  }
  return ata.ldlt().solve(a.transpose());
}

Vec unit_direction(const Mat& g) {
  const Vec col = g.col(0);
  return col / col.norm();
}

/// Jacobian of the unit actuation direction with respect to the state.
Mat unit_direction_jacobian(const ControlAffineSystem& sys, const Vec& x) {
  const Vec col = sys.decoupling(x).col(0);
  const double n = col.norm();
  const Vec u = col / n;
  const Mat proj = Mat::Identity(col.size(), col.size()) - u * u.transpose();
  return proj * sys.decoupling_jacobian(x) / n;
}

double cross2(const Vec& a, const Vec& b) { return a[0] * b[1] - a[1] * b[0]; }

/// Partial closed-loop vector field f(x) + g1(x) k1(x).
Vec partial_closed_loop(const Vec& x, const ControlAffineSystem& sys, const ChainController& khat) {
  return sys.drift(x) + sys.g1(x) * k1_pullback(x, sys, khat);
}

struct DesiredFrame {
  Mat3 rotation;
  std::array<Mat3, 3> column_jacobians;  // d b_i / d k~
};

DesiredFrame desired_frame(const Vec3& kt, double yaw) {
  const double n = kt.norm();
  const Vec3 b3 = kt / n;
  const Mat3 j3 = (Mat3::Identity() - b3 * b3.transpose()) / n;
  const Vec3 b1c(std::cos(yaw), std::sin(yaw), 0.0);
  const Vec3 c = b3.cross(b1c);
  const double cn = c.norm();
  if (cn < 1e-9) throw Error("desired_rotation: thrust direction parallel to the heading axis");
  const Mat3 jc = -skew(b1c) * j3;
  const Vec3 b2 = c / cn;
  const Mat3 j2 = (Mat3::Identity() - b2 * b2.transpose()) / cn * jc;
  const Vec3 b1 = b2.cross(b3);
  const Mat3 j1 = skew(b2) * j3 - skew(b3) * j2;
  DesiredFrame out;
  out.rotation.col(0) = b1;
  out.rotation.col(1) = b2;
  out.rotation.col(2) = b3;
  out.column_jacobians = {j1, j2, j3};
  return out;
}

template <typename F>
Mat numeric_jacobian(const F& fn, const Vec& x, double step) {
  const Vec f0 = fn(x);
  Mat jac(f0.size(), x.size());
  Vec probe = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    probe[j] = x[j] + step;
    const Vec fp = fn(probe);
    probe[j] = x[j] - step;
    const Vec fm = fn(probe);
    probe[j] = x[j];
    jac.col(j) = (fp - fm) / (2.0 * step);
  }
  return jac;
}

constexpr double kOuterStep = 1e-5;

}  // namespace

Mat left_pseudo_inverse(const Mat& a) { return pseudo_inverse_at(a, nullptr); }

Vec khat_residual(const Vec& x, const ControlAffineSystem& sys, const ChainController& khat) {
  return khat.evaluate(sys.chain_coords(x)) - sys.lie_f(x, sys.relative_degree());
}

Mat khat_residual_jacobian(const Vec& x, const ControlAffineSystem& sys,
                           const ChainController& khat) {
  return khat.jacobian(sys.chain_coords(x)) * sys.chain_jacobian(x) -
         sys.lie_f_jacobian(x, sys.relative_degree());
}

Vec k1_pullback(const Vec& x, const ControlAffineSystem& sys, const ChainController& khat) {
  return pseudo_inverse_at(sys.decoupling(x), &x) * khat_residual(x, sys, khat);
}

Vec tracking_error(const Vec& x, const ControlAffineSystem& sys, const ChainController& khat) {
  const Mat g = sys.decoupling(x);
  const Vec kt = khat_residual(x, sys, khat);
  return g * (pseudo_inverse_at(g, &x) * kt) - kt;
}

Vec khat_residual_rate(const Vec& x, const ControlAffineSystem& sys, const ChainController& khat) {
  return khat_residual_jacobian(x, sys, khat) * partial_closed_loop(x, sys, khat);
}

double desired_heading_rate(const Vec& x, const ControlAffineSystem& sys,
                            const ChainController& khat, double eta) {
  const Vec kt = khat_residual(x, sys, khat);
  const double n2 = kt.squaredNorm();
  if (n2 <= eta * eta) return 0.0;
  return cross2(kt, khat_residual_rate(x, sys, khat)) / n2;
}

// ---------------------------------------------------------------------------

TrackingClf::TrackingClf(double beta, double lambda) : beta_(beta), lambda_(lambda) {
  if (beta_ <= 0.0) throw ConfigError("tracking CLF: beta must be positive");
  if (lambda_ <= 0.0) throw ConfigError("tracking CLF: lambda must be positive");
}

double geometric_clf_2d_value(double ktilde_norm, double angle_error) {
  return ktilde_norm * ktilde_norm * (1.0 - std::cos(angle_error));
}

GeometricClf2d::GeometricClf2d(SystemPtr sys, ChainControllerPtr khat, double lambda,
                               double beta, double eta)
    : TrackingClf(beta, lambda), sys_(std::move(sys)), khat_(std::move(khat)), eta_(eta) {
  if (!sys_ || !khat_) throw ConfigError("geometric CLF: missing system or khat");
  if (sys_->output_dim() != 2 || sys_->u1_dim() != 1) {
    throw ConfigError("geometric_2d CLF needs a planar output and scalar u1");
  }
}

ClfEval GeometricClf2d::evaluate(const Vec& x, AttitudeHold* hold) const {
  const Vec kt = khat_residual(x, *sys_, *khat_);
  const Vec ghat = unit_direction(sys_->decoupling(x));
  const double n = kt.norm();
  const double c = ghat.dot(kt);

  ClfEval out;
  // n^2 - n c written without cancellation near alignment.
  out.V = 0.5 * (kt - n * ghat).squaredNorm();
  out.V0 = out.V;
  Vec dv_dk = Vec::Zero(2);
  Vec dv_dg = Vec::Zero(2);
  if (n > 0.0) {
    dv_dk = 2.0 * kt - (c / n) * kt - n * ghat;
    dv_dg = -n * kt;
  }
  out.grad = khat_residual_jacobian(x, *sys_, *khat_).transpose() * dv_dk +
             unit_direction_jacobian(*sys_, x).transpose() * dv_dg;

  if (n > eta_) {
    out.heading_des = sys_->heading_of(kt);
  } else if (hold != nullptr && hold->heading) {
    out.heading_des = hold->heading;
  } else {
    out.heading_des = sys_->heading_of(ghat);
  }
  if (hold != nullptr) hold->heading = out.heading_des;
  return out;
}

// ---------------------------------------------------------------------------

Mat3 desired_rotation(const Vec3& ktilde, double yaw) { return desired_frame(ktilde, yaw).rotation; }

double geometric_clf_3d_value(double ktilde_norm, const Mat3& re) {
  return 0.5 * ktilde_norm * ktilde_norm * (3.0 - re.trace());
}

GeometricClf3d::GeometricClf3d(std::shared_ptr<const Quad3D> sys, ChainControllerPtr khat,
                               double lambda, double beta, double yaw, double eta)
    : TrackingClf(beta, lambda), sys_(std::move(sys)), khat_(std::move(khat)), yaw_(yaw),
      eta_(eta) {
  if (!sys_ || !khat_) throw ConfigError("geometric CLF: missing system or khat");
}

ClfEval GeometricClf3d::evaluate(const Vec& x, AttitudeHold* hold) const {
  const Vec3 kt = khat_residual(x, *sys_, *khat_);
  const double n = kt.norm();
  const Vec4 q = x.segment<4>(6);
  const Mat3 r = quat_to_rotation(q);

  ClfEval out;
  Mat3 rd;
  Vec3 dv_dk = Vec3::Zero();
  if (n > eta_) {
    const DesiredFrame frame = desired_frame(kt, yaw_);
    rd = frame.rotation;
    const double tr = (r.transpose() * rd).trace();
    Vec3 dtr_dk = Vec3::Zero();
    for (int i = 0; i < 3; ++i) dtr_dk += frame.column_jacobians[i].transpose() * r.col(i);
    dv_dk = kt * (3.0 - tr) - 0.5 * n * n * dtr_dk;
  } else if (hold != nullptr && hold->rotation) {
    rd = *hold->rotation;
  } else {
    rd = r;
  }
  out.V = geometric_clf_3d_value(n, r.transpose() * rd);
  out.V0 = out.V;
  out.rotation_des = rd;
  if (hold != nullptr) hold->rotation = rd;

  out.grad = khat_residual_jacobian(x, *sys_, *khat_).transpose() * dv_dk;
  const auto partials = quat_rotation_partials(q);
  for (int j = 0; j < 4; ++j) {
    out.grad[6 + j] += -0.5 * n * n * partials[j].cwiseProduct(rd).sum();
  }
  return out;
}

std::pair<Mat3, Mat3> GeometricClf3d::desired_rotation_and_rate(const Vec& x) const {
  const Vec3 kt = khat_residual(x, *sys_, *khat_);
  if (kt.norm() <= eta_) {
    const Mat3 r = quat_to_rotation(x.segment<4>(6));
    return {r, Mat3::Zero()};
  }
  const DesiredFrame frame = desired_frame(kt, yaw_);
  const Vec3 kdot = khat_residual_rate(x, *sys_, *khat_);
  Mat3 rate;
  for (int i = 0; i < 3; ++i) rate.col(i) = frame.column_jacobians[i] * kdot;
  return {frame.rotation, rate};
}

// ---------------------------------------------------------------------------

PlanarBackstepClf::PlanarBackstepClf(std::shared_ptr<const PlanarQuad> sys,
                                     ChainControllerPtr khat, double mu2, double k_theta,
                                     double lambda, double beta, double eta)
    : TrackingClf(beta, lambda), sys_(sys), khat_(khat), base_(sys, khat, lambda, beta, eta),
      mu2_(mu2), k_theta_(k_theta), eta_(eta) {
  if (mu2_ <= 0.0) throw ConfigError("backstepping CLF: mu2 must be positive");
  if (k_theta_ <= 0.0) throw ConfigError("backstepping CLF: k_theta must be positive");
}

double PlanarBackstepClf::heading_rate(const Vec& x) const {
  return desired_heading_rate(x, *sys_, *khat_, eta_);
}

double PlanarBackstepClf::k_omega(const Vec& x) const {
  const Vec kt = khat_residual(x, *sys_, *khat_);
  const double n = kt.norm();
  if (n <= eta_) return 0.0;
  // sin(theta - theta_des): the actuation direction rotated against k~.
  const double s = cross2(kt, unit_direction(sys_->decoupling(x))) / n;
  return cross2(kt, khat_residual_rate(x, *sys_, *khat_)) / (n * n) - k_theta_ * s;
}

ClfEval PlanarBackstepClf::evaluate(const Vec& x, AttitudeHold* hold) const {
  ClfEval out = base_.evaluate(x, hold);
  const double w = x[5] - k_omega(x);
  out.V = out.V0 + w * w / (2.0 * mu2_);
  const Mat dk = numeric_jacobian([this](const Vec& z) { return Vec::Constant(1, k_omega(z)); },
                                  x, kOuterStep);
  Vec dw = -dk.row(0).transpose();
  dw[5] += 1.0;
  out.grad += (w / mu2_) * dw;
  return out;
}

double PlanarBackstepClf::decay_residual(const Vec& x) const {
  Vec xs = x;
  xs[5] = k_omega(x);
  const ClfEval e = base_.evaluate(xs);
  return e.grad.dot(partial_closed_loop(xs, *sys_, *khat_)) + lambda() * e.V0;
}

// ---------------------------------------------------------------------------

Quad3dBackstepClf::Quad3dBackstepClf(std::shared_ptr<const Quad3D> sys, ChainControllerPtr khat,
                                     double mu2, double k_r, double lambda, double beta,
                                     double yaw, double eta)
    : TrackingClf(beta, lambda), sys_(sys), khat_(khat),
      base_(sys, khat, lambda, beta, yaw, eta), mu2_(mu2), k_r_(k_r), eta_(eta) {
  if (mu2_ <= 0.0) throw ConfigError("backstepping CLF: mu2 must be positive");
  if (k_r_ <= 0.0) throw ConfigError("backstepping CLF: k_R must be positive");
}

Vec3 Quad3dBackstepClf::k_omega(const Vec& x) const {
  const auto [rd, rd_dot] = base_.desired_rotation_and_rate(x);
  const Mat3 r = quat_to_rotation(x.segment<4>(6));
  const Mat3 re = r.transpose() * rd;
  const Vec3 omega_des = vee_skew_part(rd.transpose() * rd_dot);
  return re * omega_des + k_r_ * vee_skew_part(re);
}

ClfEval Quad3dBackstepClf::evaluate(const Vec& x, AttitudeHold* hold) const {
  ClfEval out = base_.evaluate(x, hold);
  const Vec3 w = x.segment<3>(10) - k_omega(x);
  out.V = out.V0 + w.squaredNorm() / (2.0 * mu2_);
  const Mat dk = numeric_jacobian([this](const Vec& z) { return Vec(k_omega(z)); }, x, kOuterStep);
  Vec dv = -dk.transpose() * w;
  dv.segment<3>(10) += w;
  out.grad += dv / mu2_;
  return out;
}

double Quad3dBackstepClf::decay_residual(const Vec& x) const {
  Vec xs = x;
  xs.segment<3>(10) = k_omega(x);
  const ClfEval e = base_.evaluate(xs);
  return e.grad.dot(partial_closed_loop(xs, *sys_, *khat_)) + lambda() * e.V0;
}

// ---------------------------------------------------------------------------

ParameterCheck check_parameter_condition(double gamma, double epsilon, double mu, double beta,
                                         double lambda) {
  if (!(gamma > 0.0) || !(epsilon > 0.0) || !(mu > 0.0) || !(beta > 0.0) || !(lambda > 0.0)) {
    throw ConfigError("parameter condition: gamma, epsilon, mu, beta, lambda must be positive");
  }
  ParameterCheck out;
  out.threshold = gamma + epsilon * mu / (4.0 * beta);
  out.slack = lambda - out.threshold;
  out.pass = out.slack >= 0.0;
  return out;
}

ParameterCheck require_parameter_condition(double gamma, double epsilon, double mu, double beta,
                                           double lambda) {
  const ParameterCheck c = check_parameter_condition(gamma, epsilon, mu, beta, lambda);
  if (!c.pass) {
    std::ostringstream msg;
    msg << "parameter condition λ ≥ γ + εμ/(4β) violated"
        << " (lambda >= gamma + epsilon*mu/(4*beta)): lambda = " << lambda
        << ", gamma + epsilon*mu/(4*beta) = " << c.threshold;
    throw ConfigError(msg.str());
  }
  return c;
}

DrdCbf::DrdCbf(SystemPtr sys, BarrierPtr h0, ChainControllerPtr khat, ClfPtr clf,
               DrdParams params)
    : sys_(std::move(sys)), h0_(std::move(h0)), khat_(std::move(khat)), clf_(std::move(clf)),
      params_(params) {
  if (!sys_ || !h0_ || !khat_ || !clf_) throw ConfigError("DRD-CBF: missing component");
  if (h0_->dim() != sys_->chain_dim() || khat_->dim() != sys_->chain_dim() ||
      khat_->output_dim() != sys_->output_dim()) {
    throw ConfigError("DRD-CBF: barrier / khat dimensions do not match the output chain");
  }
  check_ = require_parameter_condition(params_.gamma, params_.epsilon, params_.mu, clf_->beta(),
                                       clf_->lambda());
}

DrdEval DrdCbf::evaluate(const Vec& x, AttitudeHold* hold) const {
  const Vec yc = sys_->chain_coords(x);
  const Mat jc = sys_->chain_jacobian(x);
  const Vec grad_h0 = jc.transpose() * h0_->gradient(yc);
  const ClfEval clf = clf_->evaluate(x, hold);

  DrdEval out;
  out.h0 = h0_->value(yc);
  out.V = clf.V;
  out.h = out.h0 - out.V / params_.mu;
  out.grad = grad_h0 - clf.grad / params_.mu;
  const Mat g1 = sys_->g1(x);
  const Mat g2 = sys_->g2(x);
  out.lf_h = out.grad.dot(sys_->drift(x));
  out.lg1_h = g1.transpose() * out.grad;
  out.lg2_h = g2.transpose() * out.grad;
  out.lg1_h0 = g1.transpose() * grad_h0;
  out.lg1_V = g1.transpose() * clf.grad;
  out.lg2_V = g2.transpose() * clf.grad;
  out.e_norm = tracking_error(x, *sys_, *khat_).norm();
  out.outside_region = out.lg2_V.norm() <= kRegionTol;
  out.heading_des = clf.heading_des;
  return out;
}

const char* to_string(CorollaryStatus s) {
  switch (s) {
    case CorollaryStatus::NotApplicable: return "not_applicable";
    case CorollaryStatus::Vacuous: return "vacuous";
    case CorollaryStatus::Checked: return "checked";
    case CorollaryStatus::Counterexample: return "counterexample";
  }
  return "unknown";
}

CorollaryResult check_corollary_condition(const Vec& x, const DrdCbf& drd, double tol) {
  const DrdEval e = drd.evaluate(x);
  CorollaryResult out;
  out.lg1_h_norm = e.lg1_h.norm();
  out.drift_margin = e.lf_h + drd.params().gamma * e.h;
  if (!e.outside_region) {
    out.status = CorollaryStatus::NotApplicable;
  } else if (out.lg1_h_norm > tol) {
    out.status = CorollaryStatus::Vacuous;
  } else {
    out.status = out.drift_margin >= 0.0 ? CorollaryStatus::Checked
                                         : CorollaryStatus::Counterexample;
  }
  return out;
}

}  // namespace drdcbf
