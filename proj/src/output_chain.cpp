#include "drdcbf/output_chain.hpp"

#include <limits>

namespace drdcbf {

OutputChainSpec OutputChainSpec::integrator(int p, int r) {
  if (p < 1 || r < 1) throw ConfigError("integrator chain needs p >= 1 and r >= 1");
  OutputChainSpec c;
  c.p = p;
  c.r = r;
  const int n = p * r;
  c.A = Mat::Zero(n, n);
  if (r > 1) c.A.topRightCorner(p * (r - 1), p * (r - 1)).setIdentity();
  c.B = Mat::Zero(n, p);
  c.B.bottomRows(p).setIdentity();
  return c;
}

Mat Barrier::hessian(const Vec& yc) const {
  constexpr double kStep = 1e-5;
  const int n = dim();
  Mat h(n, n);
  Vec probe = yc;
  for (int j = 0; j < n; ++j) {
    probe[j] = yc[j] + kStep;
    const Vec gp = gradient(probe);
    probe[j] = yc[j] - kStep;
    const Vec gm = gradient(probe);
    probe[j] = yc[j];
    h.col(j) = (gp - gm) / (2.0 * kStep);
  }
  return 0.5 * (h + h.transpose());
}

// ---------------------------------------------------------------------------

double ellipse_h0(const Vec& y, const Vec& center, const Vec& weights) {
  if ((weights.array() <= 0.0).any()) throw ConfigError("ellipse weights must be positive");
  const Vec d = y - center;
  return 1.0 - d.dot(weights.cwiseProduct(d));
}

double obstacle_h(const Vec& y, const Vec& obstacle, double radius) {
  return (y - obstacle).squaredNorm() - radius * radius;
}

double geofence_h(const Vec& y, double limit, int axis) { return limit - y[axis]; }

EllipseBarrier::EllipseBarrier(Vec center, Vec weights)
    : center_(std::move(center)), weights_(std::move(weights)) {
  if (center_.size() != weights_.size()) throw ConfigError("ellipse: center/weights size mismatch");
  if ((weights_.array() <= 0.0).any()) throw ConfigError("ellipse weights must be positive");
}

double EllipseBarrier::value(const Vec& y) const { return ellipse_h0(y, center_, weights_); }

Vec EllipseBarrier::gradient(const Vec& y) const {
  return -2.0 * weights_.cwiseProduct(y - center_);
}

Mat EllipseBarrier::hessian(const Vec&) const { return Mat(-2.0 * weights_.asDiagonal()); }

ObstacleBarrier::ObstacleBarrier(Vec obstacle, double radius)
    : obstacle_(std::move(obstacle)), radius_(radius) {
  if (radius_ <= 0.0) throw ConfigError("obstacle radius must be positive");
}

double ObstacleBarrier::value(const Vec& y) const { return obstacle_h(y, obstacle_, radius_); }

Vec ObstacleBarrier::gradient(const Vec& y) const { return 2.0 * (y - obstacle_); }

Mat ObstacleBarrier::hessian(const Vec&) const {
  return 2.0 * Mat::Identity(dim(), dim());
}

GeofenceBarrier::GeofenceBarrier(int dim, int axis, double limit)
    : dim_(dim), axis_(axis), limit_(limit) {
  if (axis < 0 || axis >= dim) throw ConfigError("geofence axis out of range");
}

double GeofenceBarrier::value(const Vec& y) const { return geofence_h(y, limit_, axis_); }

Vec GeofenceBarrier::gradient(const Vec&) const {
  Vec g = Vec::Zero(dim_);
  g[axis_] = -1.0;
  return g;
}

Mat GeofenceBarrier::hessian(const Vec&) const { return Mat::Zero(dim_, dim_); }

// ---------------------------------------------------------------------------

HocbfBarrier::HocbfBarrier(BarrierPtr base, double alpha) : base_(std::move(base)), alpha_(alpha) {
  if (!base_) throw ConfigError("hocbf: missing base barrier");
  if (alpha_ <= 0.0) throw ConfigError("hocbf: alpha_e must be positive");
}

double HocbfBarrier::value(const Vec& yc) const {
  const int p = base_->dim();
  const Vec y = yc.head(p);
  return base_->gradient(y).dot(yc.tail(p)) + alpha_ * base_->value(y);
}

Vec HocbfBarrier::gradient(const Vec& yc) const {
  const int p = base_->dim();
  const Vec y = yc.head(p);
  const Vec v = yc.tail(p);
  const Vec gb = base_->gradient(y);
  Vec g(2 * p);
  g.head(p) = base_->hessian(y) * v + alpha_ * gb;
  g.tail(p) = gb;
  return g;
}

Mat HocbfBarrier::hessian(const Vec& yc) const {
  const int p = base_->dim();
  const Vec y = yc.head(p);
  const Vec v = yc.tail(p);
  const Mat hb = base_->hessian(y);
  // d/dy (H_b(y) v): exact zero for quadratic and affine bases.
  constexpr double kStep = 1e-5;
  Mat third(p, p);
  Vec probe = y;
  for (int j = 0; j < p; ++j) {
    probe[j] = y[j] + kStep;
    const Vec hp = base_->hessian(probe) * v;
    probe[j] = y[j] - kStep;
    const Vec hm = base_->hessian(probe) * v;
    probe[j] = y[j];
    third.col(j) = (hp - hm) / (2.0 * kStep);
  }
  Mat h = Mat::Zero(2 * p, 2 * p);
  h.topLeftCorner(p, p) = 0.5 * (third + third.transpose()) + alpha_ * hb;
  h.topRightCorner(p, p) = hb;
  h.bottomLeftCorner(p, p) = hb;
  return h;
}

BackstepBarrier::BackstepBarrier(BarrierPtr base, ChainControllerPtr safe_velocity, double mu_b)
    : base_(std::move(base)), kv_(std::move(safe_velocity)), mu_b_(mu_b) {
  if (!base_ || !kv_) throw ConfigError("backstep: missing base barrier or safe velocity");
  if (mu_b_ <= 0.0) throw ConfigError("backstep: mu_b must be positive");
  if (kv_->dim() != base_->dim() || kv_->output_dim() != base_->dim()) {
    throw ConfigError("backstep: safe velocity must map R^p to R^p");
  }
}

double BackstepBarrier::value(const Vec& yc) const {
  const int p = base_->dim();
  const Vec y = yc.head(p);
  const Vec w = yc.tail(p) - kv_->evaluate(y);
  return base_->value(y) - w.squaredNorm() / (2.0 * mu_b_);
}

Vec BackstepBarrier::gradient(const Vec& yc) const {
  const int p = base_->dim();
  const Vec y = yc.head(p);
  const Vec w = yc.tail(p) - kv_->evaluate(y);
  Vec g(2 * p);
  g.head(p) = base_->gradient(y) + kv_->jacobian(y).transpose() * w / mu_b_;
  g.tail(p) = -w / mu_b_;
  return g;
}

BarrierPtr hocbf_extend(BarrierPtr base, double alpha, const OutputChainSpec& chain) {
  if (chain.r != 2) throw ConfigError("hocbf_extend requires a chain of order r = 2");
  if (base && base->dim() != chain.p) throw ConfigError("hocbf_extend: base dimension != p");
  return std::make_shared<HocbfBarrier>(std::move(base), alpha);
}

BarrierPtr backstep_extend(BarrierPtr base, ChainControllerPtr safe_velocity, double mu_b) {
  if (mu_b <= 0.0) throw ConfigError("backstep_extend: mu_b must be positive");
  return std::make_shared<BackstepBarrier>(std::move(base), std::move(safe_velocity), mu_b);
}

// ---------------------------------------------------------------------------

Mat ChainController::jacobian(const Vec& yc) const {
  constexpr double kStep = 1e-6;
  Mat jac(output_dim(), dim());
  Vec probe = yc;
  for (int j = 0; j < dim(); ++j) {
    probe[j] = yc[j] + kStep;
    const Vec kp = evaluate(probe);
    probe[j] = yc[j] - kStep;
    const Vec km = evaluate(probe);
    probe[j] = yc[j];
    jac.col(j) = (kp - km) / (2.0 * kStep);
  }
  return jac;
}

LinearEllipseController::LinearEllipseController(Vec center, Vec weights, double rho)
    : center_(std::move(center)), sqrt_weights_(weights.cwiseSqrt()), rho_(rho) {
  if ((weights.array() <= 0.0).any()) throw ConfigError("ellipse weights must be positive");
  if (rho_ <= 0.0) throw ConfigError("rho must be positive");
}

Vec LinearEllipseController::evaluate(const Vec& y) const {
  return -rho_ * sqrt_weights_.cwiseProduct(y - center_);
}

Mat LinearEllipseController::jacobian(const Vec&) const {
  return Mat(-rho_ * sqrt_weights_.asDiagonal());
}

ChainPd::ChainPd(int p, int r, Vec goal, double kp, double kd)
    : p_(p), r_(r), goal_(std::move(goal)), kp_(kp), kd_(kd) {
  if (r_ < 1 || r_ > 2) throw ConfigError("chain PD supports r = 1 or 2");
  if (goal_.size() != p_) throw ConfigError("chain PD goal has wrong dimension");
  if (kp_ < 0.0 || kd_ < 0.0) throw ConfigError("chain PD gains must be non-negative");
}

Vec ChainPd::evaluate(const Vec& yc) const {
  Vec k = -kp_ * (yc.head(p_) - goal_);
  if (r_ == 2) k -= kd_ * yc.segment(p_, p_);
  return k;
}

Mat ChainPd::jacobian(const Vec&) const {
  Mat jac = Mat::Zero(p_, p_ * r_);
  jac.leftCols(p_) = -kp_ * Mat::Identity(p_, p_);
  if (r_ == 2) jac.rightCols(p_) = -kd_ * Mat::Identity(p_, p_);
  return jac;
}

// ---------------------------------------------------------------------------

double softplus(double z, double kappa) {
  const double kz = kappa * z;
  if (kz > 30.0) return z + std::log1p(std::exp(-kz)) / kappa;
  return std::log1p(std::exp(kz)) / kappa;
}

double softplus_slope(double z, double kappa) {
  const double kz = kappa * z;
  if (kz >= 0.0) return 1.0 / (1.0 + std::exp(-kz));
  const double e = std::exp(kz);
  return e / (1.0 + e);
}

double smooth_floor(double s, double floor) {
  if (s >= floor) return s;
  const double t = s / floor;
  const double c = 1.0 - t;
  return floor * (t + c * c * c);
}

double smooth_floor_slope(double s, double floor) {
  if (s >= floor) return 1.0;
  const double c = 1.0 - s / floor;
  return 1.0 - 3.0 * c * c;
}

SmoothSafeController::SmoothSafeController(BarrierPtr barrier, OutputChainSpec chain,
                                           ChainControllerPtr nominal, SmoothSafeParams params)
    : barrier_(std::move(barrier)), chain_(std::move(chain)), nominal_(std::move(nominal)),
      params_(params) {
  if (!barrier_ || !nominal_) throw ConfigError("smooth safe controller: missing barrier or nominal");
  if (barrier_->dim() != chain_.dim() || nominal_->dim() != chain_.dim() ||
      nominal_->output_dim() != chain_.p) {
    throw ConfigError("smooth safe controller: dimension mismatch with chain");
  }
  if (params_.gamma <= 0.0 || params_.epsilon <= 0.0 || params_.kappa <= 0.0 ||
      params_.floor <= 0.0) {
    throw ConfigError("smooth safe controller: gamma, epsilon, kappa, floor must be positive");
  }
}

double SmoothSafeController::activation(const Vec& yc) const {
  const Vec g = barrier_->gradient(yc);
  const Vec a = chain_.B.transpose() * g;
  return g.dot(chain_.A * yc + chain_.B * nominal_->evaluate(yc)) +
         params_.gamma * barrier_->value(yc) - a.squaredNorm() / params_.epsilon;
}

Vec SmoothSafeController::evaluate(const Vec& yc) const {
  const Vec g = barrier_->gradient(yc);
  const Vec kn = nominal_->evaluate(yc);
  const Vec a = chain_.B.transpose() * g;
  const double s = a.squaredNorm();
  const double psi = g.dot(chain_.A * yc + chain_.B * kn) + params_.gamma * barrier_->value(yc) -
                     s / params_.epsilon;
  return kn + a * (softplus(-psi, params_.kappa) / smooth_floor(s, params_.floor));
}

Mat SmoothSafeController::jacobian(const Vec& yc) const {
  const Vec g = barrier_->gradient(yc);
  const Mat hess = barrier_->hessian(yc);
  const Vec kn = nominal_->evaluate(yc);
  const Mat jn = nominal_->jacobian(yc);
  const Vec a = chain_.B.transpose() * g;
  const Mat ja = chain_.B.transpose() * hess;
  const Vec drift = chain_.A * yc + chain_.B * kn;
  const double s = a.squaredNorm();
  const double psi = g.dot(drift) + params_.gamma * barrier_->value(yc) - s / params_.epsilon;

  const Vec grad_psi = hess * drift + (chain_.A + chain_.B * jn).transpose() * g +
                       params_.gamma * g - (2.0 / params_.epsilon) * ja.transpose() * a;
  const Vec grad_s = 2.0 * ja.transpose() * a;

  const double sp = softplus(-psi, params_.kappa);
  const double spd = softplus_slope(-psi, params_.kappa);
  const double d = smooth_floor(s, params_.floor);
  const double dd = smooth_floor_slope(s, params_.floor);
  const double sigma = sp / d;
  const Vec grad_sigma = -spd * grad_psi / d - sp * dd * grad_s / (d * d);
  return jn + ja * sigma + a * grad_sigma.transpose();
}

Vec smooth_safe_khat(const Vec& yc, const Barrier& barrier, const OutputChainSpec& chain,
                     const ChainController& nominal, const SmoothSafeParams& params) {
  const Vec g = barrier.gradient(yc);
  const Vec kn = nominal.evaluate(yc);
  const Vec a = chain.B.transpose() * g;
  const double s = a.squaredNorm();
  const double psi = g.dot(chain.A * yc + chain.B * kn) + params.gamma * barrier.value(yc) -
                     s / params.epsilon;
  return kn + a * (softplus(-psi, params.kappa) / smooth_floor(s, params.floor));
}

// ---------------------------------------------------------------------------

namespace {

struct MarginTerms {
  double margin;
  double scale;  // sum of term magnitudes
};

MarginTerms issf_terms(const BarrierCertificate& cert, const Vec& yc) {
  const Vec g = cert.h0->gradient(yc);
  const Vec a = cert.chain.B.transpose() * g;
  const double flow = g.dot(cert.chain.A * yc + cert.chain.B * cert.khat->evaluate(yc));
  const double decay = cert.gamma * cert.h0->value(yc);
  const double robust = a.squaredNorm() / cert.epsilon;
  return {flow + decay - robust, std::abs(flow) + std::abs(decay) + robust};
}

}  // namespace

double issf_margin(const BarrierCertificate& cert, const Vec& yc) {
  return issf_terms(cert, yc).margin;
}

IssfReport verify_issf_linear(const BarrierCertificate& cert, const Box& box, int n,
                              double h0_floor) {
  if (n < 1) throw std::invalid_argument("verify_issf_linear: need at least one sample");
  if (box.dim() != cert.chain.dim()) throw std::invalid_argument("verify_issf_linear: box dim");
  IssfReport report;
  report.samples = n;
  report.min_margin = std::numeric_limits<double>::infinity();
  for (const Vec& yc : halton_samples(box, n)) {
    if (cert.h0->value(yc) < h0_floor) {
      ++report.skipped;
      continue;
    }
    const MarginTerms t = issf_terms(cert, yc);
    const double round = 1e-12 * std::max(1.0, t.scale);
    if (t.margin < -round) {
      ++report.violations;
    } else if (t.margin <= round) {
      ++report.rounding_ties;
    }
    if (t.margin < report.min_margin) {
      report.min_margin = t.margin;
      report.worst_point = yc;
    }
  }
  report.pass = report.skipped < n && report.violations == 0;
  return report;
}

}  // namespace drdcbf
