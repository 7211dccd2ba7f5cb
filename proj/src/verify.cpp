#include "drdcbf/verify.hpp"

#include "drdcbf/models.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

namespace drdcbf {

using json = nlohmann::json;

namespace {

/// k(yc) = value for every yc.
class ConstantController final : public ChainController {
 public:
  ConstantController(int dim, Vec value) : dim_(dim), value_(std::move(value)) {}
  int dim() const override { return dim_; }
  int output_dim() const override { return static_cast<int>(value_.size()); }
  Vec evaluate(const Vec&) const override { return value_; }
  Mat jacobian(const Vec&) const override { return Mat::Zero(value_.size(), dim_); }

 private:
  int dim_;
  Vec value_;
};

json vec_json(const Vec& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

// Non-finite numbers serialize as null.
json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::vector<Vec> normalized(const ControlAffineSystem& sys, std::vector<Vec> points) {
  for (Vec& p : points) sys.normalize(p);
  return points;
}

const Box& need_box(const std::optional<Box>& box, const char* name, const std::string& kind) {
  if (!box) throw ConfigError("verify suite '" + kind + "' needs '" + name + "' in the config");
  return *box;
}

}  // namespace

// ---------------------------------------------------------------------------

GradReport grad_check(const ScalarFn& f, const GradientFn& grad_f, const std::vector<Vec>& points,
                      double step, double tol) {
  if (!(step > 0.0)) throw std::invalid_argument("grad_check: step must be positive");
  GradReport out;
  for (const Vec& x : points) {
    const Vec g = grad_f(x);
    Vec fd(x.size());
    Vec xp = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      xp[i] = x[i] + step;
      const double fp = f(xp);
      xp[i] = x[i] - step;
      const double fm = f(xp);
      xp[i] = x[i];
      fd[i] = (fp - fm) / (2.0 * step);
    }
    const double err = (fd - g).norm() / std::max(fd.norm(), 1.0);
    if (out.samples == 0 || err > out.max_rel_error || !std::isfinite(err)) {
      if (!std::isfinite(err)) out.max_rel_error = std::numeric_limits<double>::infinity();
      else out.max_rel_error = err;
      out.worst_point = x;
    }
    ++out.samples;
  }
  out.pass = out.max_rel_error <= tol;
  return out;
}

// ---------------------------------------------------------------------------

LemmaReport lemma_bound_sampler(int dim, int n, std::uint64_t seed) {
  if (dim != 2 && dim != 3) throw std::invalid_argument("lemma_bound_sampler: dim must be 2 or 3");
  if (n < 1) throw std::invalid_argument("lemma_bound_sampler: n must be at least 1");
  constexpr double kBoundTol = 1e-12;
  constexpr double kAngleTol = 1e-9;
  constexpr double kTwoPi = 2.0 * std::numbers::pi;

  LemmaReport out;
  out.dim = dim;
  out.seed = seed;
  out.min_bound_margin = std::numeric_limits<double>::infinity();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  auto record = [&](double v, double e_norm, double expected_e) {
    const double margin = v - 0.5 * e_norm * e_norm;
    out.min_bound_margin = std::min(out.min_bound_margin, margin);
    if (margin < -kBoundTol) ++out.bound_violations;
    const double angle_err = std::abs(e_norm - expected_e);
    out.max_angle_error = std::max(out.max_angle_error, angle_err);
    if (angle_err > kAngleTol) ++out.angle_violations;
    ++out.samples;
  };

  if (dim == 2) {
    auto sys = std::make_shared<Unicycle>();
    for (int i = 0; i < n; ++i) {
      const double theta = -std::numbers::pi + kTwoPi * unit(rng);
      const double norm = 10.0 * unit(rng);
      const double phi = kTwoPi * unit(rng);
      const Vec kt = norm * Eigen::Vector2d(std::cos(phi), std::sin(phi));
      auto khat = std::make_shared<ConstantController>(2, kt);
      const GeometricClf2d clf(sys, khat, 1.0);
      const Vec x = Eigen::Vector3d(0.0, 0.0, theta);
      const double v = clf.evaluate(x).V;
      const double e = tracking_error(x, *sys, *khat).norm();
      record(v, e, norm * std::abs(std::sin(theta - phi)));
    }
    return out;
  }

  auto sys = std::make_shared<Quad3D>();
  const Vec3 gravity_offset(0.0, 0.0, sys->params().gravity);
  for (int i = 0; i < n; ++i) {
    // Uniform rotation from three uniforms.
    const double u1 = unit(rng);
    const double u2 = unit(rng);
    const double u3 = unit(rng);
    const Vec4 q(std::sqrt(u1) * std::cos(kTwoPi * u3), std::sqrt(1.0 - u1) * std::sin(kTwoPi * u2),
                 std::sqrt(1.0 - u1) * std::cos(kTwoPi * u2), std::sqrt(u1) * std::sin(kTwoPi * u3));
    Vec3 dir(normal(rng), normal(rng), normal(rng));
    dir.normalize();
    const double norm = 10.0 * unit(rng);
    const Vec3 kt = norm * dir;
    // k~ = k^ - L_f^2 y = k^ + g e_z.
    auto khat = std::make_shared<ConstantController>(6, Vec(kt - gravity_offset));
    const GeometricClf3d clf(sys, khat, 1.0);
    Quad3DState s;
    s.attitude = q;
    const Vec x = Quad3D::pack(s);
    const ClfEval ev = clf.evaluate(x);
    const double e = tracking_error(x, *sys, *khat).norm();
    double expected = 0.0;
    if (ev.rotation_des) {
      const Mat3 re = quat_to_rotation(q).transpose() * *ev.rotation_des;
      const double middle = std::atan2(std::hypot(re(0, 2), re(1, 2)), re(2, 2));
      expected = norm * std::abs(std::sin(middle));
    }
    record(ev.V, e, expected);
  }
  return out;
}

// ---------------------------------------------------------------------------

const char* to_string(DecayClass c) {
  switch (c) {
    case DecayClass::Controllable: return "controllable";
    case DecayClass::DriftDecay: return "drift_decay";
    case DecayClass::EVacuous: return "e_vacuous";
    case DecayClass::EChecked: return "e_checked";
    case DecayClass::Counterexample: return "counterexample";
  }
  return "unknown";
}

DecaySample classify_decay(const Vec& x, const DrdCbf& drd, double tol) {
  const ControlAffineSystem& sys = drd.system();
  const TrackingClf& clf = drd.clf();
  const ClfEval ev = clf.evaluate(x);
  DecaySample out;
  out.x = x;
  out.lg2_v_norm = (sys.g2(x).transpose() * ev.grad).norm();
  const Vec k1 = k1_pullback(x, sys, drd.khat());
  const double lf1_v = ev.grad.dot(sys.drift(x) + sys.g1(x) * k1);
  out.decay_margin = -(lf1_v + clf.lambda() * ev.V);
  const double e2 = tracking_error(x, sys, drd.khat()).squaredNorm();
  if (e2 > 1e-12) out.v_over_e2 = ev.V / e2;
  if (out.lg2_v_norm > tol) {
    out.cls = DecayClass::Controllable;
  } else if (out.decay_margin >= -tol * std::max(1.0, ev.V)) {
    out.cls = DecayClass::DriftDecay;
  } else {
    switch (check_corollary_condition(x, drd, tol).status) {
      case CorollaryStatus::NotApplicable: out.cls = DecayClass::Controllable; break;
      case CorollaryStatus::Vacuous: out.cls = DecayClass::EVacuous; break;
      case CorollaryStatus::Checked: out.cls = DecayClass::EChecked; break;
      case CorollaryStatus::Counterexample: out.cls = DecayClass::Counterexample; break;
    }
  }
  return out;
}

DecayReport clf_decay_sampler(const DrdCbf& drd, const std::vector<Vec>& points, double tol) {
  std::vector<DecaySample> samples(points.size());
  // Points are independent; results are collected in index order.
  for (std::size_t i = 0; i < points.size(); ++i) samples[i] = classify_decay(points[i], drd, tol);

  DecayReport out;
  out.beta = drd.clf().beta();
  for (DecaySample& s : samples) {
    ++out.samples;
    out.beta_estimate = std::min(out.beta_estimate, s.v_over_e2);
    switch (s.cls) {
      case DecayClass::Controllable: ++out.controllable; break;
      case DecayClass::DriftDecay: ++out.drift_decay; break;
      case DecayClass::EVacuous: ++out.e_vacuous; break;
      case DecayClass::EChecked: ++out.e_checked; break;
      case DecayClass::Counterexample: ++out.counterexamples; break;
    }
    if (s.cls != DecayClass::Controllable && s.cls != DecayClass::DriftDecay) {
      out.e_states.push_back(std::move(s));
    }
  }
  return out;
}

DecayReport clf_decay_sampler(const DrdCbf& drd, const Box& box, int n, double tol) {
  return clf_decay_sampler(drd, normalized(drd.system(), halton_samples(box, n)), tol);
}

// ---------------------------------------------------------------------------

AuditReport audit_trajectory(const Trajectory& traj, double gamma, double tol) {
  AuditReport out;
  out.min_margin = std::numeric_limits<double>::infinity();
  const std::size_t n = traj.size();
  if (n == 0) return out;
  const double dt = traj.dt();
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double step = traj.times[k + 1] - traj.times[k];
    if (std::abs(step - dt) > 1e-9 * std::max(1.0, std::abs(traj.times[k + 1]))) {
      out.uniform_grid = false;
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    const CertificateChannels& c = traj.cert[k];
    if (!std::isfinite(c.h)) continue;
    if (c.h >= 0.0) {
      if (c.h0 < -tol) ++out.h0_violations;
      if (c.h0 < c.h - 1e-12) ++out.subset_violations;
    }
    if (k + 1 == n || dt <= 0.0) continue;
    const double h_next = traj.cert[k + 1].h;
    if (!std::isfinite(h_next)) continue;
    const double margin = (h_next - c.h) / dt + gamma * c.h;
    ++out.steps;
    if (margin < out.min_margin) {
      out.min_margin = margin;
      out.worst_time = traj.times[k];
    }
    if (margin < -tol) ++out.decay_violations;
  }
  out.pass = out.uniform_grid && out.decay_violations == 0 && out.h0_violations == 0 &&
             out.subset_violations == 0;
  return out;
}

// ---------------------------------------------------------------------------

QpEquivalenceReport qp_equivalence(int n, std::uint64_t seed, double step) {
  constexpr double kRadius = 3.0;
  QpEquivalenceReport out;
  out.min_residual = std::numeric_limits<double>::infinity();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (int i = 0; i < n; ++i) {
    const int m = 1 + (i % 2);
    FilterProblem p;
    p.u_nom = Vec(m);
    p.a = Vec(m);
    for (int j = 0; j < m; ++j) p.u_nom[j] = sym(rng);
    const bool degenerate = unit(rng) < 0.1;
    // Redraw until the correction fits well inside the oracle grid.
    do {
      for (int j = 0; j < m; ++j) p.a[j] = degenerate ? 0.0 : sym(rng);
      p.b = sym(rng);
    } while (!degenerate &&
             (p.a.norm() < 0.2 ||
              std::max(0.0, -(p.a.dot(p.u_nom) + p.b)) / p.a.norm() > kRadius / 2.0));

    const FilterResult r = cbf_qp_filter(p);
    const OracleResult o = qp_oracle(p, kRadius, step);
    ++out.problems;
    if (r.infeasible != !o.feasible) ++out.infeasible_disagreements;
    if (r.infeasible || !o.feasible) continue;

    if (p.a.norm() > 0.0) {
      out.min_residual = std::min(out.min_residual, r.residual);
      if (r.residual < -1e-10) ++out.residual_violations;
    }
    // A feasible grid point lies within d of the optimum; optimality of u
    // then bounds |u_oracle - u|^2 by d^2 + 2 |u - u_nom| d.
    const double d = 2.0 * step * std::sqrt(static_cast<double>(m));
    const double bound = std::sqrt(d * d + 2.0 * (r.u - p.u_nom).norm() * d) + 1e-12;
    const double dist = (o.u - r.u).norm();
    out.max_distance = std::max(out.max_distance, dist);
    if (dist > bound) ++out.mismatches;
  }
  out.pass = out.mismatches == 0 && out.residual_violations == 0 &&
             out.infeasible_disagreements == 0;
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<Vec> backstep_slice(const DrdCbf& drd, std::vector<Vec> points) {
  const TrackingClf& clf = drd.clf();
  if (const auto* planar = dynamic_cast<const PlanarBackstepClf*>(&clf)) {
    for (Vec& x : points) x[5] = planar->k_omega(x);
  } else if (const auto* spatial = dynamic_cast<const Quad3dBackstepClf*>(&clf)) {
    for (Vec& x : points) x.segment<3>(10) = spatial->k_omega(x);
  } else {
    points.clear();
  }
  return points;
}

json decay_json(const DecayReport& r) {
  json j = {{"samples", r.samples},
            {"controllable", r.controllable},
            {"drift_decay", r.drift_decay},
            {"e_vacuous", r.e_vacuous},
            {"e_checked", r.e_checked},
            {"counterexamples", r.counterexamples},
            {"beta", num(r.beta)},
            {"beta_estimate", num(r.beta_estimate)}};
  json worst = json::array();
  for (const DecaySample& s : r.e_states) {
    if (s.cls != DecayClass::Counterexample) continue;
    worst.push_back({{"x", vec_json(s.x)}, {"decay_margin", num(s.decay_margin)}});
    if (worst.size() >= 5) break;
  }
  j["counterexample_states"] = worst;
  return j;
}

json audit_json(const std::vector<AuditReport>& audits, const std::vector<RunResult>& runs) {
  json arr = json::array();
  for (std::size_t i = 0; i < audits.size(); ++i) {
    const AuditReport& a = audits[i];
    arr.push_back({{"label", runs[i].label},
                   {"pass", a.pass},
                   {"steps", a.steps},
                   {"min_margin", num(a.min_margin)},
                   {"worst_time", a.worst_time},
                   {"decay_violations", a.decay_violations},
                   {"h0_violations", a.h0_violations},
                   {"subset_violations", a.subset_violations}});
  }
  return arr;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

}  // namespace

SuiteResult run_suite(const Scenario& sc, const VerifySuite& suite) {
  SuiteResult out;
  out.kind = suite.kind;
  out.target = suite.target;
  const DrdCbf& drd = *sc.drd;
  const ControlAffineSystem& sys = drd.system();
  json detail;

  if (suite.kind == "grad_check") {
    const double tol = suite.tol > 0.0 ? suite.tol : 1e-4;
    GradReport r;
    if (suite.target == "h0") {
      const Box& box = need_box(sc.chain_box, "chain_box", suite.kind);
      const Barrier& h0 = drd.h0();
      r = grad_check([&](const Vec& y) { return h0.value(y); },
                     [&](const Vec& y) { return h0.gradient(y); },
                     halton_samples(box, suite.samples), 1e-6, tol);
    } else if (suite.target == "V" || suite.target == "drd_h") {
      const Box& box = need_box(sc.state_box, "state_box", suite.kind);
      const auto points = normalized(sys, halton_samples(box, suite.samples));
      if (suite.target == "V") {
        const TrackingClf& clf = drd.clf();
        r = grad_check([&](const Vec& x) { return clf.value(x); },
                       [&](const Vec& x) { return clf.gradient(x); }, points, 1e-6, tol);
      } else {
        r = grad_check([&](const Vec& x) { return drd.h(x); },
                       [&](const Vec& x) { return drd.grad_h(x); }, points, 1e-6, tol);
      }
    } else {
      throw ConfigError("grad_check target must be h0, V or drd_h (got '" + suite.target + "')");
    }
    out.pass = r.pass;
    detail = {{"samples", r.samples}, {"tol", tol}, {"max_rel_error", num(r.max_rel_error)},
              {"worst_point", vec_json(r.worst_point)}};
    out.summary = "grad_check " + suite.target + ": max rel err " + fmt(r.max_rel_error) +
                  " over " + std::to_string(r.samples) + " points (tol " + fmt(tol) + ")";
  } else if (suite.kind == "lemma_bound") {
    const LemmaReport r = lemma_bound_sampler(suite.dim, suite.samples, sc.seed);
    out.pass = r.pass();
    detail = {{"dim", r.dim}, {"samples", r.samples}, {"seed", r.seed},
              {"bound_violations", r.bound_violations}, {"angle_violations", r.angle_violations},
              {"min_bound_margin", num(r.min_bound_margin)},
              {"max_angle_error", num(r.max_angle_error)}};
    out.summary = "lemma_bound " + std::to_string(r.dim) + "D: " +
                  std::to_string(r.bound_violations) + " bound / " +
                  std::to_string(r.angle_violations) + " angle violations in " +
                  std::to_string(r.samples) + " samples";
  } else if (suite.kind == "clf_decay") {
    const Box& box = need_box(sc.state_box, "state_box", suite.kind);
    const auto points = normalized(sys, halton_samples(box, suite.samples));
    const DecayReport r = clf_decay_sampler(drd, points);
    detail = decay_json(r);
    out.pass = r.pass();
    const auto slice = backstep_slice(drd, points);
    if (!slice.empty()) {
      const DecayReport s = clf_decay_sampler(drd, slice);
      detail["backstep_slice"] = decay_json(s);
      out.pass = out.pass && s.pass();
    }
    out.summary = "clf_decay: " + std::to_string(r.counterexamples) + " counterexamples, " +
                  std::to_string(r.e_vacuous + r.e_checked) +
                  " E states covered by the corollary, min V/|e|^2 " + fmt(r.beta_estimate);
  } else if (suite.kind == "issf") {
    const Box& box = need_box(sc.chain_box, "chain_box", suite.kind);
    const IssfReport r = verify_issf_linear(sc.certificate, box, suite.samples, suite.h0_floor);
    out.pass = r.pass;
    detail = {{"samples", r.samples}, {"skipped", r.skipped}, {"h0_floor", num(suite.h0_floor)},
              {"violations", r.violations}, {"rounding_ties", r.rounding_ties},
              {"min_margin", num(r.min_margin)},
              {"worst_point", vec_json(r.worst_point)}};
    out.summary = "issf: " + std::to_string(r.violations) + " violations, min margin " +
                  fmt(r.min_margin) + " over " + std::to_string(r.samples - r.skipped) +
                  " chain points (" + std::to_string(r.rounding_ties) + " rounding ties)";
  } else if (suite.kind == "drd_check") {
    const Box& box = need_box(sc.state_box, "state_box", suite.kind);
    const DrdCheckReport r =
        check_dual_relative_degree(sys, normalized(sys, halton_samples(box, suite.samples)));
    out.pass = r.pass;
    detail = {{"samples", r.samples}, {"r", r.drd.r}, {"q", r.drd.q},
              {"min_second_order_rank", r.min_second_order_rank},
              {"failed_condition", r.failed_condition}};
    out.summary = "drd_check: (r, q) = (" + std::to_string(r.drd.r) + ", " +
                  std::to_string(r.drd.q) + ")" +
                  (r.pass ? std::string() : ", failed " + r.failed_condition);
  } else if (suite.kind == "qp_equivalence") {
    const QpEquivalenceReport r = qp_equivalence(suite.samples, sc.seed);
    out.pass = r.pass;
    detail = {{"problems", r.problems}, {"mismatches", r.mismatches},
              {"residual_violations", r.residual_violations},
              {"infeasible_disagreements", r.infeasible_disagreements},
              {"max_distance", r.max_distance}, {"min_residual", num(r.min_residual)}};
    out.summary = "qp_equivalence: " + std::to_string(r.mismatches) + " mismatches in " +
                  std::to_string(r.problems) + " problems";
  } else if (suite.kind == "audit" || suite.kind == "mutation") {
    const double tol = suite.tol > 0.0 ? suite.tol : 1e-2;
    RunOptions opts;
    if (suite.kind == "mutation") opts.filter_gamma_scale = suite.gamma_scale;
    const auto runs = run_scenario(sc, opts);
    std::vector<AuditReport> audits;
    double worst = std::numeric_limits<double>::infinity();
    out.pass = true;
    for (const RunResult& run : runs) {
      audits.push_back(audit_trajectory(run.filtered, drd.params().gamma, tol));
      out.pass = out.pass && audits.back().pass;
      worst = std::min(worst, audits.back().min_margin);
    }
    detail = {{"tol", tol}, {"runs", audit_json(audits, runs)}};
    if (suite.kind == "mutation") detail["filter_gamma_scale"] = suite.gamma_scale;
    out.summary = suite.kind + ": worst margin " + fmt(worst) + " (tol " + fmt(tol) + ") over " +
                  std::to_string(runs.size()) + " runs";
  } else {
    throw ConfigError("unknown verify suite kind '" + suite.kind + "'");
  }

  detail["kind"] = out.kind;
  if (!out.target.empty()) detail["target"] = out.target;
  detail["pass"] = out.pass;
  out.json = detail.dump();
  return out;
}

VerifyReport run_verify(const Scenario& sc) {
  if (sc.suites.empty()) throw ConfigError("scenario '" + sc.name + "' declares no verify suites");
  VerifyReport out;
  out.scenario = sc.name;
  for (const VerifySuite& s : sc.suites) {
    out.suites.push_back(run_suite(sc, s));
    out.pass = out.pass && out.suites.back().pass;
  }
  return out;
}

std::string VerifyReport::to_json() const {
  json j = {{"scenario", scenario}, {"pass", pass}};
  json arr = json::array();
  for (const SuiteResult& s : suites) arr.push_back(json::parse(s.json));
  j["suites"] = arr;
  return j.dump(2);
}

}  // namespace drdcbf
