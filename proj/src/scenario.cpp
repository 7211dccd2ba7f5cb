#include "drdcbf/scenario.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <future>
#include <numbers>
#include <sstream>

namespace drdcbf {
namespace {

using json = nlohmann::json;

const json& require(const json& j, const std::string& key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) {
    throw ConfigError(where + ": missing required key '" + key + "'");
  }
  return j.at(key);
}

double number(const json& j, const std::string& key, const std::string& where) {
  const json& v = require(j, key, where);
  if (!v.is_number()) throw ConfigError(where + "." + key + " must be a number");
  return v.get<double>();
}

double number_or(const json& j, const std::string& key, double fallback, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  return number(j, key, where);
}

std::string text(const json& j, const std::string& key, const std::string& where) {
  const json& v = require(j, key, where);
  if (!v.is_string()) throw ConfigError(where + "." + key + " must be a string");
  return v.get<std::string>();
}

Vec vector_of(const json& v, const std::string& where, int expected = -1) {
  if (!v.is_array()) throw ConfigError(where + " must be an array of numbers");
  Vec out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) throw ConfigError(where + " must be an array of numbers");
    out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
  }
  if (expected >= 0 && out.size() != expected) {
    throw ConfigError(where + " must have " + std::to_string(expected) + " entries, got " +
                      std::to_string(out.size()));
  }
  return out;
}

Vec vec(const json& j, const std::string& key, const std::string& where, int expected = -1) {
  return vector_of(require(j, key, where), where + "." + key, expected);
}

Box box_of(const json& j, const std::string& where, int dim) {
  Box b{vec(j, "lower", where, dim), vec(j, "upper", where, dim)};
  if ((b.upper.array() < b.lower.array()).any()) {
    throw ConfigError(where + ": upper bound below lower bound");
  }
  return b;
}

void require_positive(double v, const std::string& what) {
  if (!(v > 0.0)) throw ConfigError(what + " must be positive");
}

// ---------------------------------------------------------------------------

SystemPtr build_model(const json& j) {
  const std::string where = "model";
  const std::string id = text(j, "id", where);
  if (id == "unicycle") {
    Vec d = j.contains("drift") ? vec(j, "drift", where, 2) : Vec::Zero(2);
    return std::make_shared<Unicycle>(d[0], d[1]);
  }
  if (id == "planar_quad") {
    const double g = number_or(j, "gravity", 9.81, where);
    require_positive(g, "model.gravity");
    return std::make_shared<PlanarQuad>(g);
  }
  if (id == "quad3d") {
    Quad3DParams p;
    p.mass = number_or(j, "mass", 1.0, where);
    p.gravity = number_or(j, "gravity", 9.81, where);
    if (j.contains("inertia")) {
      const Vec d = vec(j, "inertia", where, 3);
      p.inertia = d.asDiagonal();
    }
    require_positive(p.gravity, "model.gravity");
    return std::make_shared<Quad3D>(p);
  }
  throw ConfigError("model.id: unknown model '" + id + "'");
}

ChainControllerPtr build_chain_nominal(const json& j, int p, int r, const std::string& where) {
  const std::string kind = text(j, "kind", where);
  if (kind == "pd") {
    const double kp = number(j, "kp", where);
    const double kd = r == 2 ? number(j, "kd", where) : 0.0;
    return std::make_shared<ChainPd>(p, r, vec(j, "goal", where, p), kp, kd);
  }
  throw ConfigError(where + ".kind: unknown chain controller '" + kind + "'");
}

SmoothSafeParams smooth_params(const json& j, double gamma, double epsilon,
                               const std::string& where) {
  SmoothSafeParams s;
  s.gamma = number_or(j, "gamma", gamma, where);
  s.epsilon = number_or(j, "epsilon", epsilon, where);
  s.kappa = number_or(j, "kappa", 10.0, where);
  s.floor = number_or(j, "floor", 1e-2, where);
  return s;
}

BarrierPtr build_h0(const json& j, const OutputChainSpec& chain) {
  const std::string where = "h0";
  const std::string kind = text(j, "kind", where);
  const int p = chain.p;
  if (kind == "ellipse") {
    if (chain.r != 1) throw ConfigError("h0.kind ellipse needs a first-order output chain");
    return std::make_shared<EllipseBarrier>(vec(j, "center", where, p), vec(j, "weights", where, p));
  }
  if (kind == "obstacle") {
    if (chain.r != 1) throw ConfigError("h0.kind obstacle needs a first-order output chain");
    return std::make_shared<ObstacleBarrier>(vec(j, "center", where, p), number(j, "radius", where));
  }
  if (kind == "obstacle_hocbf") {
    auto base = std::make_shared<ObstacleBarrier>(vec(j, "center", where, p),
                                                  number(j, "radius", where));
    return hocbf_extend(base, number(j, "alpha", where), chain);
  }
  if (kind == "geofence_hocbf") {
    const int axis = static_cast<int>(number_or(j, "axis", 0.0, where));
    auto base = std::make_shared<GeofenceBarrier>(p, axis, number(j, "limit", where));
    return hocbf_extend(base, number_or(j, "alpha", 1.0, where), chain);
  }
  if (kind == "obstacle_backstep") {
    if (chain.r != 2) throw ConfigError("h0.kind obstacle_backstep needs r = 2");
    auto base = std::make_shared<ObstacleBarrier>(vec(j, "center", where, p),
                                                  number(j, "radius", where));
    const json& kv = require(j, "safe_velocity", where);
    const std::string kw = where + ".safe_velocity";
    auto single = OutputChainSpec::integrator(p, 1);
    auto nominal = build_chain_nominal(require(kv, "nominal", kw), p, 1, kw + ".nominal");
    SmoothSafeParams sp;
    sp.gamma = number(kv, "gamma", kw);
    sp.epsilon = number(kv, "epsilon", kw);
    sp.kappa = number_or(kv, "kappa", 10.0, kw);
    sp.floor = number_or(kv, "floor", 1e-2, kw);
    auto safe_velocity = std::make_shared<SmoothSafeController>(base, single, nominal, sp);
    return backstep_extend(base, safe_velocity, number(j, "mu_b", where));
  }
  throw ConfigError("h0.kind: unknown barrier '" + kind + "'");
}

ChainControllerPtr build_khat(const json& j, const json& h0_cfg, const BarrierPtr& h0,
                              const OutputChainSpec& chain, double gamma, double epsilon) {
  const std::string where = "khat";
  const std::string kind = text(j, "kind", where);
  if (kind == "linear_ellipse") {
    if (text(h0_cfg, "kind", "h0") != "ellipse") {
      throw ConfigError("khat.kind linear_ellipse requires h0.kind ellipse");
    }
    return std::make_shared<LinearEllipseController>(vec(h0_cfg, "center", "h0", chain.p),
                                                     vec(h0_cfg, "weights", "h0", chain.p),
                                                     number(j, "rho", where));
  }
  if (kind == "smooth_safe") {
    auto nominal = build_chain_nominal(require(j, "nominal", where), chain.p, chain.r,
                                       where + ".nominal");
    return std::make_shared<SmoothSafeController>(h0, chain, nominal,
                                                  smooth_params(j, gamma, epsilon, where));
  }
  throw ConfigError("khat.kind: unknown controller '" + kind + "'");
}

ClfPtr build_clf(const json& j, const SystemPtr& sys, const ChainControllerPtr& khat,
                 double beta, double lambda) {
  const std::string where = "clf";
  const std::string kind = text(j, "kind", where);
  const double eta = number_or(j, "eta", 1e-8, where);
  if (kind == "geometric_2d") {
    return std::make_shared<GeometricClf2d>(sys, khat, lambda, beta, eta);
  }
  if (kind == "backstep_planar") {
    auto pq = std::dynamic_pointer_cast<const PlanarQuad>(sys);
    if (!pq) throw ConfigError("clf.kind backstep_planar requires model planar_quad");
    return std::make_shared<PlanarBackstepClf>(pq, khat, number(j, "mu2", where),
                                               number(j, "k_theta", where), lambda, beta, eta);
  }
  if (kind == "geometric_3d" || kind == "backstep_3d") {
    auto q = std::dynamic_pointer_cast<const Quad3D>(sys);
    if (!q) throw ConfigError("clf.kind " + kind + " requires model quad3d");
    const double yaw = number_or(j, "yaw_ref", 0.0, where);
    if (kind == "geometric_3d") return std::make_shared<GeometricClf3d>(q, khat, lambda, beta, yaw, eta);
    return std::make_shared<Quad3dBackstepClf>(q, khat, number(j, "mu2", where),
                                               number(j, "k_R", where), lambda, beta, yaw, eta);
  }
  throw ConfigError("clf.kind: unknown CLF '" + kind + "'");
}

SinusoidReference build_reference(const json& j, int p) {
  const std::string where = "reference";
  if (text(j, "kind", where) != "sinusoid") throw ConfigError("reference.kind must be sinusoid");
  SinusoidReference r;
  r.offset = vec(j, "offset", where, p);
  r.amplitude = vec(j, "amplitude", where, p);
  r.frequency = vec(j, "frequency_hz", where, p);
  r.phase = j.contains("phase") ? vec(j, "phase", where, p) : Vec::Zero(p);
  return r;
}

NominalFn build_nominal(const json& j, const Scenario& sc) {
  const std::string where = "nominal";
  const std::string kind = text(j, "kind", where);
  const SystemPtr sys = sc.system;
  const ChainControllerPtr khat = sc.drd->khat_ptr();

  if (kind == "unicycle_heading") {
    if (sys->id() != "unicycle") throw ConfigError("nominal unicycle_heading needs model unicycle");
    const double kq = number(j, "k_q", where);
    require_positive(kq, "nominal.k_q");
    return [sys, khat, kq](double, const Vec& x, const DrdEval& e) {
      Vec u(2);
      u << k1_pullback(x, *sys, *khat)[0], -kq * std::sin(x[2] - e.heading_des.value_or(x[2]));
      return u;
    };
  }
  if (kind == "unicycle_goal") {
    if (sys->id() != "unicycle") throw ConfigError("nominal unicycle_goal needs model unicycle");
    const Vec goal = vec(j, "goal", where, 2);
    const double kp = number(j, "k_p", where);
    const double kq = number(j, "k_q", where);
    require_positive(kp, "nominal.k_p");
    require_positive(kq, "nominal.k_q");
    return [goal, kp, kq](double, const Vec& x, const DrdEval&) {
      const Vec d = goal - x.head(2);
      const double heading = d.norm() > 1e-9 ? std::atan2(d[1], d[0]) : x[2];
      return nominal_unicycle_tracker(x, goal, heading, kp, kq);
    };
  }
  if (kind == "planar_quad_pd") {
    auto pq = std::dynamic_pointer_cast<const PlanarQuad>(sys);
    if (!pq) throw ConfigError("nominal planar_quad_pd needs model planar_quad");
    const double kp = number(j, "k_p", where);
    const double kq = number(j, "k_q", where);
    require_positive(kp, "nominal.k_p");
    require_positive(kq, "nominal.k_q");
    return [pq, khat, kp, kq](double, const Vec& x, const DrdEval& e) {
      return nominal_planar_quad(x, *pq, *khat, e.heading_des.value_or(x[2]), kp, kq);
    };
  }
  if (kind == "quad3d_tracker") {
    auto q3 = std::dynamic_pointer_cast<const Quad3D>(sys);
    if (!q3) throw ConfigError("nominal quad3d_tracker needs model quad3d");
    if (!sc.reference) throw ConfigError("nominal quad3d_tracker needs a reference");
    const SinusoidReference ref = *sc.reference;
    const double kp = number(j, "k_p", where);
    const double kd = number(j, "k_d", where);
    const double kr = number(j, "k_R", where);
    const double kw = number(j, "k_omega", where);
    const double yaw = number_or(j, "yaw", 0.0, where);
    const std::string thrust = j.value("thrust", std::string("k1"));
    if (thrust != "k1" && thrust != "tracker") {
      throw ConfigError("nominal.thrust must be 'k1' or 'tracker'");
    }
    const bool use_k1 = thrust == "k1";
    for (double g : {kp, kd, kr, kw}) require_positive(g, "nominal quad3d_tracker gains");
    return [q3, khat, ref, kp, kd, kr, kw, yaw, use_k1](double t, const Vec& x, const DrdEval&) {
      const Quad3DParams& par = q3->params();
      const Vec3 pos = x.head<3>();
      const Vec3 vel = x.segment<3>(3);
      const Mat3 r = quat_to_rotation(x.segment<4>(6));
      const Vec3 w = x.segment<3>(10);
      const Vec3 acc = Vec3(ref.acceleration(t)) - kp * (pos - Vec3(ref.position(t))) -
                       kd * (vel - Vec3(ref.velocity(t)));
      const Vec3 force = par.mass * (acc + par.gravity * Vec3::UnitZ());
      const Mat3 rd = desired_rotation(force, yaw);
      const Vec3 e_r = vee_skew_part(rd.transpose() * r);
      const Vec3 moment = -kr * e_r - kw * w + w.cross(par.inertia * w);
      Vec u(4);
      u << (use_k1 ? k1_pullback(x, *q3, *khat)[0] : force.dot(r.col(2))), moment;
      return u;
    };
  }
  throw ConfigError("nominal.kind: unknown nominal controller '" + kind + "'");
}

}  // namespace

// ---------------------------------------------------------------------------

Vec SinusoidReference::position(double t) const {
  const Vec arg = 2.0 * std::numbers::pi * frequency * t + phase;
  return offset + amplitude.cwiseProduct(arg.array().sin().matrix());
}

Vec SinusoidReference::velocity(double t) const {
  const Vec w = 2.0 * std::numbers::pi * frequency;
  const Vec arg = w * t + phase;
  return amplitude.cwiseProduct(w).cwiseProduct(arg.array().cos().matrix());
}

Vec SinusoidReference::acceleration(double t) const {
  const Vec w = 2.0 * std::numbers::pi * frequency;
  const Vec arg = w * t + phase;
  return -amplitude.cwiseProduct(w.cwiseProduct(w)).cwiseProduct(arg.array().sin().matrix());
}

Scenario parse_scenario(const std::string& json_text, const ScenarioOverrides& overrides) {
  json cfg;
  try {
    cfg = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!cfg.is_object()) throw ConfigError("config must be a JSON object");
  const int version = static_cast<int>(number(cfg, "schema_version", "config"));
  if (version != 1) throw ConfigError("unsupported schema_version " + std::to_string(version));

  Scenario sc;
  sc.name = cfg.value("name", std::string("scenario"));
  sc.system = build_model(require(cfg, "model", "config"));
  const int p = sc.system->output_dim();
  const int r = sc.system->relative_degree();
  const OutputChainSpec chain = OutputChainSpec::integrator(p, r);

  const json& drd_cfg = require(cfg, "drd", "config");
  DrdParams params;
  params.mu = number(drd_cfg, "mu", "drd");
  params.gamma = number(drd_cfg, "gamma", "drd");
  params.epsilon = number(drd_cfg, "epsilon", "drd");
  const double beta = number_or(drd_cfg, "beta", 0.5, "drd");
  const double lambda = number(drd_cfg, "lambda", "drd");
  // Validate before building anything expensive so the message is the condition itself.
  require_parameter_condition(params.gamma, params.epsilon, params.mu, beta, lambda);

  const json& h0_cfg = require(cfg, "h0", "config");
  const BarrierPtr h0 = build_h0(h0_cfg, chain);
  const ChainControllerPtr khat =
      build_khat(require(cfg, "khat", "config"), h0_cfg, h0, chain, params.gamma, params.epsilon);
  const ClfPtr clf = build_clf(require(cfg, "clf", "config"), sc.system, khat, beta, lambda);
  sc.drd = std::make_shared<DrdCbf>(sc.system, h0, khat, clf, params);
  sc.certificate = BarrierCertificate{h0, khat, chain, params.gamma, params.epsilon};

  if (cfg.contains("reference")) sc.reference = build_reference(cfg.at("reference"), p);
  sc.nominal_kind = text(require(cfg, "nominal", "config"), "kind", "nominal");
  sc.nominal = build_nominal(cfg.at("nominal"), sc);

  const int n = sc.system->state_dim();
  if (cfg.contains("sweep")) {
    const json& sw = cfg.at("sweep");
    const Vec base = vec(sw, "base_state", "sweep", n);
    const int index = static_cast<int>(number(sw, "index", "sweep"));
    const int count = static_cast<int>(number(sw, "count", "sweep"));
    const double lo = number(sw, "min", "sweep");
    const double hi = number(sw, "max", "sweep");
    const bool open = sw.value("open", true);
    if (index < 0 || index >= n) throw ConfigError("sweep.index out of range");
    if (count < 1) throw ConfigError("sweep.count must be at least 1");
    for (int k = 0; k < count; ++k) {
      const double frac = open ? static_cast<double>(k + 1) / (count + 1)
                               : (count == 1 ? 0.0 : static_cast<double>(k) / (count - 1));
      Vec x0 = base;
      x0[index] = lo + frac * (hi - lo);
      sc.initial_states.push_back(x0);
      sc.labels.push_back(sc.name + "_" + std::to_string(k));
    }
    sc.is_sweep = true;
  } else {
    sc.initial_states.push_back(vec(cfg, "initial_state", "config", n));
    sc.labels.push_back(sc.name);
  }
  for (auto& x0 : sc.initial_states) {
    if (sc.system->id() == "quad3d" && std::abs(x0.segment<4>(6).norm() - 1.0) > 1e-6) {
      throw ConfigError("initial_state: quaternion must have unit norm");
    }
  }

  sc.horizon = overrides.horizon.value_or(number_or(cfg, "horizon", 20.0, "config"));
  sc.dt = overrides.dt.value_or(number_or(cfg, "dt", 1e-3, "config"));
  require_positive(sc.dt, "dt");
  if (!(sc.horizon >= sc.dt)) throw ConfigError("horizon must be at least dt");
  if (overrides.seed) {
    sc.seed = *overrides.seed;
  } else if (cfg.contains("seed")) {
    if (!cfg.at("seed").is_number_unsigned()) throw ConfigError("seed must be a non-negative integer");
    sc.seed = cfg.at("seed").get<std::uint64_t>();
  }
  sc.compare_unfiltered = cfg.value("compare_unfiltered", false);
  const std::string inputs = cfg.value("filter_inputs", std::string("u2"));
  if (inputs != "u2" && inputs != "all") throw ConfigError("filter_inputs must be 'u2' or 'all'");
  sc.filter_u2_only = inputs == "u2";

  if (cfg.contains("state_box")) sc.state_box = box_of(cfg.at("state_box"), "state_box", n);
  if (cfg.contains("chain_box")) {
    sc.chain_box = box_of(cfg.at("chain_box"), "chain_box", chain.dim());
  } else if (text(h0_cfg, "kind", "h0") == "ellipse") {
    // 1.5x the bounding box of the ellipse.
    const Vec c = vec(h0_cfg, "center", "h0", p);
    const Vec half = 1.5 * vec(h0_cfg, "weights", "h0", p).cwiseSqrt().cwiseInverse();
    sc.chain_box = Box{c - half, c + half};
  }

  if (cfg.contains("verify")) {
    const json& suites = require(cfg.at("verify"), "suites", "verify");
    if (!suites.is_array()) throw ConfigError("verify.suites must be an array");
    for (const json& s : suites) {
      VerifySuite v;
      v.kind = text(s, "kind", "verify.suites[]");
      v.target = s.value("target", std::string());
      v.samples = static_cast<int>(number_or(s, "samples", 1000.0, "verify.suites[]"));
      v.dim = static_cast<int>(number_or(s, "dim", 2.0, "verify.suites[]"));
      v.tol = number_or(s, "tol", 0.0, "verify.suites[]");
      v.gamma_scale = number_or(s, "gamma_scale", 2.0, "verify.suites[]");
      v.h0_floor = number_or(s, "h0_floor", v.h0_floor, "verify.suites[]");
      if (v.samples < 1) throw ConfigError("verify.suites[].samples must be at least 1");
      sc.suites.push_back(v);
    }
  }

  cfg["horizon"] = sc.horizon;
  cfg["dt"] = sc.dt;
  cfg["seed"] = sc.seed;
  sc.config_json = cfg.dump(2);
  return sc;
}

Scenario load_scenario(const std::string& path, const ScenarioOverrides& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), overrides);
}

std::string bundled_scenario_path(const std::string& name) {
  return std::string(DRDCBF_SCENARIO_DIR) + "/" + name + ".json";
}

// ---------------------------------------------------------------------------

MonitorReport monitor_trajectory(const Trajectory& traj, double tol_h) {
  MonitorReport m;
  if (traj.size() == 0) {
    m.pass = false;
    m.message = "empty trajectory";
    return m;
  }
  m.started_safe = traj.cert.front().h >= 0.0;
  m.min_h = traj.min_h();
  m.min_h0 = traj.min_h0();
  m.min_h0_when_safe = std::numeric_limits<double>::infinity();
  for (const auto& c : traj.cert) {
    if (c.h >= 0.0) m.min_h0_when_safe = std::min(m.min_h0_when_safe, c.h0);
  }
  m.infeasible = traj.infeasible_count();
  std::ostringstream msg;
  if (m.started_safe && m.min_h < -tol_h) {
    m.pass = false;
    msg << "h dropped to " << m.min_h << " after starting safe; ";
  }
  if (m.min_h0_when_safe < -tol_h) {
    m.pass = false;
    msg << "h0 = " << m.min_h0_when_safe << " while h >= 0; ";
  }
  if (m.infeasible > 0) {
    m.pass = false;
    msg << m.infeasible << " infeasible filter steps; ";
  }
  m.message = m.pass ? "ok" : msg.str();
  return m;
}

Trajectory simulate(const Scenario& sc, const Vec& x0, const RunOptions& opts) {
  const DrdCbf& drd = *sc.drd;
  const ControlAffineSystem& sys = *sc.system;
  const double gamma = drd.params().gamma;
  const double filter_gamma = gamma * opts.filter_gamma_scale;
  auto hold = std::make_shared<AttitudeHold>();

  ControllerFn controller = [&, hold](double t, const Vec& x) {
    const DrdEval e = drd.evaluate(x, hold.get());
    const Vec u_nom = sc.nominal(t, x, e);
    ControlSample s;
    s.cert.h = e.h;
    s.cert.h0 = e.h0;
    s.cert.V = e.V;
    s.cert.e_norm = e.e_norm;
    s.cert.region = e.outside_region;
    if (opts.unfiltered) {
      s.u = u_nom;
    } else if (sc.filter_u2_only) {
      const Vec u1 = k1_pullback(x, sys, drd.khat());
      const FilterResult f = cbf_qp_filter(
          drd_filter_problem_u2(e, u1, u_nom.tail(sys.u2_dim()), filter_gamma));
      s.u.resize(sys.input_dim());
      s.u << u1, f.u;
      s.cert.active = f.active;
      s.cert.infeasible = f.infeasible;
    } else {
      const FilterResult f = cbf_qp_filter(drd_filter_problem(e, u_nom, filter_gamma));
      s.u = f.u;
      s.cert.active = f.active;
      s.cert.infeasible = f.infeasible;
    }
    const FilterProblem logged = drd_filter_problem(e, s.u, gamma);
    s.cert.slack = logged.a.dot(s.u) + logged.b;
    return s;
  };
  DynamicsFn dynamics = [&sys](const Vec& x, const Vec& u) { return sys.dynamics(x, u); };
  NormalizeFn normalize = [&sys](Vec& x) { sys.normalize(x); };

  Trajectory traj = integrate_rk4(dynamics, x0, controller, sc.horizon, sc.dt, normalize);
  traj.state_names = sys.state_names();
  return traj;
}

std::vector<RunResult> run_scenario(const Scenario& sc, const RunOptions& opts) {
  auto one = [&sc, &opts](std::size_t i) {
    RunResult r;
    r.label = sc.labels[i];
    r.filtered = simulate(sc, sc.initial_states[i], opts);
    r.monitor = monitor_trajectory(r.filtered);
    if (sc.compare_unfiltered) {
      RunOptions raw = opts;
      raw.unfiltered = true;
      r.unfiltered = simulate(sc, sc.initial_states[i], raw);
    }
    return r;
  };
  std::vector<RunResult> out;
  if (sc.initial_states.size() == 1) {
    out.push_back(one(0));
    return out;
  }
  std::vector<std::future<RunResult>> futures;
  for (std::size_t i = 0; i < sc.initial_states.size(); ++i) {
    futures.push_back(std::async(std::launch::async, one, i));
  }
  for (auto& f : futures) out.push_back(f.get());
  return out;
}

std::string summary_json(const Scenario& sc, const RunResult& run) {
  json j;
  j["scenario"] = json::parse(sc.config_json);
  j["label"] = run.label;
  json s;
  s["rows"] = run.filtered.size();
  s["min_h"] = run.monitor.min_h;
  s["min_h0"] = run.monitor.min_h0;
  s["started_safe"] = run.monitor.started_safe;
  s["h_initial"] = run.filtered.cert.front().h;
  s["h_final"] = run.filtered.cert.back().h;
  s["infeasible_count"] = run.monitor.infeasible;
  s["monitor_pass"] = run.monitor.pass;
  s["monitor_message"] = run.monitor.message;
  if (run.unfiltered) {
    s["unfiltered_min_h0"] = run.unfiltered->min_h0();
    s["unfiltered_min_h"] = run.unfiltered->min_h();
  }
  j["summary"] = s;
  return j.dump(2);
}

}  // namespace drdcbf
