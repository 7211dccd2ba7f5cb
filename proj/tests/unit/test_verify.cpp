#include "drdcbf/verify.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <json.hpp>

#include <cmath>

using namespace drdcbf;
using drdcbf::test::ConstantChain;
using drdcbf::test::vec;
using json = nlohmann::json;

namespace {

constexpr double kPi = 3.14159265358979323846;

Scenario bundled(const std::string& name) { return load_scenario(bundled_scenario_path(name)); }

// Scalar trajectory with h(t_k) = h_of(t_k) on a uniform grid.
Trajectory scalar_trajectory(const std::function<double(double)>& h_of, double dt, int steps) {
  Trajectory t;
  t.state_names = {"x"};
  t.input_dim = 1;
  for (int k = 0; k <= steps; ++k) {
    const double time = k * dt;
    t.times.push_back(time);
    t.states.push_back(vec({0.0}));
    t.inputs.push_back(vec({0.0}));
    CertificateChannels c;
    c.h = h_of(time);
    c.h0 = c.h;
    c.V = 0.0;
    t.cert.push_back(c);
  }
  return t;
}

Vec antipodal_or_aligned(const DrdCbf& drd, double px, double py, double offset) {
  const double theta_des = *drd.evaluate(vec({px, py, 0.0})).heading_des;
  return vec({px, py, wrap_angle(theta_des + offset)});
}

}  // namespace

TEST(GradCheck, QuadraticIsExact) {
  auto f = [](const Vec& x) { return x.squaredNorm(); };
  auto g = [](const Vec& x) -> Vec { return 2.0 * x; };
  const auto pts = uniform_samples({Vec::Constant(4, -3.0), Vec::Constant(4, 3.0)}, 500, 1);
  const auto r = grad_check(f, g, pts, 1e-4, 1e-9);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.samples, 500);
  EXPECT_LE(r.max_rel_error, 1e-9);
}

TEST(GradCheck, DetectsWrongGradient) {
  auto f = [](const Vec& x) { return std::sin(x[0]) * x[1]; };
  auto wrong = [](const Vec& x) -> Vec { return vec({std::cos(x[0]) * x[1], 1.01 * std::sin(x[0])}); };
  const auto pts = uniform_samples({vec({-2, -2}), vec({2, 2})}, 200, 2);
  const auto r = grad_check(f, wrong, pts, 1e-6, 1e-4);
  EXPECT_FALSE(r.pass);
  EXPECT_EQ(r.worst_point.size(), 2);
  EXPECT_THROW(grad_check(f, wrong, pts, 0.0, 1e-4), std::invalid_argument);
}

TEST(GradCheck, EllipseH0AndDrdH) {
  const Scenario sc = bundled("unicycle_ellipse");
  const Barrier& h0 = *sc.certificate.h0;
  const auto chain_pts = halton_samples({vec({-1.5, -1.5}), vec({1.5, 1.5})}, 1000);
  const auto r0 = grad_check([&](const Vec& y) { return h0.value(y); },
                             [&](const Vec& y) { return h0.gradient(y); }, chain_pts, 1e-6, 1e-5);
  EXPECT_TRUE(r0.pass) << r0.max_rel_error;

  const DrdCbf& drd = *sc.drd;
  const auto r = grad_check([&](const Vec& x) { return drd.h(x); },
                            [&](const Vec& x) { return drd.grad_h(x); },
                            halton_samples(*sc.state_box, 1000), 1e-6, 1e-4);
  EXPECT_TRUE(r.pass) << r.max_rel_error;
}

TEST(LemmaBound, ClosedFormExamples) {
  EXPECT_DOUBLE_EQ(geometric_clf_3d_value(2.0, Mat3::Identity()), 0.0);

  // 2D: |k~| = 1 and a quarter-turn attitude error.
  auto sys = std::make_shared<Unicycle>();
  auto khat = std::make_shared<ConstantChain>(2, vec({1.0, 0.0}));
  GeometricClf2d clf(sys, khat, 2.0);
  const Vec x = vec({0.0, 0.0, kPi / 2});
  EXPECT_NEAR(clf.value(x), 1.0, 1e-15);
  const double e = tracking_error(x, *sys, *khat).norm();
  EXPECT_NEAR(0.5 * e * e, 0.5, 1e-15);
}

TEST(LemmaBound, SamplerFindsNoViolations) {
  for (int dim : {2, 3}) {
    const auto r = lemma_bound_sampler(dim, 5000, 17);
    EXPECT_TRUE(r.pass()) << "dim " << dim;
    EXPECT_EQ(r.samples, 5000);
    EXPECT_EQ(r.bound_violations, 0);
    EXPECT_EQ(r.angle_violations, 0);
    EXPECT_GE(r.min_bound_margin, -1e-12);
    EXPECT_LE(r.max_angle_error, 1e-9);
  }
  EXPECT_THROW(lemma_bound_sampler(4, 10, 1), std::invalid_argument);
}

TEST(LemmaBound, ReproducibleFromSeed) {
  const auto a = lemma_bound_sampler(3, 500, 5);
  const auto b = lemma_bound_sampler(3, 500, 5);
  EXPECT_EQ(a.min_bound_margin, b.min_bound_margin);
  EXPECT_EQ(a.max_angle_error, b.max_angle_error);
  EXPECT_NE(a.min_bound_margin, lemma_bound_sampler(3, 500, 6).min_bound_margin);
}

TEST(ClfDecay, UnicycleSetEAtAlignedAndAntipodalHeadings) {
  const Scenario sc = bundled("unicycle_ellipse");
  const DrdCbf& drd = *sc.drd;
  for (const Vec& p : halton_samples({vec({-0.7, -0.5}), vec({0.7, 0.5})}, 40)) {
    const auto aligned = classify_decay(antipodal_or_aligned(drd, p[0], p[1], 0.0), drd);
    EXPECT_EQ(aligned.cls, DecayClass::DriftDecay) << to_string(aligned.cls);
    const auto flipped = classify_decay(antipodal_or_aligned(drd, p[0], p[1], kPi), drd);
    EXPECT_EQ(flipped.cls, DecayClass::EVacuous) << to_string(flipped.cls);
    EXPECT_LT(flipped.decay_margin, 0.0);
    const auto generic = classify_decay(antipodal_or_aligned(drd, p[0], p[1], 1.0), drd);
    EXPECT_EQ(generic.cls, DecayClass::Controllable);
    EXPECT_GT(generic.lg2_v_norm, 1e-9);
  }
}

TEST(ClfDecay, SamplerCoversEveryState) {
  const Scenario sc = bundled("unicycle_ellipse");
  const auto r = clf_decay_sampler(*sc.drd, *sc.state_box, 500);
  EXPECT_EQ(r.samples, 500);
  EXPECT_EQ(r.controllable + r.drift_decay + r.e_vacuous + r.e_checked + r.counterexamples, 500);
  EXPECT_TRUE(r.pass());
  EXPECT_EQ(static_cast<int>(r.e_states.size()), r.e_vacuous + r.e_checked + r.counterexamples);
}

TEST(ClfDecay, IdenticallyZeroClfPassesVacuously) {
  // k^ equal to the drift makes k~ = 0 everywhere, so V = 0.
  auto sys = std::make_shared<Unicycle>(0.35, 0.0);
  auto khat = std::make_shared<ConstantChain>(2, vec({0.35, 0.0}));
  auto h0 = std::make_shared<EllipseBarrier>(vec({0.0, 0.0}), vec({1.0, 2.0}));
  auto clf = std::make_shared<GeometricClf2d>(sys, khat, 2.0);
  DrdCbf drd(sys, h0, khat, clf, {0.06, 0.1, 50.0});
  const auto r = clf_decay_sampler(drd, {vec({-1, -1, -kPi}), vec({1, 1, kPi})}, 200);
  EXPECT_EQ(r.drift_decay, 200);
  EXPECT_TRUE(r.pass());
}

TEST(ClfDecay, BetaEstimateBoundsConfiguredBeta) {
  // Unicycle with a constant desired velocity: V / |e|^2 = 1 / (1 + cos(theta - theta_d)).
  auto sys = std::make_shared<Unicycle>(0.0, 0.0);
  auto khat = std::make_shared<ConstantChain>(2, vec({1.0, 0.0}));
  auto h0 = std::make_shared<EllipseBarrier>(vec({0.0, 0.0}), vec({1.0, 2.0}));
  std::vector<Vec> points;
  for (double theta : {0.05, 0.4, 1.0, 2.0, 3.0}) points.push_back(vec({0.1, 0.0, theta}));
  const double expected = 1.0 / (1.0 + std::cos(0.05));

  DrdCbf honest(sys, h0, khat, std::make_shared<GeometricClf2d>(sys, khat, 2.0, 0.5),
                {0.06, 0.1, 50.0});
  const auto ok = clf_decay_sampler(honest, points);
  EXPECT_NEAR(ok.beta_estimate, expected, 1e-9);
  EXPECT_TRUE(ok.pass());

  DrdCbf inflated(sys, h0, khat, std::make_shared<GeometricClf2d>(sys, khat, 2.0, 0.9),
                  {0.06, 0.1, 50.0});
  const auto bad = clf_decay_sampler(inflated, points);
  EXPECT_EQ(bad.counterexamples, 0);
  EXPECT_FALSE(bad.pass());
}

TEST(ClfDecay, BundledScenariosMeetConfiguredBeta) {
  for (const char* name : {"unicycle_obstacle", "planar_quad_obstacle", "quad3d_geofence"}) {
    const Scenario sc = bundled(name);
    const auto r = clf_decay_sampler(*sc.drd, *sc.state_box, 300);
    EXPECT_GE(r.beta_estimate, sc.drd->clf().beta()) << name;
    EXPECT_TRUE(std::isfinite(r.beta_estimate)) << name;
  }
}

TEST(ClfDecay, PlanarBackstepSlicePasses) {
  const Scenario sc = bundled("planar_quad_obstacle");
  const auto& clf = dynamic_cast<const PlanarBackstepClf&>(sc.drd->clf());
  std::vector<Vec> slice;
  for (Vec x : halton_samples(*sc.state_box, 200)) {
    x[5] = clf.k_omega(x);
    slice.push_back(x);
  }
  const auto r = clf_decay_sampler(*sc.drd, slice);
  EXPECT_TRUE(r.pass());
  EXPECT_EQ(r.controllable, 0);
  EXPECT_EQ(r.drift_decay + r.e_vacuous + r.e_checked, 200);
}

TEST(Audit, ConstantSafeStatePasses) {
  const auto r = audit_trajectory(scalar_trajectory([](double) { return 0.4; }, 1e-3, 100), 1.0, 1e-2);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.steps, 100);
  EXPECT_NEAR(r.min_margin, 0.4, 1e-12);
}

TEST(Audit, DecayRateBoundary) {
  const double gamma = 2.0;
  const double dt = 1e-3;
  // h = exp(-gamma t) sits on the boundary; the discrete margin is O(dt).
  const auto on = audit_trajectory(
      scalar_trajectory([&](double t) { return std::exp(-gamma * t); }, dt, 1000), gamma, 1e-2);
  EXPECT_TRUE(on.pass);
  EXPECT_GT(on.min_margin, 0.0);

  // Three times faster decay: margin -2 gamma h at t = 0.
  const auto fast = audit_trajectory(
      scalar_trajectory([&](double t) { return std::exp(-3 * gamma * t); }, dt, 1000), gamma, 1e-2);
  EXPECT_FALSE(fast.pass);
  EXPECT_NEAR(fast.min_margin, -2 * gamma, 0.05);
  EXPECT_DOUBLE_EQ(fast.worst_time, 0.0);
}

TEST(Audit, FlagsBadGridAndUnsafeH0) {
  auto t = scalar_trajectory([](double) { return 0.4; }, 1e-3, 10);
  t.times[5] += 1e-4;
  EXPECT_FALSE(audit_trajectory(t, 1.0, 1e-2).uniform_grid);

  auto u = scalar_trajectory([](double) { return 0.1; }, 1e-3, 10);
  u.cert[3].h0 = -0.5;
  const auto r = audit_trajectory(u, 1.0, 1e-2);
  EXPECT_EQ(r.h0_violations, 1);
  EXPECT_EQ(r.subset_violations, 1);
  EXPECT_FALSE(r.pass);
}

TEST(Audit, ShortEllipseRunPasses) {
  ScenarioOverrides o;
  o.horizon = 5.0;
  const Scenario sc = load_scenario(bundled_scenario_path("unicycle_ellipse"), o);
  const Trajectory t = simulate(sc, sc.initial_states.front());
  const auto r = audit_trajectory(t, sc.drd->params().gamma, 1e-2);
  EXPECT_TRUE(r.pass) << r.min_margin << " at " << r.worst_time;
}

TEST(QpEquivalence, MatchesOracle) {
  const auto r = qp_equivalence(300, 23);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.problems, 300);
  EXPECT_EQ(r.mismatches, 0);
  EXPECT_EQ(r.residual_violations, 0);
  EXPECT_EQ(r.infeasible_disagreements, 0);
  EXPECT_GE(r.min_residual, -1e-10);
  const auto again = qp_equivalence(300, 23);
  EXPECT_EQ(again.max_distance, r.max_distance);
}

TEST(RunSuite, ErrorsAndJson) {
  const Scenario sc = bundled("unicycle_ellipse");
  VerifySuite unknown;
  unknown.kind = "smt";
  EXPECT_THROW(run_suite(sc, unknown), ConfigError);
  VerifySuite bad_target;
  bad_target.kind = "grad_check";
  bad_target.target = "W";
  EXPECT_THROW(run_suite(sc, bad_target), ConfigError);

  VerifySuite issf;
  issf.kind = "issf";
  issf.samples = 500;
  const auto r = run_suite(sc, issf);
  EXPECT_TRUE(r.pass) << r.summary;
  EXPECT_EQ(json::parse(r.json).at("samples").get<int>(), 500);

  Scenario empty = sc;
  empty.suites.clear();
  EXPECT_THROW(run_verify(empty), ConfigError);
}

TEST(RunSuite, MutationIsDetected) {
  const Scenario sc = load_scenario(std::string(DRDCBF_TEST_DATA) + "/mutation_obstacle.json");
  const auto report = run_verify(sc);
  EXPECT_FALSE(report.pass);
  ASSERT_EQ(report.suites.size(), 1u);
  EXPECT_EQ(report.suites[0].kind, "mutation");
  const json j = json::parse(report.to_json());
  EXPECT_FALSE(j.at("pass").get<bool>());
}
