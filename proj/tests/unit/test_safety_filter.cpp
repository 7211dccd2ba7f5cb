#include "drdcbf/safety_filter.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace drdcbf;
using drdcbf::test::ConstantChain;
using drdcbf::test::vec;

namespace {

constexpr double kPi = 3.14159265358979323846;

FilterProblem random_problem(std::mt19937_64& rng, int m) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  FilterProblem p;
  p.u_nom = Vec(m);
  p.a = Vec(m);
  for (int i = 0; i < m; ++i) {
    p.u_nom[i] = u(rng);
    p.a[i] = u(rng);
  }
  p.b = u(rng);
  return p;
}

}  // namespace

TEST(CbfQpFilter, InactiveConstraintKeepsNominal) {
  const auto r = cbf_qp_filter({vec({0.3, -0.2}), vec({1.0, 0.0}), 1.0});
  EXPECT_EQ(r.u, vec({0.3, -0.2}));
  EXPECT_FALSE(r.active);
  EXPECT_FALSE(r.infeasible);
  EXPECT_DOUBLE_EQ(r.residual, 1.3);
}

TEST(CbfQpFilter, Examples) {
  const auto r1 = cbf_qp_filter({vec({0.0, 0.0}), vec({1.0, 0.0}), -1.0});
  EXPECT_LE((r1.u - vec({1.0, 0.0})).norm(), 1e-15);
  EXPECT_TRUE(r1.active);
  EXPECT_NEAR(r1.residual, 0.0, 1e-15);

  const auto r2 = cbf_qp_filter({vec({1.0, 1.0}), vec({0.0, 2.0}), -4.0});
  EXPECT_LE((r2.u - vec({1.0, 2.0})).norm(), 1e-15);
}

TEST(CbfQpFilter, ZeroRowFlagsInfeasibility) {
  const auto bad = cbf_qp_filter({vec({0.5}), vec({0.0}), -1.0});
  EXPECT_TRUE(bad.infeasible);
  EXPECT_EQ(bad.u, vec({0.5}));
  const auto fine = cbf_qp_filter({vec({0.5}), vec({0.0}), 1.0});
  EXPECT_FALSE(fine.infeasible);
  EXPECT_FALSE(fine.active);
}

TEST(CbfQpFilter, OracleExamples) {
  const auto half_line = qp_oracle({vec({0.0}), vec({1.0}), -1.0}, 3.0, 0.01);
  ASSERT_TRUE(half_line.feasible);
  EXPECT_NEAR(half_line.u[0], 1.0, 1e-12);

  const auto inactive = qp_oracle({vec({0.3, -0.7}), vec({1.0, 1.0}), 5.0}, 3.0, 0.05);
  ASSERT_TRUE(inactive.feasible);
  EXPECT_EQ(inactive.u, vec({0.3, -0.7}));

  const auto empty = qp_oracle({vec({0.0}), vec({0.0}), -1.0}, 3.0, 0.1);
  EXPECT_FALSE(empty.feasible);
}

// Projection properties: feasibility, KKT (u - u_nom = t a with t >= 0 and
// complementary slackness), idempotence and invariance to scaling the row.
TEST(CbfQpFilter, ProjectionProperties) {
  std::mt19937_64 rng(41);
  for (int i = 0; i < 2000; ++i) {
    const int m = 1 + i % 4;
    const FilterProblem p = random_problem(rng, m);
    const auto r = cbf_qp_filter(p);
    ASSERT_FALSE(r.infeasible);
    EXPECT_GE(p.a.dot(r.u) + p.b, -1e-12);
    EXPECT_NEAR(r.residual, p.a.dot(r.u) + p.b, 1e-12);

    const Vec step = r.u - p.u_nom;
    const double t = step.dot(p.a) / p.a.squaredNorm();
    EXPECT_GE(t, -1e-14);
    EXPECT_LE((step - t * p.a).norm(), 1e-12);
    if (t > 1e-12) EXPECT_NEAR(r.residual, 0.0, 1e-12);

    const auto again = cbf_qp_filter({r.u, p.a, p.b});
    EXPECT_LE((again.u - r.u).norm(), 1e-12);

    const auto scaled = cbf_qp_filter({p.u_nom, 3.7 * p.a, 3.7 * p.b});
    EXPECT_LE((scaled.u - r.u).norm(), 1e-12);
  }
}

TEST(DrdFilterProblem, RowAssembly) {
  DrdEval e;
  e.h = -0.2;
  e.lf_h = 0.5;
  e.lg1_h = vec({2.0});
  e.lg2_h = vec({-1.0});
  const auto full = drd_filter_problem(e, vec({1.0, 3.0}), 0.5);
  EXPECT_EQ(full.a, vec({2.0, -1.0}));
  EXPECT_DOUBLE_EQ(full.b, 0.5 + 0.5 * -0.2);

  const auto u2 = drd_filter_problem_u2(e, vec({1.5}), vec({3.0}), 0.5);
  EXPECT_EQ(u2.a, vec({-1.0}));
  EXPECT_DOUBLE_EQ(u2.b, 0.5 + 2.0 * 1.5 + 0.5 * -0.2);
  EXPECT_EQ(u2.u_nom, vec({3.0}));
}

TEST(NominalUnicycleTracker, Examples) {
  const Vec at_goal = nominal_unicycle_tracker(vec({1.0, 2.0, 0.3}), vec({1.0, 2.0}), 0.3, 1.0, 3.0);
  EXPECT_NEAR(at_goal.norm(), 0.0, 1e-15);

  const Vec far = nominal_unicycle_tracker(vec({0.0, 0.0, 0.0}), vec({0.0, 2.0}), 0.0, 1.0, 3.0);
  EXPECT_DOUBLE_EQ(far[0], 2.0);

  const Vec turn = nominal_unicycle_tracker(vec({0.0, 0.0, kPi / 2}), vec({0.0, 0.0}), 0.0, 1.0, 3.0);
  EXPECT_NEAR(turn[1], -3.0, 1e-15);
}

TEST(NominalPlanarQuad, Examples) {
  PlanarQuad sys;
  ConstantChain zero(4, vec({0.0, 0.0}));
  const Vec hover = nominal_planar_quad(Vec::Zero(6), sys, zero, 0.0, 10.0, 2.0);
  EXPECT_NEAR(hover[0], sys.gravity(), 1e-14);
  EXPECT_NEAR(hover[1], 0.0, 1e-15);

  auto khat = std::make_shared<ChainPd>(2, 2, vec({1.0, 1.0}), 1.0, 1.5);
  Vec x(6);
  x << 0.2, -0.1, 0.3, 0.4, -0.2, 0.0;
  x[5] = desired_heading_rate(x, sys, *khat);
  const Vec aligned = nominal_planar_quad(x, sys, *khat, x[2], 10.0, 2.0);
  EXPECT_NEAR(aligned[1], 0.0, 1e-12);
  const Vec lead = nominal_planar_quad(x, sys, *khat, x[2] + 0.1, 10.0, 2.0);
  EXPECT_NEAR(lead[1], 1.0, 1e-12);

  // The heading difference is wrapped: 2 pi + 0.1 is the same target.
  const Vec wrapped = nominal_planar_quad(x, sys, *khat, x[2] + 0.1 + 2 * kPi, 10.0, 2.0);
  EXPECT_NEAR(wrapped[1], 1.0, 1e-12);
}
