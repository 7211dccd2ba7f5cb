// Acceptance gate: one PASS/FAIL line per criterion, exit 1 if any fails.

#include "drdcbf/scenario.hpp"
#include "drdcbf/sim.hpp"
#include "drdcbf/verify.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

using namespace drdcbf;
using json = nlohmann::json;

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTolH = 1e-3;
constexpr double kAuditTol = 1e-2;

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

int failures = 0;

void report(int id, bool pass, const std::string& what) {
  std::printf("[%s] %2d %s\n", pass ? "PASS" : "FAIL", id, what.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof(buf), f, args);
  va_end(args);
  return buf;
}

std::string csv_bytes(const Trajectory& t) {
  std::ostringstream out;
  write_csv(t, out);
  return out.str();
}

Scenario bundled(const std::string& name) { return load_scenario(bundled_scenario_path(name)); }

double column_max(const Trajectory& t, int index) {
  double m = -std::numeric_limits<double>::infinity();
  for (const Vec& x : t.states) m = std::max(m, x[index]);
  return m;
}

struct Runs {
  Scenario sc;
  std::vector<RunResult> results;
  double seconds = 0.0;
};

Runs run_bundled(const std::string& name) {
  Runs r{bundled(name), {}, 0.0};
  Timer timer;
  r.results = run_scenario(r.sc);
  r.seconds = timer.seconds();
  return r;
}

}  // namespace

int main() {
  std::printf("acceptance: h tolerance %.0e, audit tolerance %.0e\n", kTolH, kAuditTol);

  // 1. Unicycle inside an ellipse with drift.
  const Runs ellipse = run_bundled("unicycle_ellipse");
  {
    const Trajectory& t = ellipse.results.at(0).filtered;
    const double h_start = t.cert.front().h;
    std::size_t last_nonpositive = 0;
    for (std::size_t k = 0; k < t.size(); ++k) {
      if (!(t.cert[k].h > 0.0)) last_nonpositive = k;
    }
    const bool attracted = last_nonpositive + 1 < t.size();
    const double t_star = t.times[last_nonpositive];
    const bool pass = t.min_h0() >= -kTolH && h_start < 0.0 && attracted && ellipse.seconds < 5.0;
    report(1, pass,
           fmt("unicycle ellipse: min h0 %.4g (>= -1e-3), h(0) %.4g (< 0), h > 0 for t > %.3f s "
               "(T = %.0f s), runtime %.2f s (< 5 s)",
               t.min_h0(), h_start, t_star, ellipse.sc.horizon, ellipse.seconds));
  }

  // 2. Unicycle obstacle, filtered against the raw tracker.
  const Runs obstacle = run_bundled("unicycle_obstacle");
  {
    const RunResult& run = obstacle.results.at(0);
    const double filtered = run.filtered.min_h0();
    const double raw = run.unfiltered ? run.unfiltered->min_h0() : 0.0;
    const bool pass = run.unfiltered && filtered >= -kTolH && raw < 0.0 && obstacle.seconds < 5.0;
    report(2, pass,
           fmt("unicycle obstacle: filtered min h0 %.4g (>= -1e-3), unfiltered min h0 %.4g (< 0), "
               "runtime %.2f s (< 5 s)",
               filtered, raw, obstacle.seconds));
  }

  // 3. Planar quadrotor heading sweep.
  const Runs sweep = run_bundled("planar_quad_obstacle");
  {
    double worst = std::numeric_limits<double>::infinity();
    bool in_range = true;
    for (const RunResult& run : sweep.results) {
      worst = std::min(worst, run.filtered.min_h0());
      const double heading = run.filtered.states.front()[2];
      in_range = in_range && heading > 0.0 && heading < 3 * kPi / 4;
    }
    const int n = static_cast<int>(sweep.results.size());
    const bool pass = n >= 8 && in_range && worst > 0.0 && sweep.seconds < 30.0;
    report(3, pass,
           fmt("planar quadrotor sweep: %d headings in (0, 3pi/4) (>= 8), min h0 over runs %.4g "
               "(> 0), runtime %.2f s (< 30 s)",
               n, worst, sweep.seconds));
  }

  // 4. 3D quadrotor geofence.
  const Runs quad = run_bundled("quad3d_geofence");
  {
    const Trajectory& t = quad.results.at(0).filtered;
    const double x_max = column_max(t, 0);
    double ref_max = -std::numeric_limits<double>::infinity();
    if (quad.sc.reference) {
      for (double time : t.times) ref_max = std::max(ref_max, quad.sc.reference->position(time)[0]);
    }
    const bool pass = x_max <= 0.2 + kTolH && t.min_h() >= -kTolH && ref_max > 0.2 &&
                      quad.seconds < 30.0;
    report(4, pass,
           fmt("3D geofence: max x %.5f m (<= 0.201), min h %.4g (>= -1e-3), reference max x %.3f "
               "(> 0.2), runtime %.2f s (< 30 s)",
               x_max, t.min_h(), ref_max, quad.seconds));
  }

  // 5. Tracking-error lemma.
  {
    Timer timer;
    const LemmaReport two = lemma_bound_sampler(2, 100000, 20240601);
    const LemmaReport three = lemma_bound_sampler(3, 100000, 20240602);
    const bool pass = two.pass() && three.pass() && two.samples == 100000 && three.samples == 100000;
    report(5, pass,
           fmt("lemma V >= |e|^2/2: 2D %d + %d violations, 3D %d + %d violations over 1e5 samples "
               "each (bound tol 1e-12, |e| = |k~||sin| tol 1e-9), min margin %.3g / %.3g, "
               "runtime %.2f s",
               two.bound_violations, two.angle_violations, three.bound_violations,
               three.angle_violations, two.min_bound_margin, three.min_bound_margin,
               timer.seconds()));
  }

  // 6. Discrete invariance audit on every run, plus the mutation check.
  {
    Timer timer;
    int runs = 0;
    int failed = 0;
    double worst = std::numeric_limits<double>::infinity();
    for (const Runs* r : {&ellipse, &obstacle, &sweep, &quad}) {
      for (const RunResult& run : r->results) {
        const AuditReport a = audit_trajectory(run.filtered, r->sc.drd->params().gamma, kAuditTol);
        ++runs;
        if (!a.pass) ++failed;
        worst = std::min(worst, a.min_margin);
      }
    }
    RunOptions mutated;
    mutated.filter_gamma_scale = 2.0;
    const Trajectory bad = simulate(obstacle.sc, obstacle.sc.initial_states.front(), mutated);
    const AuditReport m = audit_trajectory(bad, obstacle.sc.drd->params().gamma, kAuditTol);
    const bool pass = failed == 0 && !m.pass;
    report(6, pass,
           fmt("audit dh/dt >= -gamma h: %d/%d runs pass at tol 1e-2 (worst margin %.4g); "
               "gamma x2 inside the filter fails the audit (margin %.4g), runtime %.2f s",
               runs - failed, runs, worst, m.min_margin, timer.seconds()));
  }

  // 7. Closed-form QP against the grid oracle.
  {
    Timer timer;
    const QpEquivalenceReport q = qp_equivalence(1000, 20240603);
    report(7, q.pass && q.problems == 1000,
           fmt("QP equivalence: %d problems, %d oracle mismatches, %d residual violations "
               "(min residual %.3g >= -1e-10), max distance %.4f, runtime %.2f s",
               q.problems, q.mismatches, q.residual_violations, q.min_residual, q.max_distance,
               timer.seconds()));
  }

  // 8. Analytic gradients against central differences.
  {
    Timer timer;
    int suites = 0;
    int failed = 0;
    double worst = 0.0;
    std::string failing;
    for (const Runs* r : {&ellipse, &obstacle, &sweep, &quad}) {
      for (const char* target : {"h0", "V", "drd_h"}) {
        VerifySuite s;
        s.kind = "grad_check";
        s.target = target;
        s.samples = 1000;
        s.tol = 1e-4;
        const SuiteResult res = run_suite(r->sc, s);
        ++suites;
        worst = std::max(worst, json::parse(res.json).at("max_rel_error").get<double>());
        if (!res.pass) {
          ++failed;
          failing += " " + r->sc.name + ":" + target;
        }
      }
    }
    report(8, failed == 0,
           fmt("gradients: %d/%d functions pass at rel tol 1e-4 on 1e3 points each, worst rel "
               "error %.3g, runtime %.2f s%s",
               suites - failed, suites, worst, timer.seconds(), failing.c_str()));
  }

  // 9. Parameter gate.
  {
    std::ifstream in(bundled_scenario_path("unicycle_ellipse"));
    json cfg = json::parse(in);
    const auto& d = cfg.at("drd");
    const double threshold = d.at("gamma").get<double>() +
                             d.at("epsilon").get<double>() * d.at("mu").get<double>() /
                                 (4.0 * d.at("beta").get<double>());
    cfg["drd"]["lambda"] = 0.9 * threshold;
    std::string message;
    bool rejected = false;
    try {
      parse_scenario(cfg.dump());
    } catch (const ConfigError& e) {
      rejected = true;
      message = e.what();
    }
    const bool names = message.find("λ ≥ γ + εμ/(4β)") != std::string::npos;
    cfg["drd"]["lambda"] = threshold;
    bool boundary_ok = true;
    try {
      parse_scenario(cfg.dump());
    } catch (const ConfigError&) {
      boundary_ok = false;
    }
    report(9, rejected && names && boundary_ok,
           fmt("parameter gate: lambda = 0.9 x threshold %s with a message naming "
               "λ ≥ γ + εμ/(4β) (%s); lambda = threshold %s",
               rejected ? "rejected" : "accepted", names ? "yes" : "no",
               boundary_ok ? "accepted" : "rejected"));
  }

  // 10. Byte-identical CSV on repeated runs.
  {
    Timer timer;
    int compared = 0;
    int differing = 0;
    auto compare = [&](const Scenario& sc, const Vec& x0, const Trajectory& first) {
      ++compared;
      if (csv_bytes(simulate(sc, x0)) != csv_bytes(first)) ++differing;
    };
    compare(ellipse.sc, ellipse.sc.initial_states.front(), ellipse.results.front().filtered);
    compare(obstacle.sc, obstacle.sc.initial_states.front(), obstacle.results.front().filtered);
    compare(quad.sc, quad.sc.initial_states.front(), quad.results.front().filtered);
    // Sweep runs executed concurrently must match serial reruns.
    compare(sweep.sc, sweep.sc.initial_states.front(), sweep.results.front().filtered);
    compare(sweep.sc, sweep.sc.initial_states.back(), sweep.results.back().filtered);
    report(10, differing == 0,
           fmt("determinism: %d/%d reruns byte-identical (including 2 concurrent sweep runs vs "
               "serial reruns), runtime %.2f s",
               compared - differing, compared, timer.seconds()));
  }

  std::printf("acceptance: %d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
