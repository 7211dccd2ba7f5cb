#include "drdcbf/cli.hpp"

#include "drdcbf/output_chain.hpp"
#include "drdcbf/plot.hpp"
#include "drdcbf/scenario.hpp"
#include "drdcbf/verify.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace drdcbf {

namespace {

namespace fs = std::filesystem;

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<double> dt;
  std::optional<double> horizon;

  ScenarioOverrides overrides() const { return {seed, dt, horizon}; }
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config, "scenario JSON file")->required();
  cmd->add_option("--seed", flags.seed, "override the config seed");
  cmd->add_option("--dt", flags.dt, "override the integration step");
  cmd->add_option("--horizon", flags.horizon, "override the simulated horizon");
}

void write_text(const fs::path& path, const std::string& body) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path.string());
  f << body;
}

int simulate(const CommonFlags& flags, const std::string& out_dir, bool require_sweep,
             std::ostream& out) {
  const Scenario sc = load_scenario(flags.config, flags.overrides());
  if (require_sweep && !sc.is_sweep) {
    throw ConfigError("sweep: config '" + flags.config + "' has no 'sweep' block");
  }
  fs::create_directories(out_dir);
  const auto runs = run_scenario(sc);
  bool ok = true;
  for (const RunResult& run : runs) {
    const fs::path base = fs::path(out_dir) / run.label;
    write_csv(run.filtered, base.string() + ".csv");
    write_text(base.string() + ".json", summary_json(sc, run));
    if (run.unfiltered) write_csv(*run.unfiltered, base.string() + "_unfiltered.csv");
    out << run.label << ": min h " << run.monitor.min_h << ", min h0 " << run.monitor.min_h0
        << ", infeasible " << run.monitor.infeasible << (run.monitor.pass ? "  ok" : "  FAIL")
        << '\n';
    if (run.unfiltered) out << "  unfiltered min h0 " << run.unfiltered->min_h0() << '\n';
    if (!run.monitor.pass) out << "  " << run.monitor.message << '\n';
    ok = ok && run.monitor.pass;
  }
  return ok ? kExitOk : kExitFailure;
}

int verify(const CommonFlags& flags, const std::string& report_path, std::ostream& out) {
  const Scenario sc = load_scenario(flags.config, flags.overrides());
  const VerifyReport report = run_verify(sc);
  for (const SuiteResult& s : report.suites) {
    out << (s.pass ? "PASS " : "FAIL ") << s.summary << '\n';
  }
  if (report_path.empty()) {
    out << report.to_json() << '\n';
  } else {
    write_text(report_path, report.to_json());
  }
  return report.pass ? kExitOk : kExitFailure;
}

// Zero level set of the first-order barrier under h0, on the plot plane.
PlaneField boundary_of(const Scenario& sc, const Trajectory& ref, const PlotOptions& opts) {
  BarrierPtr h0 = sc.certificate.h0;
  const Barrier* base = h0.get();
  if (const auto* hocbf = dynamic_cast<const HocbfBarrier*>(base)) base = &hocbf->base();
  if (const auto* back = dynamic_cast<const BackstepBarrier*>(base)) base = &back->base();
  const int p = sc.system->output_dim();
  if (base->dim() != p) return {};
  int xi = -1;
  int yi = -1;
  for (int i = 0; i < p; ++i) {
    if (ref.state_names[static_cast<std::size_t>(i)] == opts.x_column) xi = i;
    if (ref.state_names[static_cast<std::size_t>(i)] == opts.y_column) yi = i;
  }
  if (xi < 0 || yi < 0) return {};
  const Vec y0 = ref.states.front().head(p);
  return [h0, base, y0, xi, yi](double px, double py) {
    Vec y = y0;
    y[xi] = px;
    y[yi] = py;
    return base->value(y);
  };
}

int plot(const std::vector<std::string>& csvs, const std::string& out_prefix,
         const std::string& config, std::ostream& out) {
  std::vector<Trajectory> runs;
  for (const std::string& path : csvs) runs.push_back(read_csv_file(path));
  if (runs.empty()) throw ConfigError("plot: no CSV files given");
  PlotOptions opts;
  const auto& names = runs.front().state_names;
  const bool has_z = std::find(names.begin(), names.end(), "z") != names.end();
  opts.y_column = has_z ? "z" : "y";
  if (!config.empty()) {
    const Scenario sc = load_scenario(config);
    opts.title = sc.name;
    if (runs.front().size() > 0) opts.boundary = boundary_of(sc, runs.front(), opts);
  }
  const PlotFiles files = write_plots(runs, out_prefix, opts);
  out << "wrote " << files.path_svg << " and " << files.cert_svg << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dual relative degree CBF simulator and verifier", "drdcbf"};
  app.require_subcommand(1);

  CommonFlags sim_flags;
  std::string sim_out = "out";
  CLI::App* sim = app.add_subcommand("simulate", "run a scenario and write CSV + JSON per run");
  add_common(sim, sim_flags);
  sim->add_option("--out", sim_out, "output directory");

  CommonFlags sweep_flags;
  std::string sweep_out = "out";
  CLI::App* sweep = app.add_subcommand("sweep", "run every initial state of a sweep scenario");
  add_common(sweep, sweep_flags);
  sweep->add_option("--out", sweep_out, "output directory");

  CommonFlags verify_flags;
  std::string verify_out;
  CLI::App* ver = app.add_subcommand("verify", "run the verification suites of a scenario");
  add_common(ver, verify_flags);
  ver->add_option("--out", verify_out, "JSON report path (default: stdout)");

  std::vector<std::string> plot_csvs;
  std::string plot_out = "plot";
  std::string plot_config;
  CLI::App* plt = app.add_subcommand("plot", "render path and certificate SVGs from CSV files");
  plt->add_option("csv", plot_csvs, "trajectory CSV files")->required();
  plt->add_option("--out", plot_out, "output prefix: <out>_path.svg, <out>_cert.svg");
  plt->add_option("--config", plot_config, "scenario JSON for the safe set overlay");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*sim) return simulate(sim_flags, sim_out, false, out);
    if (*sweep) return simulate(sweep_flags, sweep_out, true, out);
    if (*ver) return verify(verify_flags, verify_out, out);
    if (*plt) return plot(plot_csvs, plot_out, plot_config, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const SimulationError& e) {
    err << "simulation failed at t = " << e.time() << ": " << e.what() << '\n';
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitConfig;
}

}  // namespace drdcbf
