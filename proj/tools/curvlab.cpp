// curvlab: command-line front end for the identity suites, certificate sweeps,
// flow runs and counterexample searches.

#include "curvlab/report.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>

namespace {

struct Flags {
  curvlab::RunConfig cfg;
  double tol = 0.0;
  std::string grid;
  std::string config_file;
};

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--n", f.cfg.n, "dimension n of the underlying Euclidean space");
  sub->add_option("--seed", f.cfg.seed, "RNG seed");
  sub->add_option("--tol", f.tol, "tolerance override (positive)");
  sub->add_option("--out", f.cfg.out, "output directory");
  sub->add_option("--config", f.config_file, "JSON run configuration; its fields override flags");
  sub->add_option("--threads", f.cfg.threads, "worker threads");
}

}  // namespace

int main(int argc, char** argv) {
  using namespace curvlab;
  CLI::App app{"curvlab: curvature operator algebra, invariant cones and the ODE dR/dt = R^2 + R#"};
  app.require_subcommand(1);
  Flags f;

  auto* verify = app.add_subcommand("verify", "run an identity suite");
  verify->add_option("suite", f.cfg.suite, "basis | sharp | lemma-sharp-identity | ricci-type | thm2 | "
                                           "corollary-spectra | gradient | tri-symmetry");
  verify->add_option("--samples", f.cfg.samples, "random cases");
  add_common(verify, f);

  auto* sweep = app.add_subcommand("sweep", "Monte-Carlo positivity certificates over a stage grid");
  sweep->add_option("--stage", f.cfg.stage, "prop | first-family | second-family | two-positive-extension");
  sweep->add_option("--b-grid,--grid", f.grid, "parameter grid lo:hi:count");
  sweep->add_option("--samples", f.cfg.samples, "spectra per grid point");
  add_common(sweep, f);

  auto* flow = app.add_subcommand("flow", "integrate dR/dt = R^2 + R#");
  flow->add_option("--init", f.cfg.init, "identity | projector | random | two-positive");
  flow->add_option("--scale", f.cfg.scale, "norm scale of the initial state");
  flow->add_option("--horizon", f.cfg.horizon, "final time");
  flow->add_flag("--normalized", f.cfg.normalized, "integrate the flow projected to the unit sphere");
  add_common(flow, f);

  auto* search = app.add_subcommand("search", "search boundary points where the field leaves a cone");
  search->add_option("--cone", f.cfg.cone, "nonneg | 2nonneg | 3nonneg");
  search->add_option("--budget", f.cfg.budget, "margin evaluations");
  add_common(search, f);

  auto* sched = app.add_subcommand("schedule", "print (a, b, p) along a stage");
  sched->add_option("--stage", f.cfg.stage, "prop | first-family | second-family | two-positive-extension");
  sched->add_option("--b-grid,--grid", f.grid, "parameter grid lo:hi:count");
  add_common(sched, f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    f.cfg.command = app.get_subcommands().front()->get_name();
    if (f.tol != 0.0) f.cfg.tol = f.tol;
    if (!f.grid.empty()) f.cfg.grid = parse_grid(f.grid);
    if (!f.config_file.empty()) {
      std::ifstream in(f.config_file);
      if (!in) throw ConfigError("cannot read config file " + f.config_file);
      json j;
      try {
        j = json::parse(in);
      } catch (const json::exception& e) {
        throw ConfigError(std::string("config file is not valid JSON: ") + e.what());
      }
      apply_config(f.cfg, j);
    }
    if (f.cfg.command == "verify" && f.cfg.suite.empty()) throw ConfigError("verify needs a suite name");

    const auto t0 = std::chrono::steady_clock::now();
    const RunOutcome o = run_command(f.cfg);
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const auto dir = write_outputs(f.cfg, o, elapsed);
    std::cout << o.summary << (o.summary.empty() || o.summary.back() == '\n' ? "" : "\n");
    std::cout << "report: " << (dir / "report.json").string() << "\n";
    return o.exit_code;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
