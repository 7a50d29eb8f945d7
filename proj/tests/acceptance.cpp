// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "curvlab/report.hpp"

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

using namespace curvlab;

namespace {

struct Criterion {
  bool ok = true;
  std::vector<std::string> notes;

  void require(bool cond, const std::string& what) {
    if (!cond) ok = false;
    if (!cond || notes.size() < 200) notes.push_back((cond ? "  ok   " : "  FAIL ") + what);
  }
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

void suite_check(Criterion& c, const std::string& suite, int n, std::size_t samples, std::uint64_t seed,
                 const std::vector<std::pair<std::string, double>>& pinned) {
  SuiteOptions o;
  o.n = n;
  o.samples = samples;
  o.seed = seed;
  const auto rep = run_suite(suite, o);
  for (const auto& [name, tol] : pinned) {
    bool found = false;
    for (const auto& a : rep.assertions) {
      if (a.name != name) continue;
      found = true;
      c.require(a.max_residual <= tol, suite + "/" + name + " n=" + std::to_string(n) + " max " +
                                            fmt("%.3e", a.max_residual) + " <= " + fmt("%.0e", tol));
    }
    if (!found) c.require(false, suite + "/" + name + " missing from report");
  }
}

double rel(const CurvOp& a, const CurvOp& b) { return (a - b).norm() / std::max({a.norm(), b.norm(), 1e-300}); }

Criterion dab_suite() {
  Criterion c;
  for (int n = 3; n <= 6; ++n) suite_check(c, "thm2", n, 1000, 101, {{"definition-vs-closed-form", 1e-9}});
  for (int n = 4; n <= 6; ++n) suite_check(c, "thm2", n, 1000, 101, {{"weyl-independence", 1e-10}});
  return c;
}

Criterion identity_suite() {
  Criterion c;
  for (int n = 3; n <= 6; ++n) {
    suite_check(c, "tri-symmetry", n, 200, 201, {{"permutation-symmetry", 1e-10}});
    suite_check(c, "gradient", n, 200, 202, {{"central-difference", 1e-6}});
    suite_check(c, "sharp", n, 200, 203,
                {{"ricci-of-field", 1e-10}, {"symmetry", 1e-9}, {"equivariance", 1e-9}});
  }
  return c;
}

Criterion lemma_suite() {
  Criterion c;
  for (int n = 3; n <= 6; ++n) {
    SuiteOptions o;
    o.n = n;
    o.samples = 200;
    o.seed = 301;
    for (const auto& a : run_suite("lemma-sharp-identity", o).assertions)
      c.require(a.max_residual <= 1e-10, "lemma-sharp-identity/" + a.name + " n=" + std::to_string(n) + " max " +
                                             fmt("%.3e", a.max_residual));
    for (const auto& a : run_suite("ricci-type", o).assertions)
      c.require(a.max_residual <= 1e-10,
                "ricci-type/" + a.name + " n=" + std::to_string(n) + " max " + fmt("%.3e", a.max_residual));
    o.samples = 100;
    for (const auto& a : run_suite("corollary-spectra", o).assertions)
      c.require(a.max_residual <= 1e-10, "corollary-spectra/" + a.name + " n=" + std::to_string(n) + " max " +
                                             fmt("%.3e", a.max_residual));
  }
  return c;
}

Criterion schedule_suite() {
  Criterion c;
  for (int n = 3; n <= 6; ++n) {
    const std::string tag = " n=" + std::to_string(n);
    double worst_p = 0.0;
    for (int i = 0; i <= 100; ++i) {
      const auto sp = schedule(Stage::FirstFamily, n, 0.005 * i);
      const double b = sp.transform.b;
      const double p = sp.p;
      worst_p = std::max(worst_p, std::abs(p * p + (n - 2) * b * b * (1 - p) * (1 - p) - p));
    }
    c.require(worst_p <= 1e-12, "p^2 + (n-2)b^2(1-p)^2 = p" + tag + " max " + fmt("%.3e", worst_p));
    const double bm = prop_stage_b_max(n);
    const double r = std::abs((n - 2) * bm * bm - (2.0 / n) * (1 - 2 * bm));
    c.require(r <= 1e-12, "(n-2)b_max^2 = (2/n)(1-2b_max)" + tag + " residual " + fmt("%.3e", r));
    const auto f = schedule(Stage::FirstFamily, n, 0.5);
    const auto s = schedule(Stage::SecondFamily, n, 0.0);
    const double j = std::max({std::abs(f.transform.a - s.transform.a), std::abs(f.transform.b - s.transform.b),
                               std::abs(f.p - s.p)});
    c.require(j <= 1e-14, "junction first(1/2) = second(0)" + tag + " residual " + fmt("%.3e", j));

    for (Stage st : {Stage::PropStage, Stage::FirstFamily, Stage::SecondFamily}) {
      double worst = std::numeric_limits<double>::infinity();
      double worst_nd = std::numeric_limits<double>::infinity();
      bool all = true;
      std::string failed;
      for (const auto& sp : family_grid(st, n, 10)) {
        const auto rep = positivity_certificate(st, n, sp.parameter, 10000, 401);
        worst = std::min(worst, rep.min_slack);
        worst_nd = std::min(worst_nd, rep.min_slack_nondegenerate);
        if (!rep.passed()) {
          all = false;
          failed += " " + format_double(sp.parameter) + "(" + rep.failures.front() + ")";
        }
      }
      c.require(all && worst >= 0.0, std::string("certificate ") + to_string(st) + tag + " min slack " +
                                         fmt("%.4g", worst) + ", away from sigma=0 " + fmt("%.4g", worst_nd) + failed);
    }
  }
  return c;
}

Criterion flow_suite() {
  Criterion c;
  for (int n = 3; n <= 6; ++n) {
    const auto alg = so_algebra(n);
    for (double c0 : {0.25, 1.0, 3.0}) {
      FlowOptions o;
      o.horizon = 10.0 / c0;
      const auto traj = integrate(c0 * CurvOp::identity(alg), o);
      const double T = 1.0 / ((n - 1) * c0);
      const double err = std::abs(traj.final_time - T) / T;
      c.require(traj.termination == Termination::BlowUp && err <= 1e-4,
                "blow-up n=" + std::to_string(n) + " c0=" + format_double(c0) + " rel err " + fmt("%.3e", err));
    }
  }
  {
    double worst = 0.0;
    for (std::uint64_t k = 0; k < 100; ++k) {
      const int n = 3 + static_cast<int>(k % 4);
      CounterRng rng(501, k);
      const CurvOp R0 = random_curvature_operator(so_algebra(n), rng);
      FlowOptions o;
      o.horizon = 5.0;
      const auto traj = integrate((1.0 / R0.norm()) * R0, o, k);
      worst = std::max(worst, energy_monotonicity_defect(traj));
    }
    c.require(worst <= 1e-8, "P monotone over 100 raw trajectories, worst relative drop " + fmt("%.3e", worst));
  }
  {
    double worst = 0.0;
    for (int n = 3; n <= 6; ++n) {
      const auto alg = so_algebra(n);
      CounterRng rng(502, static_cast<std::uint64_t>(n));
      const CurvOp R0 = (1.0 / 3.0) * sample_interior(ConeDescriptor::two_nonneg(), alg, rng);
      for (double k : {0.5, 2.0, 7.0}) {
        FlowOptions o;
        o.horizon = 0.06;
        o.output_times = {0.015, 0.03, 0.06};
        FlowOptions ok = o;
        ok.horizon = o.horizon / k;
        ok.output_times.clear();
        for (double t : o.output_times) ok.output_times.push_back(t / k);
        const auto a = integrate(R0, o);
        const auto b = integrate(k * R0, ok);
        for (std::size_t i = 0; i < a.outputs.size() && i < b.outputs.size(); ++i)
          worst = std::max(worst, rel(b.outputs[i].R, k * a.outputs[i].R));
        if (a.outputs.size() != b.outputs.size()) worst = std::numeric_limits<double>::infinity();
      }
    }
    c.require(worst <= 1e-6, "scaling equivariance of trajectories, max " + fmt("%.3e", worst));
  }
  for (int n = 3; n <= 5; ++n) {
    const auto alg = so_algebra(n);
    const CurvOp I = CurvOp::identity(alg);
    const auto results = parallel_map(50, 1, [&](std::size_t k) {
      CounterRng rng(503, static_cast<std::uint64_t>(n) * 1000 + k);
      const CurvOp R0 = sample_interior(ConeDescriptor::two_nonneg(), alg, rng);
      FlowOptions o;
      o.horizon = 1e4;
      o.normalized = true;
      const auto traj = integrate(R0, o, k);
      const double d = (traj.final_state() - (1.0 / I.norm()) * I).norm();
      return traj.termination == Termination::ConvergedToIdentityRay && d <= 1e-3 ? d : -1.0;
    });
    std::size_t ok = 0;
    double worst = 0.0;
    for (double d : results)
      if (d >= 0.0) {
        ++ok;
        worst = std::max(worst, d);
      }
    c.require(ok == 50, "normalized flow n=" + std::to_string(n) + ": " + std::to_string(ok) +
                            "/50 converge, max distance " + fmt("%.3e", worst));
  }
  return c;
}

Criterion invariance_soak() {
  Criterion c;
  std::size_t total = 0;
  std::size_t exits = 0;
  for (int n = 3; n <= 5; ++n) {
    const auto alg = so_algebra(n);
    for (Stage st : {Stage::PropStage, Stage::FirstFamily, Stage::SecondFamily}) {
      const auto grid = family_grid(st, n, 6);
      std::size_t local = 0;
      std::size_t local_exits = 0;
      for (std::size_t g = 0; g < grid.size(); ++g) {
        const ConeDescriptor cone = family_cone(grid[g]);
        for (std::uint64_t k = 0; k < 10; ++k) {
          CounterRng rng(601, (static_cast<std::uint64_t>(n) << 32) ^ (static_cast<std::uint64_t>(st) << 16) ^
                                  (g << 8) ^ k);
          const CurvOp R0 = sample_interior(cone, alg, rng, 0.5, 0.999);
          FlowOptions o;
          o.horizon = 10.0;
          o.watch = {cone};
          const auto traj = integrate((1.0 / R0.norm()) * R0, o, k);
          ++local;
          for (const auto& e : traj.events)
            if (e.transition == Transition::Exit) ++local_exits;
        }
      }
      total += local;
      exits += local_exits;
      c.require(local_exits == 0, std::string(to_string(st)) + " n=" + std::to_string(n) + ": " +
                                      std::to_string(local) + " trajectories, " + std::to_string(local_exits) +
                                      " exits");
    }
  }
  c.require(total >= 500 && exits == 0,
            std::to_string(total) + " trajectories in total, " + std::to_string(exits) + " cone exits");
  return c;
}

Criterion witness_search() {
  Criterion c;
  const auto cone = ConeDescriptor::three_nonneg();
  const auto r = counterexample_search(cone, 4, 100000, 7);
  c.require(r.found && r.witness.has_value(),
            "3-nonnegative cone n=4 budget 1e5: normalized margin " + fmt("%.4e", r.normalized_margin));
  if (r.witness) {
    const double m = transversality_margin(*r.witness, cone);
    const double xn = ode_field(*r.witness).norm();
    c.require(membership(*r.witness, cone).region == Region::Boundary, "witness lies on the boundary");
    c.require(m < -1e-6 * xn, "margin " + fmt("%.4e", m) + " < -1e-6 |X| = " + fmt("%.4e", -1e-6 * xn));
    const auto again = counterexample_search(cone, 4, 100000, r.seed, 2);
    c.require(again.witness && again.witness->coeffs() == r.witness->coeffs() && again.margin == r.margin,
              "rerun from seed " + std::to_string(r.seed) + " with 2 threads reproduces the witness");
  }
  return c;
}

Criterion replay() {
  Criterion c;
  std::vector<RunConfig> configs;
  for (const auto& s : suite_names()) {
    RunConfig v;
    v.command = "verify";
    v.suite = s;
    v.n = 4;
    v.samples = 100;
    v.seed = 801;
    configs.push_back(v);
  }
  RunConfig sw;
  sw.command = "sweep";
  sw.stage = "second-family";
  sw.n = 5;
  sw.samples = 2000;
  configs.push_back(sw);
  RunConfig fl;
  fl.command = "flow";
  fl.init = "two-positive";
  fl.normalized = true;
  fl.horizon = 1e4;
  configs.push_back(fl);
  RunConfig se;
  se.command = "search";
  se.cone = "2nonneg";
  se.budget = 2000;
  configs.push_back(se);
  RunConfig sc;
  sc.command = "schedule";
  sc.stage = "prop";
  configs.push_back(sc);

  for (RunConfig cfg : configs) {
    const std::string first = report_text(run_command(cfg).body);
    const std::string again = report_text(run_command(cfg).body);
    RunConfig replayed;
    replayed.command = cfg.command;
    apply_config(replayed, json::parse(config_body(cfg).dump()));
    replayed.threads = 3;
    const std::string threaded = report_text(run_command(replayed).body);
    c.require(first == again && first == threaded,
              cfg.command + (cfg.command == "verify" ? " " + cfg.suite : std::string()) + " [" + config_hash(cfg) +
                  "] identical across reruns and 1/3 threads");
  }
  return c;
}

}  // namespace

int main() {
  struct Entry {
    const char* title;
    Criterion (*run)();
  };
  const Entry entries[] = {
      {"D_ab definition = closed form; Weyl independence", dab_suite},
      {"algebraic identities of the # product and P", identity_suite},
      {"lemma identities and Ricci-type spectra", lemma_suite},
      {"schedule identities and positivity certificates", schedule_suite},
      {"ODE flow: blow-up, monotone P, scaling, normalized convergence", flow_suite},
      {"invariance soak in the family cones", invariance_soak},
      {"non-invariance witness for the 3-nonnegative cone", witness_search},
      {"replay determinism of report bodies", replay},
  };
  bool all = true;
  int k = 0;
  for (const auto& e : entries) {
    ++k;
    const auto t0 = std::chrono::steady_clock::now();
    Criterion c;
    try {
      c = e.run();
    } catch (const std::exception& ex) {
      c.require(false, std::string("exception: ") + ex.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    for (const auto& line : c.notes) std::printf("%s\n", line.c_str());
    std::printf("criterion %d: %s  %s  (%.1f s)\n", k, c.ok ? "PASS" : "FAIL", e.title, secs);
    std::fflush(stdout);
    all = all && c.ok;
  }
  return all ? 0 : 1;
}
