#pragma once

// Run configurations and the report bodies of the command-line experiments.
//
// A report body depends only on the configuration (never on the thread count,
// output directory or wall clock), so rerunning a stored config reproduces it
// byte for byte. Reports live in <out>/<command>-<config hash>/.

#include "curvlab/certificate.hpp"
#include "curvlab/io.hpp"
#include "curvlab/verify.hpp"

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace curvlab {

/// Thrown for invalid configurations; the CLI maps it to exit code 2.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct RunConfig {
  std::string command;
  int n = 4;
  std::size_t samples = 1000;
  std::uint64_t seed = 1;
  std::optional<double> tol;
  unsigned threads = 1;
  std::string out = "reports";
  // verify
  std::string suite;
  // sweep, schedule
  std::string stage = "first-family";
  std::vector<double> grid;
  // flow
  std::string init = "identity";
  double scale = 1.0;
  double horizon = 10.0;
  bool normalized = false;
  // search
  std::string cone = "3nonneg";
  std::size_t budget = 100000;
};

/// lo:hi:count with count ≥ 1 evenly spaced points including both ends.
inline std::vector<double> parse_grid(const std::string& spec) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
  try {
    if (parts.size() != 3) throw std::invalid_argument("");
    const double lo = std::stod(parts[0]);
    const double hi = std::stod(parts[1]);
    const int count = std::stoi(parts[2]);
    if (count < 1 || !(hi >= lo)) throw std::invalid_argument("");
    std::vector<double> out;
    for (int i = 0; i < count; ++i) out.push_back(i == count - 1 ? hi : lo + (hi - lo) * i / (count - 1));
    return out;
  } catch (const std::exception&) {
    throw ConfigError("grid '" + spec + "' must have the form lo:hi:count with lo <= hi and count >= 1");
  }
}

/// Default parameter grid of a stage: ten points up to its upper end.
inline std::vector<double> default_grid(Stage stage, int n) {
  std::vector<double> g;
  for (const auto& sp : family_grid(stage, n, 10)) g.push_back(sp.parameter);
  return g;
}

/// The canonical configuration: only fields the command reads, so the hash
/// ignores irrelevant flags as well as threads and output location.
inline json config_body(const RunConfig& c) {
  json j{{"command", c.command}, {"n", c.n}, {"seed", c.seed}};
  if (c.tol) j["tol"] = *c.tol;
  if (c.command == "verify") {
    j["suite"] = c.suite;
    j["samples"] = c.samples;
  } else if (c.command == "sweep") {
    j["stage"] = c.stage;
    j["grid"] = c.grid;
    j["samples"] = c.samples;
  } else if (c.command == "schedule") {
    j["stage"] = c.stage;
    j["grid"] = c.grid;
  } else if (c.command == "flow") {
    j["init"] = c.init;
    j["scale"] = c.scale;
    j["horizon"] = c.horizon;
    j["normalized"] = c.normalized;
  } else if (c.command == "search") {
    j["cone"] = c.cone;
    j["budget"] = c.budget;
  }
  return j;
}

/// Fields present in `j` override the configuration.
inline void apply_config(RunConfig& c, const json& j) {
  try {
    if (j.contains("command") && !c.command.empty() && j["command"].get<std::string>() != c.command)
      throw ConfigError("config file is for command '" + j["command"].get<std::string>() + "', not '" + c.command + "'");
    if (j.contains("command")) c.command = j["command"].get<std::string>();
    if (j.contains("n")) c.n = j["n"].get<int>();
    if (j.contains("samples")) c.samples = j["samples"].get<std::size_t>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("tol")) c.tol = j["tol"].get<double>();
    if (j.contains("threads")) c.threads = j["threads"].get<unsigned>();
    if (j.contains("out")) c.out = j["out"].get<std::string>();
    if (j.contains("suite")) c.suite = j["suite"].get<std::string>();
    if (j.contains("stage")) c.stage = j["stage"].get<std::string>();
    if (j.contains("grid")) c.grid = j["grid"].get<std::vector<double>>();
    if (j.contains("init")) c.init = j["init"].get<std::string>();
    if (j.contains("scale")) c.scale = j["scale"].get<double>();
    if (j.contains("horizon")) c.horizon = j["horizon"].get<double>();
    if (j.contains("normalized")) c.normalized = j["normalized"].get<bool>();
    if (j.contains("cone")) c.cone = j["cone"].get<std::string>();
    if (j.contains("budget")) c.budget = j["budget"].get<std::size_t>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
}

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string config_hash(const RunConfig& c) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(config_body(c).dump())));
  return buf;
}

inline void validate(const RunConfig& c) {
  if (c.n < 3) throw ConfigError("n must be at least 3, got " + std::to_string(c.n));
  if (c.tol && !(*c.tol > 0.0)) throw ConfigError("tol must be positive");
  if (c.threads == 0) throw ConfigError("threads must be at least 1");
}

struct RunOutcome {
  json body;
  int exit_code = 0;
  std::string summary;
  std::vector<std::pair<std::string, std::string>> files;   // extra artifacts: name, content
};

// ---------------------------------------------------------------------------
// Commands

inline RunOutcome run_verify(const RunConfig& c) {
  validate(c);
  const auto& names = suite_names();
  if (std::find(names.begin(), names.end(), c.suite) == names.end())
    throw ConfigError("unknown suite '" + c.suite + "'");
  if (c.samples == 0) throw ConfigError("samples must be positive");
  SuiteOptions o{c.n, c.samples, c.seed, c.tol, c.threads};
  const SuiteReport r = run_suite(c.suite, o);
  json assertions = json::array();
  double worst = 0.0;
  for (const auto& a : r.assertions) {
    assertions.push_back({{"name", a.name},
                          {"max_residual", number(a.max_residual)},
                          {"tolerance", a.tolerance},
                          {"cases", a.cases},
                          {"passed", a.passed()}});
    worst = std::max(worst, a.max_residual / a.tolerance);
  }
  RunOutcome out;
  out.body = {{"command", "verify"}, {"config", config_body(c)}, {"suite", r.suite}, {"certifies", r.certifies},
              {"n", r.n},           {"samples", r.samples},      {"seed", r.seed},   {"assertions", assertions},
              {"passed", r.passed()}};
  out.exit_code = r.passed() ? 0 : 1;
  char buf[160];
  std::snprintf(buf, sizeof buf, "verify %s n=%d: %s (worst residual/tolerance %.3g)", c.suite.c_str(), c.n,
                r.passed() ? "PASS" : "FAIL", worst);
  out.summary = buf;
  return out;
}

inline json to_json(const CertificateReport& r) {
  json checks = json::array();
  for (const auto& ch : r.checks) {
    json j{{"name", ch.name},
           {"kind", to_string(ch.kind)},
           {"evaluated", ch.evaluated},
           {"passed", ch.passed}};
    if (ch.kind == CheckKind::Identity) {
      j["residual"] = number(ch.residual);
    } else {
      j["min_slack"] = number(ch.min_slack);
      j["min_slack_nondegenerate"] = number(ch.min_slack_nondegenerate);
      j["strict"] = ch.strict;
    }
    if (!ch.argmin_spectrum.empty()) j["argmin_spectrum"] = to_json(ch.argmin_spectrum);
    checks.push_back(j);
  }
  return {{"stage", to_string(r.params.stage)},
          {"n", r.params.n},
          {"params",
           {{"parameter", r.params.parameter}, {"a", r.params.transform.a}, {"b", r.params.transform.b},
            {"p", r.params.p}}},
          {"samples", r.samples},
          {"seed", r.seed},
          {"min_slack", number(r.min_slack)},
          {"min_slack_nondegenerate", number(r.min_slack_nondegenerate)},
          {"argmin_spectrum", to_json(r.argmin_spectrum)},
          {"checks", checks},
          {"failures", r.failures},
          {"passed", r.passed()}};
}

inline Stage stage_of(const RunConfig& c) {
  try {
    return parse_stage(c.stage);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

inline RunOutcome run_sweep(RunConfig c) {
  validate(c);
  const Stage stage = stage_of(c);
  if (c.grid.empty()) c.grid = default_grid(stage, c.n);
  if (c.samples == 0) throw ConfigError("samples must be positive");
  json points = json::array();
  bool all = true;
  double min_slack = std::numeric_limits<double>::infinity();
  for (double x : c.grid) {
    try {
      schedule(stage, c.n, x);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  for (double x : c.grid) {
    const auto r = positivity_certificate(stage, c.n, x, c.samples, c.seed, c.threads);
    all = all && r.passed();
    min_slack = std::min(min_slack, r.min_slack);
    points.push_back(to_json(r));
  }
  RunOutcome out;
  out.body = {{"command", "sweep"}, {"config", config_body(c)}, {"stage", to_string(stage)},
              {"n", c.n},           {"points", points},         {"min_slack", number(min_slack)},
              {"passed", all}};
  out.exit_code = all ? 0 : 1;
  char buf[160];
  std::snprintf(buf, sizeof buf, "sweep %s n=%d: %zu grid points, min slack %.6g, %s", to_string(stage), c.n,
                c.grid.size(), min_slack, all ? "PASS" : "FAIL");
  out.summary = buf;
  return out;
}

inline RunOutcome run_schedule(RunConfig c) {
  validate(c);
  const Stage stage = stage_of(c);
  if (c.grid.empty()) c.grid = default_grid(stage, c.n);
  json rows = json::array();
  std::ostringstream table;
  table << "parameter,a,b,p\n";
  for (double x : c.grid) {
    StageParams sp;
    try {
      sp = schedule(stage, c.n, x);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    rows.push_back({{"parameter", x}, {"a", sp.transform.a}, {"b", sp.transform.b}, {"p", sp.p}});
    table << format_double(x) << ',' << format_double(sp.transform.a) << ',' << format_double(sp.transform.b) << ','
          << format_double(sp.p) << '\n';
  }
  RunOutcome out;
  out.body = {{"command", "schedule"}, {"config", config_body(c)}, {"stage", to_string(stage)}, {"n", c.n},
              {"b_max", prop_stage_b_max(c.n)}, {"rows", rows}};
  out.summary = table.str();
  out.files.push_back({"schedule.csv", table.str()});
  return out;
}

/// Nested ladder used to label pinching progress: PropStage images of the
/// 2-nonnegative cone up to b_max, then the extension family.
inline std::vector<StageParams> pinching_ladder(int n) {
  auto ladder = family_grid(Stage::PropStage, n, 10);
  for (int i = 0; i <= 10; ++i) ladder.push_back(schedule(Stage::TwoPositiveExtension, n, 0.05 * i));
  for (double s : {0.25, 0.5, 1.0, 2.0, 4.0}) ladder.push_back(schedule(Stage::TwoPositiveExtension, n, 0.5 + s));
  return ladder;
}

inline std::string ladder_label(const StageParams& sp) {
  return std::string(to_string(sp.stage)) + ":" + format_double(sp.parameter);
}

inline CurvOp initial_state(const RunConfig& c) {
  const auto alg = so_algebra(c.n);
  if (!(c.scale > 0.0) || !std::isfinite(c.scale)) throw ConfigError("scale must be positive");
  if (c.init == "identity") return c.scale * CurvOp::identity(alg);
  if (c.init == "projector") return c.scale * rank_one_projector(0, 1, alg);
  CounterRng rng(c.seed, 0);
  if (c.init == "random") {
    const CurvOp R = random_curvature_operator(alg, rng);
    return (c.scale / R.norm()) * R;
  }
  if (c.init == "two-positive") {
    const CurvOp R = sample_interior(ConeDescriptor::two_nonneg(), alg, rng);
    return (c.scale / R.norm()) * R;
  }
  throw ConfigError("unknown init '" + c.init + "' (identity, projector, random, two-positive)");
}

inline RunOutcome run_flow(const RunConfig& c) {
  validate(c);
  if (!(c.horizon > 0.0)) throw ConfigError("horizon must be positive");
  const CurvOp R0 = initial_state(c);
  FlowOptions o;
  o.horizon = c.horizon;
  o.normalized = c.normalized;
  o.watch = {ConeDescriptor::nonneg(), ConeDescriptor::two_nonneg()};
  const Trajectory traj = integrate(R0, o, c.seed);

  const auto ladder = pinching_ladder(c.n);
  const auto pr = pinching_report(traj, ladder);
  std::vector<std::string> labels;
  for (int k : pr.stage_index) labels.push_back(k < 0 ? "-" : ladder_label(ladder[static_cast<std::size_t>(k)]));
  std::ostringstream csv;
  write_trajectory_csv(csv, traj, labels);

  RunOutcome out;
  out.body = {{"command", "flow"},
              {"config", config_body(c)},
              {"initial_state", to_json(R0)},
              {"trajectory", trajectory_manifest(traj)},
              {"final_state", to_json(traj.final_state())},
              {"energy_monotonicity_defect", number(energy_monotonicity_defect(traj))},
              {"pinching_monotone", pr.monotone},
              {"final_pinching_stage", labels.empty() ? "-" : labels.back()}};
  char buf[200];
  if (c.init == "identity" && !c.normalized) {
    const double expected = 1.0 / ((c.n - 1) * c.scale);
    out.body["expected_blowup_time"] = expected;
    std::snprintf(buf, sizeof buf, "flow n=%d: %s at t=%.12g (identity ray blows up at %.12g)", c.n,
                  to_string(traj.termination), traj.final_time, expected);
  } else {
    std::snprintf(buf, sizeof buf, "flow n=%d: %s at t=%.12g, final pinching stage %s", c.n,
                  to_string(traj.termination), traj.final_time, labels.empty() ? "-" : labels.back().c_str());
  }
  out.summary = buf;
  out.files.push_back({"trajectory.csv", csv.str()});
  return out;
}

inline ConeDescriptor parse_cone(const std::string& s) {
  if (s == "nonneg") return ConeDescriptor::nonneg();
  if (s == "2nonneg") return ConeDescriptor::two_nonneg();
  if (s == "3nonneg") return ConeDescriptor::three_nonneg();
  throw ConfigError("unknown cone '" + s + "' (nonneg, 2nonneg, 3nonneg)");
}

inline json to_json(const SearchResult& r) {
  json j{{"found", r.found},
         {"margin", number(r.margin)},
         {"normalized_margin", number(r.normalized_margin)},
         {"threshold", kWitnessThreshold},
         {"seed", r.seed},
         {"budget", r.budget},
         {"evaluations", r.evaluations},
         {"random_phase_best", number(r.random_phase_best)},
         {"descent_improvements", r.descent_improvements}};
  if (r.witness) {
    j["witness"] = to_json(*r.witness);
    j["witness_eigenvalues"] = to_json(eigenvalues(*r.witness));
    j["witness_field_norm"] = ode_field(*r.witness).norm();
  }
  return j;
}

inline RunOutcome run_search(const RunConfig& c) {
  validate(c);
  const ConeDescriptor cone = parse_cone(c.cone);
  if (c.cone == "3nonneg" && c.n < 4) throw ConfigError("the 3-nonnegative cone needs n >= 4");
  if (c.budget < 2) throw ConfigError("budget must be at least 2");
  const SearchResult r = counterexample_search(cone, c.n, c.budget, c.seed, c.threads);
  RunOutcome out;
  out.body = {{"command", "search"}, {"config", config_body(c)}, {"cone", cone.name()}, {"n", c.n},
              {"result", to_json(r)}};
  char buf[200];
  std::snprintf(buf, sizeof buf, "search %s n=%d: found=%s margin=%.6g (normalized %.6g)", cone.name().c_str(), c.n,
                r.found ? "true" : "false", r.margin, r.normalized_margin);
  out.summary = buf;
  if (r.witness) out.files.push_back({"witness.csv", to_csv_line(*r.witness) + "\n"});
  return out;
}

inline RunOutcome run_command(const RunConfig& c) {
  if (c.command == "verify") return run_verify(c);
  if (c.command == "sweep") return run_sweep(c);
  if (c.command == "schedule") return run_schedule(c);
  if (c.command == "flow") return run_flow(c);
  if (c.command == "search") return run_search(c);
  throw ConfigError("unknown command '" + c.command + "'");
}

inline std::string report_text(const json& body) { return body.dump(2) + "\n"; }

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

/// Writes config.json, report.json and artifacts into <out>/<command>-<hash>/
/// and a fresh run-<timestamp>.json with the non-reproducible metadata.
inline std::filesystem::path write_outputs(const RunConfig& c, const RunOutcome& o, double elapsed_seconds) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::path(c.out) / (c.command + "-" + config_hash(c));
  fs::create_directories(dir);
  auto write = [&](const fs::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    f << text;
  };
  write(dir / "config.json", config_body(c).dump(2) + "\n");
  write(dir / "report.json", report_text(o.body));
  for (const auto& [name, text] : o.files) write(dir / name, text);
  const std::string stamp = utc_timestamp();
  fs::path meta = dir / ("run-" + stamp + ".json");
  for (int k = 1; fs::exists(meta); ++k) meta = dir / ("run-" + stamp + "-" + std::to_string(k) + ".json");
  write(meta, json{{"timestamp", stamp},
                   {"threads", c.threads},
                   {"elapsed_seconds", elapsed_seconds},
                   {"exit_code", o.exit_code}}
                  .dump(2) +
                  "\n");
  return dir;
}

}  // namespace curvlab
