#pragma once

// Serialization of curvature operators and trajectories.
//
// CurvOp JSON: {"n": n, "coeffs": [...]} with the lower triangle of the
// coefficient matrix in row-major order (N(N+1)/2 numbers). CSV line form:
// "n,c0,c1,..." with the same ordering.

#include "curvlab/flow.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <string>

namespace curvlab {

using json = nlohmann::json;

/// Finite values as numbers; ±inf and nan as strings, since JSON has no literal for them.
inline json number(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

inline double number_from(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("not a number: '" + s + "'");
    return v;
  }
  throw std::invalid_argument("expected a number");
}

inline json to_json(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

inline json to_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number(v(i)));
  return a;
}

inline json to_json(const CurvOp& R) {
  json coeffs = json::array();
  for (int i = 0; i < R.dim(); ++i)
    for (int j = 0; j <= i; ++j) coeffs.push_back(R.coeffs()(i, j));
  return {{"n", R.n()}, {"coeffs", coeffs}};
}

inline CurvOp curvop_from_coeffs(int n, const std::vector<double>& c, double tol = 1e-8) {
  if (n < 3) throw std::invalid_argument("curvature operators need n >= 3");
  const auto alg = so_algebra(n);
  const int N = alg->dim();
  if (static_cast<int>(c.size()) != N * (N + 1) / 2)
    throw std::invalid_argument("expected " + std::to_string(N * (N + 1) / 2) + " coefficients for n = " +
                                std::to_string(n) + ", got " + std::to_string(c.size()));
  Matrix M(N, N);
  std::size_t k = 0;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j <= i; ++j) M(i, j) = M(j, i) = c[k++];
  CurvOp R(alg, M);
  if (bianchi_residual(R) > scaled_tol(tol, R.norm()))
    throw std::invalid_argument("coefficients violate the first Bianchi identity");
  return R;
}

inline CurvOp curvop_from_json(const json& j) {
  std::vector<double> c;
  for (const auto& x : j.at("coeffs")) c.push_back(number_from(x));
  return curvop_from_coeffs(j.at("n").get<int>(), c);
}

inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string to_csv_line(const CurvOp& R) {
  std::string out = std::to_string(R.n());
  for (int i = 0; i < R.dim(); ++i)
    for (int j = 0; j <= i; ++j) out += "," + format_double(R.coeffs()(i, j));
  return out;
}

inline CurvOp curvop_from_csv_line(const std::string& line) {
  std::stringstream ss(line);
  std::string field;
  if (!std::getline(ss, field, ',')) throw std::invalid_argument("empty CSV line");
  const int n = std::stoi(field);
  std::vector<double> c;
  while (std::getline(ss, field, ',')) c.push_back(std::stod(field));
  return curvop_from_coeffs(n, c);
}

/// Trajectory rows: t, norm, λ̄, σ, smallest eigenvalue, pinching stage label.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const std::vector<std::string>& stage) {
  os << "t,norm,lambda_bar,sigma,min_eigenvalue,pinching_stage\n";
  for (std::size_t i = 0; i < traj.samples.size(); ++i) {
    const auto& s = traj.samples[i];
    const auto d = decompose(s.R);
    os << format_double(s.t) << ',' << format_double(s.R.norm()) << ',' << format_double(d.lambda_bar) << ','
       << format_double(d.sigma) << ',' << format_double(eigenvalues(s.R)(0)) << ','
       << (i < stage.size() ? stage[i] : std::string("-")) << '\n';
  }
}

inline json trajectory_manifest(const Trajectory& traj) {
  const auto& o = traj.options;
  json events = json::array();
  for (const auto& e : traj.events)
    events.push_back({{"t", e.t}, {"cone", e.cone_name}, {"transition", to_string(e.transition)}});
  json watch = json::array();
  for (const auto& c : o.watch) watch.push_back(c.name());
  return {{"settings",
           {{"horizon", number(o.horizon)},
            {"rtol", o.control.rtol},
            {"atol", o.control.atol},
            {"max_dt", number(o.control.max_dt)},
            {"normalized", o.normalized},
            {"watch", watch},
            {"stop_on_exit", o.stop_on_exit},
            {"max_samples", o.max_samples},
            {"event_time_tol", o.event_time_tol},
            {"blowup_norm", o.blowup_norm}}},
          {"seed", traj.seed},
          {"termination", to_string(traj.termination)},
          {"final_time", number(traj.final_time)},
          {"final_norm", number(traj.final_state().norm())},
          {"accepted_steps", traj.accepted_steps},
          {"rejected_steps", traj.rejected_steps},
          {"stored_samples", traj.samples.size()},
          {"events", events}};
}

}  // namespace curvlab
