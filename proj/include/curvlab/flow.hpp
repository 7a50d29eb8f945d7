#pragma once

// Integration of dR/dt = R² + R# and its projection to the unit sphere,
// with cone-event tracking, pinching reports and a randomized search for
// boundary points where the vector field leaves a cone.

#include "curvlab/parallel.hpp"
#include "curvlab/schedule.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace curvlab {

enum class Termination { TimeLimit, BlowUp, ConvergedToIdentityRay, ConeExit, StepUnderflow };

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::TimeLimit: return "TimeLimit";
    case Termination::BlowUp: return "BlowUp";
    case Termination::ConvergedToIdentityRay: return "ConvergedToIdentityRay";
    case Termination::ConeExit: return "ConeExit";
    case Termination::StepUnderflow: return "StepUnderflow";
  }
  return "?";
}

enum class Transition { Exit, Entry };

inline const char* to_string(Transition t) { return t == Transition::Exit ? "Exit" : "Entry"; }

struct StepControl {
  double rtol = 1e-9;
  double atol = 1e-12;
  double max_dt = std::numeric_limits<double>::infinity();
  double initial_dt = 0.0;  // 0: chosen from the field norm
  std::size_t max_steps = 5'000'000;
};

struct FlowOptions {
  double horizon = 1.0;
  StepControl control;
  bool normalized = false;
  std::vector<ConeDescriptor> watch;
  bool stop_on_exit = false;
  std::vector<double> output_times;   // states reported exactly at these times (sorted, within horizon)
  std::size_t max_samples = 1000;
  double event_time_tol = 1e-8;
  double membership_tol = 1e-9;
  double blowup_norm = 1e12;
  double converge_field = 1e-10;
  double converge_distance = 1e-3;
};

struct TrajectorySample {
  double t;
  CurvOp R;
};

struct ConeEvent {
  double t;
  std::size_t cone;   // index into FlowOptions::watch
  std::string cone_name;
  Transition transition;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  std::vector<TrajectorySample> outputs;   // one per requested output time reached
  std::vector<ConeEvent> events;
  FlowOptions options;
  std::uint64_t seed = 0;
  Termination termination = Termination::TimeLimit;
  double final_time = 0.0;
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;

  const CurvOp& final_state() const { return samples.back().R; }
};

namespace detail {

/// Dormand–Prince 5(4) tableau.
struct DormandPrince {
  static constexpr std::array<double, 7> c{0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  // b - b̂ (fifth minus fourth order weights)
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;
};

struct StepResult {
  Matrix y;
  double error;   // scaled RMS error, accept when ≤ 1
};

template <class Field>
StepResult dopri_step(const Field& f, const Matrix& y, double h, const StepControl& ctl) {
  using T = DormandPrince;
  const Matrix k1 = f(y);
  const Matrix k2 = f(y + h * (T::a21 * k1));
  const Matrix k3 = f(y + h * (T::a31 * k1 + T::a32 * k2));
  const Matrix k4 = f(y + h * (T::a41 * k1 + T::a42 * k2 + T::a43 * k3));
  const Matrix k5 = f(y + h * (T::a51 * k1 + T::a52 * k2 + T::a53 * k3 + T::a54 * k4));
  const Matrix k6 = f(y + h * (T::a61 * k1 + T::a62 * k2 + T::a63 * k3 + T::a64 * k4 + T::a65 * k5));
  Matrix y1 = y + h * (T::b1 * k1 + T::b3 * k3 + T::b4 * k4 + T::b5 * k5 + T::b6 * k6);
  const Matrix k7 = f(y1);
  const Matrix err = h * (T::e1 * k1 + T::e3 * k3 + T::e4 * k4 + T::e5 * k5 + T::e6 * k6 + T::e7 * k7);
  const Matrix scale =
      (ctl.atol + ctl.rtol * y.cwiseAbs().cwiseMax(y1.cwiseAbs()).array()).matrix();
  const double e = std::sqrt((err.array() / scale.array()).square().mean());
  return {std::move(y1), e};
}

inline CurvOp identity_direction(const AlgebraPtr& alg) {
  const CurvOp I = CurvOp::identity(alg);
  return (1.0 / I.norm()) * I;
}

}  // namespace detail

/// Tangential part of X on the unit sphere: X(v) - ⟨X(v), v⟩ v.
inline CurvOp normalized_field(const CurvOp& v) {
  const CurvOp X = ode_field(v);
  return X - inner(X, v) * v;
}

inline CurvOp flow_field(const CurvOp& R, bool normalized) {
  return normalized ? normalized_field(R) : ode_field(R);
}

/// Integrate from R0 with an adaptive Dormand–Prince 5(4) pair. After every
/// accepted step the state is symmetrized and Bianchi-projected (and put back
/// on the unit sphere in normalized mode).
inline Trajectory integrate(const CurvOp& R0, const FlowOptions& opt, std::uint64_t seed = 0) {
  if (!(opt.horizon > 0.0)) throw std::invalid_argument("integrate: horizon must be positive");
  if (!is_curvature_operator(R0, 1e-8)) throw std::invalid_argument("integrate: initial state is not a curvature operator");
  const auto& alg = R0.algebra_ptr();
  const bool normalized = opt.normalized;
  const StepControl& ctl = opt.control;

  Trajectory traj;
  traj.options = opt;
  traj.seed = seed;

  auto field = [&](const Matrix& y) -> Matrix { return flow_field(CurvOp(alg, y), normalized).coeffs(); };
  auto clean = [&](Matrix y) -> CurvOp {
    CurvOp R = bianchi_project(symmetrized(CurvOp(alg, std::move(y))));
    if (normalized) R = (1.0 / R.norm()) * R;
    return R;
  };

  CurvOp R = R0;
  if (normalized) {
    if (!(R.norm() > 0.0)) throw std::invalid_argument("integrate: normalized flow needs a nonzero state");
    R = (1.0 / R.norm()) * R;
  }
  double t = 0.0;

  std::vector<bool> inside;
  for (const auto& c : opt.watch) inside.push_back(contains(c, R, opt.membership_tol));

  std::vector<double> outputs = opt.output_times;
  std::sort(outputs.begin(), outputs.end());
  std::size_t next_output = 0;
  while (next_output < outputs.size() && outputs[next_output] <= 0.0) {
    traj.outputs.push_back({outputs[next_output], R});
    ++next_output;
  }

  const std::size_t keep = std::max<std::size_t>(opt.max_samples, 2);
  std::size_t stride = 1;     // store every stride-th accepted step
  std::size_t since_store = 0;
  traj.samples.push_back({t, R});
  auto store = [&](double ts, const CurvOp& Rs, bool force) {
    if (!force && ++since_store < stride) return;
    since_store = 0;
    traj.samples.push_back({ts, Rs});
    if (traj.samples.size() >= 2 * keep) {
      std::vector<TrajectorySample> thinned;
      thinned.reserve(keep + 1);
      for (std::size_t i = 0; i < traj.samples.size(); i += 2) thinned.push_back(traj.samples[i]);
      traj.samples = std::move(thinned);
      stride *= 2;
    }
  };

  const CurvOp target = detail::identity_direction(alg);
  double h = ctl.initial_dt;
  if (!(h > 0.0)) {
    const double fn = flow_field(R, normalized).norm();
    h = fn > 0.0 ? 1e-3 * std::max(R.norm(), 1e-12) / fn : 1e-3;
  }
  h = std::min({h, ctl.max_dt, opt.horizon});

  Termination reason = Termination::TimeLimit;
  std::size_t steps = 0;
  while (true) {
    if (t >= opt.horizon) break;
    if (++steps > ctl.max_steps) {
      reason = Termination::StepUnderflow;
      break;
    }
    double step_end = std::min(opt.horizon, t + h);
    if (next_output < outputs.size()) step_end = std::min(step_end, outputs[next_output]);
    const double dt = step_end - t;
    if (!(dt > 0.0) || t + dt == t || dt < 4.0 * std::numeric_limits<double>::epsilon() * std::abs(t)) {
      reason = Termination::StepUnderflow;
      break;
    }
    auto step = detail::dopri_step(field, R.coeffs(), dt, ctl);
    if (!std::isfinite(step.error) || !step.y.allFinite()) {
      ++traj.rejected_steps;
      h = 0.2 * dt;
      continue;
    }
    if (step.error > 1.0) {
      ++traj.rejected_steps;
      h = dt * std::max(0.2, 0.9 * std::pow(step.error, -0.2));
      continue;
    }
    ++traj.accepted_steps;
    const CurvOp R_prev = R;
    const double t_prev = t;
    R = clean(std::move(step.y));
    t = step_end;
    const double growth = step.error > 0.0 ? 0.9 * std::pow(step.error, -0.2) : 5.0;
    h = std::min(ctl.max_dt, dt * std::clamp(growth, 0.2, 5.0));
    if (t_prev + h == t_prev) h = dt;  // keep the proposal usable; underflow is reported on the next step

    // cone events
    bool exited = false;
    for (std::size_t c = 0; c < opt.watch.size(); ++c) {
      const bool now = contains(opt.watch[c], R, opt.membership_tol);
      if (now == inside[c]) continue;
      // locate the transition by bisection on sub-steps from the previous state
      double lo = 0.0;
      double hi = dt;
      while (hi - lo > opt.event_time_tol) {
        const double mid = 0.5 * (lo + hi);
        const CurvOp Rm = clean(detail::dopri_step(field, R_prev.coeffs(), mid, ctl).y);
        if (contains(opt.watch[c], Rm, opt.membership_tol) == inside[c])
          lo = mid;
        else
          hi = mid;
      }
      const Transition tr = inside[c] ? Transition::Exit : Transition::Entry;
      traj.events.push_back({t_prev + hi, c, opt.watch[c].name(), tr});
      inside[c] = now;
      if (tr == Transition::Exit && opt.stop_on_exit && !exited) {
        exited = true;
        R = clean(detail::dopri_step(field, R_prev.coeffs(), hi, ctl).y);
        t = t_prev + hi;
      }
    }
    if (exited) {
      reason = Termination::ConeExit;
      break;
    }

    const bool at_output = next_output < outputs.size() && t == outputs[next_output];
    if (at_output) {
      traj.outputs.push_back({t, R});
      ++next_output;
    }
    if (!normalized && R.norm() > opt.blowup_norm) {
      reason = Termination::BlowUp;
      break;
    }
    if (normalized && (R - target).norm() <= opt.converge_distance &&
        normalized_field(R).norm() < opt.converge_field) {
      reason = Termination::ConvergedToIdentityRay;
      break;
    }
    store(t, R, at_output);
  }

  if (traj.samples.back().t != t) traj.samples.push_back({t, R});
  // final thinning to the sample budget, keeping both ends
  if (traj.samples.size() > keep) {
    std::vector<TrajectorySample> thinned;
    const std::size_t m = traj.samples.size();
    for (std::size_t i = 0; i < keep; ++i) {
      const std::size_t idx = i * (m - 1) / (keep - 1);
      if (thinned.empty() || thinned.back().t != traj.samples[idx].t) thinned.push_back(traj.samples[idx]);
    }
    traj.samples = std::move(thinned);
  }
  traj.termination = reason;
  traj.final_time = t;
  return traj;
}

/// Largest sample-to-sample decrease of P, relative to |P|; ≤ 0 means monotone.
inline double energy_monotonicity_defect(const Trajectory& traj) {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < traj.samples.size(); ++i) {
    const double p0 = potential(traj.samples[i - 1].R);
    const double p1 = potential(traj.samples[i].R);
    worst = std::max(worst, (p0 - p1) / std::max({std::abs(p0), std::abs(p1), 1e-300}));
  }
  return worst;
}

inline bool energy_monotone(const Trajectory& traj, double rel_tol = 1e-8) {
  return energy_monotonicity_defect(traj) <= rel_tol;
}

struct PinchingReport {
  std::vector<double> times;
  std::vector<int> stage_index;   // largest family index whose cone contains the state, -1 if none
  bool monotone = true;
};

/// For each stored sample, the largest index k such that family_cone(family[k])
/// contains the state. `family` is ordered by increasing parameter.
inline PinchingReport pinching_report(const Trajectory& traj, const std::vector<StageParams>& family,
                                      double tol = 1e-9) {
  std::vector<ConeDescriptor> cones;
  cones.reserve(family.size());
  for (const auto& sp : family) cones.push_back(family_cone(sp));
  PinchingReport rep;
  for (const auto& s : traj.samples) {
    int best = -1;
    for (int k = static_cast<int>(cones.size()) - 1; k >= 0; --k)
      if (contains(cones[static_cast<std::size_t>(k)], s.R, tol)) {
        best = k;
        break;
      }
    if (!rep.stage_index.empty() && best < rep.stage_index.back()) rep.monotone = false;
    rep.times.push_back(s.t);
    rep.stage_index.push_back(best);
  }
  return rep;
}

/// Evenly spaced parameters of a stage, ending at its upper limit (PropStage:
/// b_max, FirstFamily: 1/2, SecondFamily: `s_max`).
inline std::vector<StageParams> family_grid(Stage stage, int n, std::size_t count, double s_max = 4.0) {
  std::vector<StageParams> out;
  double lo = 0.0;
  double hi = 0.5;
  if (stage == Stage::PropStage) hi = prop_stage_b_max(n);
  if (stage == Stage::SecondFamily || stage == Stage::TwoPositiveExtension) hi = s_max;
  for (std::size_t i = 1; i <= count; ++i)
    out.push_back(schedule(stage, n, lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count)));
  return out;
}

// ---------------------------------------------------------------------------
// Counterexample search

struct SearchResult {
  bool found = false;
  std::optional<CurvOp> witness;
  double margin = std::numeric_limits<double>::infinity();   // raw transversality margin at the witness
  double normalized_margin = std::numeric_limits<double>::infinity();   // margin / ‖X(witness)‖
  std::uint64_t seed = 0;
  std::size_t budget = 0;
  std::size_t evaluations = 0;
  double random_phase_best = std::numeric_limits<double>::infinity();
  std::size_t descent_improvements = 0;
};

inline constexpr double kWitnessThreshold = 1e-6;

/// Random boundary sampling (half of the budget, parallel over samples) followed
/// by an adaptive random-direction descent on the normalized margin from the
/// best sample. Boundary points are I + t*(Z)·Z for traceless directions Z.
inline SearchResult counterexample_search(const ConeDescriptor& cone, int n, std::size_t budget, std::uint64_t seed,
                                          unsigned threads = 1) {
  if (!is_eigen_sum_cone(cone)) throw std::invalid_argument("counterexample search needs an eigenvalue-sum cone");
  if (std::holds_alternative<cone_kind::ThreeNonneg>(cone.variant) && n < 4)
    throw std::invalid_argument("the 3-nonnegative cone needs n >= 4");
  const auto alg = so_algebra(n);
  SearchResult res;
  res.seed = seed;
  res.budget = budget;

  auto score = [&](const CurvOp& Z) {
    const CurvOp R = boundary_point(cone, Z, 1e-13);
    const double m = transversality_margin(R, cone);
    return std::pair<double, double>{m / std::max(ode_field(R).norm(), 1e-300), m};
  };

  const std::size_t random_budget = std::max<std::size_t>(1, budget / 2);
  struct Sample {
    double normalized;
    double raw;
  };
  const auto phase1 = parallel_map(random_budget, threads, [&](std::size_t i) {
    CounterRng rng(seed, i);
    const auto [nm, m] = score(random_traceless_direction(alg, rng));
    return Sample{nm, m};
  });
  std::size_t best_i = 0;
  for (std::size_t i = 1; i < phase1.size(); ++i)
    if (phase1[i].normalized < phase1[best_i].normalized) best_i = i;
  res.evaluations = random_budget;
  res.random_phase_best = phase1[best_i].normalized;

  CounterRng start_rng(seed, best_i);
  CurvOp Z = random_traceless_direction(alg, start_rng);
  double fz = phase1[best_i].normalized;
  double raw = phase1[best_i].raw;
  CounterRng rng(seed, std::uint64_t{1} << 62);
  double step = 0.3;
  for (std::size_t it = random_budget; it < budget; ++it) {
    CurvOp Z2 = Z + step * random_traceless_direction(alg, rng);
    Z2 = (Z.norm() / Z2.norm()) * Z2;
    const auto [f2, m2] = score(Z2);
    ++res.evaluations;
    if (f2 < fz) {
      Z = Z2;
      fz = f2;
      raw = m2;
      step *= 1.2;
      ++res.descent_improvements;
    } else {
      step *= 0.97;
    }
    if (step < 1e-4) step = 0.3;
  }
  res.witness = boundary_point(cone, Z, 1e-13);
  res.normalized_margin = fz;
  res.margin = raw;
  res.found = fz < -kWitnessThreshold;
  return res;
}

}  // namespace curvlab
