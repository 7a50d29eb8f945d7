#pragma once

// Parameter schedules (a, b, p) of the invariant cone families that join the
// 2-nonnegative cone to the ray through I, and the cones they describe.

#include "curvlab/cones.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace curvlab {

enum class Stage { PropStage, FirstFamily, SecondFamily, TwoPositiveExtension };

inline const char* to_string(Stage s) {
  switch (s) {
    case Stage::PropStage: return "prop";
    case Stage::FirstFamily: return "first-family";
    case Stage::SecondFamily: return "second-family";
    case Stage::TwoPositiveExtension: return "two-positive-extension";
  }
  return "?";
}

inline Stage parse_stage(const std::string& s) {
  if (s == "prop" || s == "prop-stage") return Stage::PropStage;
  if (s == "first-family" || s == "first") return Stage::FirstFamily;
  if (s == "second-family" || s == "second") return Stage::SecondFamily;
  if (s == "two-positive-extension" || s == "extension") return Stage::TwoPositiveExtension;
  throw std::invalid_argument("unknown stage '" + s + "'");
}

/// Upper end of the admissible b-interval for images of the 2-nonnegative cone.
inline double prop_stage_b_max(int n) {
  return (std::sqrt(2.0 * n * (n - 2) + 4.0) - 2.0) / (n * (n - 2.0));
}

struct StageParams {
  Stage stage = Stage::PropStage;
  int n = 3;
  double parameter = 0.0;   // b for PropStage/FirstFamily, s for SecondFamily, u for the extension
  TransformParams transform;
  double p = 0.0;           // Ricci pinching of the base cone (0 for PropStage)
};

/// (a, b, p) for a stage parameter.
///
/// TwoPositiveExtension is parameterized by u ≥ 0: u ≤ 1/2 follows the first
/// family with b = u, u > 1/2 follows the second family with s = u - 1/2.
inline StageParams schedule(Stage stage, int n, double parameter) {
  if (n < 3) throw std::invalid_argument("schedules require n >= 3");
  StageParams sp;
  sp.stage = stage;
  sp.n = n;
  sp.parameter = parameter;
  sp.transform.n = n;
  auto out_of_range = [&](const std::string& interval) {
    return std::invalid_argument(std::string("stage ") + to_string(stage) + ": parameter " +
                                 std::to_string(parameter) + " outside " + interval);
  };
  switch (stage) {
    case Stage::PropStage: {
      const double bmax = prop_stage_b_max(n);
      if (!(parameter > 0.0 && parameter <= bmax * (1 + 1e-15)))
        throw out_of_range("(0, " + std::to_string(bmax) + "]");
      const double b = parameter;
      sp.transform.b = b;
      sp.transform.a = b + 0.5 * (n - 2) * b * b;
      sp.p = 0.0;
      break;
    }
    case Stage::FirstFamily: {
      if (!(parameter >= 0.0 && parameter <= 0.5)) throw out_of_range("[0, 1/2]");
      const double b = parameter;
      const double q = (n - 2) * b * b;
      sp.transform.b = b;
      sp.transform.a = (q + 2 * b) / (2 + 2 * q);
      sp.p = q / (1 + q);
      break;
    }
    case Stage::SecondFamily: {
      if (!(parameter >= 0.0 && std::isfinite(parameter))) throw out_of_range("[0, inf)");
      const double s = parameter;
      sp.transform.b = 0.5;
      sp.transform.a = (1 + s) / 2;
      sp.p = 1.0 - 4.0 / (n + 2 + 4 * s);
      break;
    }
    case Stage::TwoPositiveExtension: {
      if (!(parameter >= 0.0 && std::isfinite(parameter))) throw out_of_range("[0, inf)");
      StageParams inner = parameter <= 0.5 ? schedule(Stage::FirstFamily, n, parameter)
                                           : schedule(Stage::SecondFamily, n, parameter - 0.5);
      sp.transform = inner.transform;
      sp.p = inner.p;
      break;
    }
  }
  return sp;
}

/// Transform of the 2-nonnegative cone at the right end of the PropStage interval.
inline TransformParams prop_stage_terminal(int n) { return schedule(Stage::PropStage, n, prop_stage_b_max(n)).transform; }

/// The cone l_{a,b}(base) described by the schedule point.
inline ConeDescriptor family_cone(const StageParams& sp) {
  switch (sp.stage) {
    case Stage::PropStage: return ConeDescriptor::image(ConeDescriptor::two_nonneg(), sp.transform);
    case Stage::FirstFamily:
    case Stage::SecondFamily: return ConeDescriptor::image(ConeDescriptor::ricci_pinched(sp.p), sp.transform);
    case Stage::TwoPositiveExtension:
      return ConeDescriptor::intersection(
          {ConeDescriptor::image(ConeDescriptor::ricci_pinched(sp.p), sp.transform),
           ConeDescriptor::image(ConeDescriptor::two_nonneg(), prop_stage_terminal(sp.n))});
  }
  throw std::logic_error("unreachable");
}

inline ConeDescriptor family_cone(Stage stage, int n, double parameter) {
  return family_cone(schedule(stage, n, parameter));
}

}  // namespace curvlab
