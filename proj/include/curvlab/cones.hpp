#pragma once

// Closed convex O(n)-invariant cones in S²_B(so(n)): descriptors, membership,
// boundary sampling and tangent-cone transversality margins.

#include "curvlab/transform.hpp"

#include <functional>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace curvlab {

struct ConeDescriptor;
using ConePtr = std::shared_ptr<const ConeDescriptor>;

namespace cone_kind {
struct NonnegOp {};
struct TwoNonneg {};
struct ThreeNonneg {};
/// Sums of nonnegative rank-one curvature operators; a sampling target only.
struct GeometricNonneg {};
/// {R ≥ 0, Ric ≥ p · tr(Ric)/n · id}
struct RicciPinched {
  double p;
};
/// l_{a,b}(base)
struct LinearImage {
  ConePtr base;
  TransformParams params;
};
/// Cone over {R ∈ base : tr R = 1, d(R, ∂base) ≥ δ}.
struct InnerCone {
  ConePtr base;
  double delta;
};
/// {R : R + I ∈ InnerCone(base, δ), tr R ≥ trace_floor}
struct TruncatedShifted {
  ConePtr base;
  double delta;
  double trace_floor;
};
struct Intersection {
  std::vector<ConePtr> parts;
};
}  // namespace cone_kind

struct ConeDescriptor {
  using Variant = std::variant<cone_kind::NonnegOp, cone_kind::TwoNonneg, cone_kind::ThreeNonneg,
                               cone_kind::GeometricNonneg, cone_kind::RicciPinched, cone_kind::LinearImage,
                               cone_kind::InnerCone, cone_kind::TruncatedShifted, cone_kind::Intersection>;
  Variant variant;

  static ConeDescriptor nonneg() { return {cone_kind::NonnegOp{}}; }
  static ConeDescriptor two_nonneg() { return {cone_kind::TwoNonneg{}}; }
  static ConeDescriptor three_nonneg() { return {cone_kind::ThreeNonneg{}}; }
  static ConeDescriptor geometric_nonneg() { return {cone_kind::GeometricNonneg{}}; }
  static ConeDescriptor ricci_pinched(double p) {
    if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("Ricci pinching p must lie in [0, 1)");
    return {cone_kind::RicciPinched{p}};
  }
  static ConeDescriptor image(ConeDescriptor base, TransformParams params) {
    params.validate();
    return {cone_kind::LinearImage{std::make_shared<const ConeDescriptor>(std::move(base)), params}};
  }
  static ConeDescriptor inner(ConeDescriptor base, double delta) {
    if (!(delta >= 0.0)) throw std::invalid_argument("inner cone requires delta >= 0");
    return {cone_kind::InnerCone{std::make_shared<const ConeDescriptor>(std::move(base)), delta}};
  }
  static ConeDescriptor truncated_shifted(ConeDescriptor base, double delta, double trace_floor) {
    if (!(delta >= 0.0)) throw std::invalid_argument("truncated shifted cone requires delta >= 0");
    return {cone_kind::TruncatedShifted{std::make_shared<const ConeDescriptor>(std::move(base)), delta,
                                        trace_floor}};
  }
  static ConeDescriptor intersection(std::vector<ConeDescriptor> parts) {
    cone_kind::Intersection out;
    for (auto& c : parts) out.parts.push_back(std::make_shared<const ConeDescriptor>(std::move(c)));
    return {std::move(out)};
  }

  /// True for cones without a scale (every variant except TruncatedShifted).
  bool is_pure_cone() const;
  std::string name() const;
};

inline std::string ConeDescriptor::name() const {
  return std::visit(
      [](const auto& c) -> std::string {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, cone_kind::NonnegOp>) return "nonneg";
        else if constexpr (std::is_same_v<T, cone_kind::TwoNonneg>) return "2nonneg";
        else if constexpr (std::is_same_v<T, cone_kind::ThreeNonneg>) return "3nonneg";
        else if constexpr (std::is_same_v<T, cone_kind::GeometricNonneg>) return "geometric-nonneg";
        else if constexpr (std::is_same_v<T, cone_kind::RicciPinched>) return "ricci-pinched(" + std::to_string(c.p) + ")";
        else if constexpr (std::is_same_v<T, cone_kind::LinearImage>)
          return "l(" + std::to_string(c.params.a) + "," + std::to_string(c.params.b) + ")[" + c.base->name() + "]";
        else if constexpr (std::is_same_v<T, cone_kind::InnerCone>)
          return "inner(" + std::to_string(c.delta) + ")[" + c.base->name() + "]";
        else if constexpr (std::is_same_v<T, cone_kind::TruncatedShifted>)
          return "truncated(" + std::to_string(c.delta) + "," + std::to_string(c.trace_floor) + ")[" +
                 c.base->name() + "]";
        else {
          std::string s = "intersection[";
          for (std::size_t i = 0; i < c.parts.size(); ++i) s += (i ? "," : "") + c.parts[i]->name();
          return s + "]";
        }
      },
      variant);
}

inline bool ConeDescriptor::is_pure_cone() const {
  return std::visit(
      [](const auto& c) -> bool {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, cone_kind::TruncatedShifted>) return false;
        else if constexpr (std::is_same_v<T, cone_kind::LinearImage> || std::is_same_v<T, cone_kind::InnerCone>)
          return c.base->is_pure_cone();
        else if constexpr (std::is_same_v<T, cone_kind::Intersection>) {
          for (const auto& p : c.parts)
            if (!p->is_pure_cone()) return false;
          return true;
        } else return true;
      },
      variant);
}

// ---------------------------------------------------------------------------
// Eigenvalue-sum constraints

/// Sum of the k smallest eigenvalues of matrix, a concave function of the
/// operator it is built from. push maps an operator direction V to the
/// direction of `matrix`; pull is its adjoint.
struct EigenSumConstraint {
  std::string label;
  int k = 1;
  Matrix matrix;
  double scale = 1.0;
  std::function<Matrix(const CurvOp&)> push;
  std::function<CurvOp(const Matrix&)> pull;

  double value() const {
    const Vector ev = eigensystem(matrix).eigenvalues();
    return ev.head(k).sum();
  }
};

inline double sum_smallest(const Matrix& M, int k) { return eigensystem(M).eigenvalues().head(k).sum(); }

/// One-sided derivative of the sum of the k smallest eigenvalues of M along dM.
/// Eigenvalues within `gap` of the k-th one are treated as one degenerate block,
/// over which the derivative is the sum of the smallest eigenvalues of the
/// compressed direction.
inline double eigen_sum_derivative(const Matrix& M, const Matrix& dM, int k, double gap) {
  const auto es = eigensystem(M);
  const Vector& mu = es.eigenvalues();
  const Matrix& U = es.eigenvectors();
  const int m = static_cast<int>(mu.size());
  const double pivot = mu(k - 1);
  int lo = k - 1;
  int hi = k - 1;
  while (lo > 0 && std::abs(mu(lo - 1) - pivot) <= gap) --lo;
  while (hi + 1 < m && std::abs(mu(hi + 1) - pivot) <= gap) ++hi;
  const Matrix sym = 0.5 * (dM + dM.transpose());
  double d = 0.0;
  for (int i = 0; i < lo; ++i) d += U.col(i).dot(sym * U.col(i));
  const Matrix block = U.middleCols(lo, hi - lo + 1);
  const Matrix compressed = block.transpose() * sym * block;
  d += eigensystem(compressed).eigenvalues().head(k - lo).sum();
  return d;
}

namespace detail {

inline EigenSumConstraint operator_constraint(const CurvOp& R, int k, std::string label) {
  EigenSumConstraint c;
  c.label = std::move(label);
  c.k = k;
  c.matrix = R.coeffs();
  c.scale = R.norm();
  c.push = [](const CurvOp& V) { return V.coeffs(); };
  auto alg = R.algebra_ptr();
  c.pull = [alg](const Matrix& W) { return CurvOp(alg, W); };
  return c;
}

/// Ric(R) - p · tr(Ric)/n · id ≥ 0.
inline EigenSumConstraint pinched_ricci_constraint(const CurvOp& R, double p) {
  const int n = R.n();
  auto alg = R.algebra_ptr();
  auto pinched = [n, p](const CurvOp& V) {
    const Matrix ric = ricci(V);
    return Matrix(ric - p * ric.trace() / n * Matrix::Identity(n, n));
  };
  EigenSumConstraint c;
  c.label = "ricci-pinching";
  c.k = 1;
  c.matrix = pinched(R);
  c.scale = R.norm();
  c.push = pinched;
  // Adjoint of V ↦ Ric(V) - (p/n) scal(V) id is W ↦ 2 W∧id - (2p/n) tr(W) I.
  c.pull = [alg, n, p](const Matrix& W) {
    return 2.0 * wedge_op(W, Matrix::Identity(n, n), alg) - (2.0 * p / n * W.trace()) * CurvOp::identity(alg);
  };
  return c;
}

struct ConstraintValue {
  std::string label;
  double value;
  double threshold;
};

}  // namespace detail

/// All eigenvalue-sum constraints defining `cone` at R. Throws for variants
/// that are not described by such constraints.
inline std::vector<EigenSumConstraint> eigen_constraints(const CurvOp& R, const ConeDescriptor& cone) {
  using namespace cone_kind;
  return std::visit(
      [&](const auto& c) -> std::vector<EigenSumConstraint> {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, NonnegOp>) return {detail::operator_constraint(R, 1, "lambda-min")};
        else if constexpr (std::is_same_v<T, TwoNonneg>) return {detail::operator_constraint(R, 2, "lambda1+lambda2")};
        else if constexpr (std::is_same_v<T, ThreeNonneg>)
          return {detail::operator_constraint(R, 3, "lambda1+lambda2+lambda3")};
        else if constexpr (std::is_same_v<T, RicciPinched>)
          return {detail::operator_constraint(R, 1, "lambda-min"), detail::pinched_ricci_constraint(R, c.p)};
        else if constexpr (std::is_same_v<T, LinearImage>) {
          const TransformParams params = c.params;
          auto base = eigen_constraints(l_ab_inverse(R, params), *c.base);
          for (auto& bc : base) {
            bc.label = "image:" + bc.label;
            bc.push = [inner = bc.push, params](const CurvOp& V) { return inner(l_ab_inverse(V, params)); };
            bc.pull = [inner = bc.pull, params](const Matrix& W) { return l_ab_inverse(inner(W), params); };
          }
          return base;
        } else if constexpr (std::is_same_v<T, Intersection>) {
          std::vector<EigenSumConstraint> out;
          for (const auto& part : c.parts) {
            auto sub = eigen_constraints(R, *part);
            for (auto& s : sub) out.push_back(std::move(s));
          }
          return out;
        } else {
          throw std::invalid_argument("cone " + ConeDescriptor{c}.name() + " is not an eigenvalue-sum cone");
        }
      },
      cone.variant);
}

/// True when every constraint of the cone is an eigenvalue sum.
inline bool is_eigen_sum_cone(const ConeDescriptor& cone) {
  using namespace cone_kind;
  return std::visit(
      [](const auto& c) -> bool {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, LinearImage>) return is_eigen_sum_cone(*c.base);
        else if constexpr (std::is_same_v<T, Intersection>) {
          for (const auto& p : c.parts)
            if (!is_eigen_sum_cone(*p)) return false;
          return true;
        } else
          return std::is_same_v<T, NonnegOp> || std::is_same_v<T, TwoNonneg> || std::is_same_v<T, ThreeNonneg> ||
                 std::is_same_v<T, RicciPinched>;
      },
      cone.variant);
}

/// Unit-free gradient of an eigenvalue-sum constraint: Bianchi-projected and
/// with its component along I removed (tangent to the trace-one slice).
inline CurvOp slice_gradient(const EigenSumConstraint& c, const AlgebraPtr& algebra) {
  const auto es = eigensystem(c.matrix);
  const Matrix U = es.eigenvectors().leftCols(c.k);
  CurvOp g = bianchi_project(symmetrized(c.pull(U * U.transpose())));
  const CurvOp I = CurvOp::identity(algebra);
  return g - (inner(g, I) / inner(I, I)) * I;
}

// ---------------------------------------------------------------------------
// Membership

enum class Region { Interior, Boundary, Outside };

inline const char* to_string(Region r) {
  switch (r) {
    case Region::Interior: return "interior";
    case Region::Boundary: return "boundary";
    case Region::Outside: return "outside";
  }
  return "?";
}

struct Membership {
  Region region = Region::Interior;
  double margin = 0.0;               // signed value of the tightest constraint
  std::vector<std::string> active;   // active constraints (Boundary) or violated ones (Outside)

  bool inside() const { return region != Region::Outside; }
};

namespace detail {

inline std::vector<ConstraintValue> constraint_values(const CurvOp& R, const ConeDescriptor& cone, double tol);

/// First-order distance of R/tr(R) to the boundary of base, within the trace-one slice.
inline double slice_distance(const CurvOp& R, const ConeDescriptor& base) {
  const double tr = R.trace_lambda2();
  if (!(tr > 0.0)) return -std::numeric_limits<double>::infinity();
  const CurvOp Rhat = (1.0 / tr) * R;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : eigen_constraints(Rhat, base)) {
    const double gnorm = slice_gradient(c, R.algebra_ptr()).norm();
    const double v = c.value();
    best = std::min(best, gnorm > 0.0 ? v / gnorm : (v >= 0 ? std::numeric_limits<double>::infinity() : v));
  }
  return best;
}

inline std::vector<ConstraintValue> constraint_values(const CurvOp& R, const ConeDescriptor& cone, double tol) {
  using namespace cone_kind;
  return std::visit(
      [&](const auto& c) -> std::vector<ConstraintValue> {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, GeometricNonneg>) {
          throw std::logic_error("membership in the geometrically nonnegative cone is not decidable here; "
                                 "use it as a sampling target");
        } else if constexpr (std::is_same_v<T, InnerCone>) {
          if (c.delta == 0.0) return constraint_values(R, *c.base, tol);
          return {{"inner-distance", slice_distance(R, *c.base) - c.delta, tol}};
        } else if constexpr (std::is_same_v<T, TruncatedShifted>) {
          const CurvOp shifted = R + CurvOp::identity(R.algebra_ptr());
          std::vector<ConstraintValue> out;
          if (c.delta == 0.0) {
            out = constraint_values(shifted, *c.base, tol);
            for (auto& v : out) v.label = "shifted:" + v.label;
          } else {
            out.push_back({"shifted-inner-distance", slice_distance(shifted, *c.base) - c.delta, tol});
          }
          out.push_back({"trace-floor", R.trace_lambda2() - c.trace_floor,
                         scaled_tol(tol, std::max(std::abs(c.trace_floor), std::abs(R.trace_lambda2())))});
          return out;
        } else if constexpr (std::is_same_v<T, Intersection>) {
          std::vector<ConstraintValue> out;
          for (const auto& part : c.parts) {
            auto sub = constraint_values(R, *part, tol);
            out.insert(out.end(), sub.begin(), sub.end());
          }
          return out;
        } else if constexpr (std::is_same_v<T, LinearImage>) {
          auto out = constraint_values(l_ab_inverse(R, c.params), *c.base, tol);
          for (auto& v : out) v.label = "image:" + v.label;
          return out;
        } else {
          std::vector<ConstraintValue> out;
          for (const auto& ec : eigen_constraints(R, cone))
            out.push_back({ec.label, ec.value(), scaled_tol(tol, ec.scale)});
          return out;
        }
      },
      cone.variant);
}

}  // namespace detail

/// Classify R against the cone. tol is relative to the norm of the operator
/// each constraint is evaluated on (absolute for the unit-free slice distance).
inline Membership membership(const CurvOp& R, const ConeDescriptor& cone, double tol = 1e-9) {
  if (cone_kind::RicciPinched const* rp = std::get_if<cone_kind::RicciPinched>(&cone.variant))
    if (!(rp->p >= 0.0 && rp->p < 1.0)) throw std::invalid_argument("Ricci pinching p must lie in [0, 1)");
  const auto values = detail::constraint_values(R, cone, tol);
  Membership m;
  m.margin = std::numeric_limits<double>::infinity();
  bool outside = false;
  bool boundary = false;
  for (const auto& v : values) m.margin = std::min(m.margin, v.value);
  for (const auto& v : values)
    if (v.value < -v.threshold) outside = true;
  for (const auto& v : values) {
    if (outside ? v.value < -v.threshold : std::abs(v.value) <= v.threshold) {
      m.active.push_back(v.label);
      boundary = true;
    }
  }
  m.region = outside ? Region::Outside : (boundary ? Region::Boundary : Region::Interior);
  return m;
}

inline bool contains(const ConeDescriptor& cone, const CurvOp& R, double tol = 1e-9) {
  return membership(R, cone, tol).inside();
}

// ---------------------------------------------------------------------------
// Transversality

inline constexpr double kDegeneracyGap = 1e-8;

/// Minimum over active constraints of their derivative along X(R). Positive
/// means the vector field points strictly into the cone at R.
///
/// Eigenvalue-sum cones use the exact one-sided derivative; inner and
/// truncated cones fall back to a forward difference of the margin.
inline double transversality_margin(const CurvOp& R, const ConeDescriptor& cone, double tol = 1e-9) {
  const Membership m = membership(R, cone, tol);
  if (m.region != Region::Boundary)
    throw std::domain_error(std::string("transversality margin requires a boundary point, got ") +
                            to_string(m.region));
  const CurvOp X = ode_field(R);
  if (!is_eigen_sum_cone(cone)) {
    const double h = 1e-6 * std::max(R.norm(), 1e-300) / std::max(X.norm(), 1e-300);
    const double m1 = membership(R + h * X, cone, tol).margin;
    return (m1 - m.margin) / h;
  }
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : eigen_constraints(R, cone)) {
    const double v = c.value();
    if (std::abs(v) > scaled_tol(tol, c.scale)) continue;
    const double gap = kDegeneracyGap * std::max(c.matrix.norm(), R.norm());
    best = std::min(best, eigen_sum_derivative(c.matrix, c.push(X), c.k, gap));
  }
  return best;
}

// ---------------------------------------------------------------------------
// Sampling

/// Traceless Gaussian curvature operator scaled to the norm of I.
inline CurvOp random_traceless_direction(const AlgebraPtr& algebra, CounterRng& rng) {
  CurvOp Z = random_curvature_operator(algebra, rng);
  const CurvOp I = CurvOp::identity(algebra);
  Z -= (Z.trace_lambda2() / algebra->dim()) * I;
  return (I.norm() / Z.norm()) * Z;
}

/// Largest t with I + tZ in the cone, located by bisection to relative
/// precision `precision`. Requires I in the interior of the cone.
inline double boundary_parameter(const ConeDescriptor& cone, const CurvOp& Z, double precision = 1e-10,
                                 double tol = 1e-9) {
  const CurvOp I = CurvOp::identity(Z.algebra_ptr());
  // Sum of the k smallest eigenvalues of I + tZ is k + t·(sum of the k smallest of Z).
  int k = 0;
  if (std::holds_alternative<cone_kind::NonnegOp>(cone.variant)) k = 1;
  if (std::holds_alternative<cone_kind::TwoNonneg>(cone.variant)) k = 2;
  if (std::holds_alternative<cone_kind::ThreeNonneg>(cone.variant)) k = 3;
  if (k > 0 && k < Z.dim()) {
    const double s = sum_smallest(Z.coeffs(), k);
    if (!(s < 0.0)) throw std::domain_error("cone " + cone.name() + " is unbounded along the sampled direction");
    return -k / s;
  }
  if (membership(I, cone, tol).region != Region::Interior)
    throw std::domain_error("boundary sampling requires I in the interior of " + cone.name());
  double lo = 0.0;
  double hi = 1.0;
  int guard = 0;
  while (membership(I + hi * Z, cone, 0.0).margin >= 0.0) {
    lo = hi;
    hi *= 2.0;
    if (++guard > 80) throw std::domain_error("cone " + cone.name() + " is unbounded along the sampled direction");
  }
  while (hi - lo > precision * hi) {
    const double mid = 0.5 * (lo + hi);
    if (membership(I + mid * Z, cone, 0.0).margin >= 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

inline CurvOp boundary_point(const ConeDescriptor& cone, const CurvOp& Z, double precision = 1e-10) {
  return CurvOp::identity(Z.algebra_ptr()) + boundary_parameter(cone, Z, precision) * Z;
}

inline CurvOp sample_boundary(const ConeDescriptor& cone, const AlgebraPtr& algebra, CounterRng& rng) {
  return boundary_point(cone, random_traceless_direction(algebra, rng));
}

/// Point I + u·t*·Z with u uniform in [depth_lo, depth_hi] of the way to the boundary.
inline CurvOp sample_interior(const ConeDescriptor& cone, const AlgebraPtr& algebra, CounterRng& rng,
                              double depth_lo = 0.05, double depth_hi = 0.95) {
  const CurvOp Z = random_traceless_direction(algebra, rng);
  const double t = boundary_parameter(cone, Z, 1e-6);
  return CurvOp::identity(algebra) + rng.uniform(depth_lo, depth_hi) * t * Z;
}

/// Positive combination of `terms` nonnegative rank-one curvature operators.
inline CurvOp sample_geometric_nonneg(const AlgebraPtr& algebra, CounterRng& rng, int terms) {
  const int n = algebra->n();
  CurvOp out = CurvOp::zero(algebra);
  for (int t = 0; t < terms; ++t) {
    const Matrix Q = random_orthogonal(n, rng);
    out += rng.uniform() * rank_one_projector(Q.col(0), Q.col(1), algebra);
  }
  return out;
}

}  // namespace curvlab
