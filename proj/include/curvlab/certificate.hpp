#pragma once

// Monte-Carlo positivity certificates for the schedule stages.
//
// Spectral stages sample traceless Ricci spectra λ (with λ̄ = 1) from the
// stage's admissible polytope {Σλ = 0, λ_i ≥ -(1-p)λ̄} and evaluate the
// closed-form eigenvalues d_ij of D_{a,b}, the stage's lower bound on them,
// and the Ricci-pinching preservation inequality at pinned boundary spectra.
// The extension stage additionally samples boundary points of the
// 2-nonnegative cone at operator level.

#include "curvlab/parallel.hpp"
#include "curvlab/schedule.hpp"

#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace curvlab {

enum class CheckKind { Sampled, Inequality, Identity };

inline const char* to_string(CheckKind k) {
  switch (k) {
    case CheckKind::Sampled: return "sampled";
    case CheckKind::Inequality: return "inequality";
    case CheckKind::Identity: return "identity";
  }
  return "?";
}

inline constexpr double kIdentityTolerance = 1e-12;

struct CertificateCheck {
  std::string name;
  CheckKind kind = CheckKind::Sampled;
  double residual = 0.0;  // Identity checks only
  double min_slack = std::numeric_limits<double>::infinity();
  double min_slack_nondegenerate = std::numeric_limits<double>::infinity();  // over samples with σ > kSigmaFloor
  std::size_t evaluated = 0;
  bool strict = false;   // slack must be > 0 (away from σ = 0) rather than ≥ 0
  bool passed = true;
  std::vector<double> argmin_spectrum;
};

struct CertificateReport {
  StageParams params;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  double min_slack = std::numeric_limits<double>::infinity();
  double min_slack_nondegenerate = std::numeric_limits<double>::infinity();
  std::vector<double> argmin_spectrum;
  std::vector<CertificateCheck> checks;
  std::vector<std::string> failures;

  bool passed() const { return failures.empty(); }
};

inline constexpr double kSigmaFloor = 1e-8;
inline constexpr double kSlackTolerance = 1e-12;

namespace detail {

struct SpectralSample {
  std::vector<double> lambdas;
  double sigma = 0.0;
  double min_d = 0.0;
  double d_bound = std::numeric_limits<double>::infinity();  // min_ij d_ij - stage lower bound
  std::vector<double> pinned;                               // boundary spectrum with λ_i = -(1-p)
  double ricci_slack = std::numeric_limits<double>::infinity();
};

/// λ_i = -(1-p) + n(1-p) w_i with w on a face of the simplex; `active`
/// coordinates carry weight. Sums to zero with λ̄ = 1.
inline std::vector<double> sample_spectrum(int n, double p, CounterRng& rng, int active, int pinned = -1) {
  std::vector<int> idx;
  for (int i = 0; i < n; ++i)
    if (i != pinned) idx.push_back(i);
  // deterministic partial shuffle to choose the active coordinates
  for (std::size_t i = 0; i + 1 < idx.size(); ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.uniform() * static_cast<double>(idx.size() - i));
    std::swap(idx[i], idx[std::min(j, idx.size() - 1)]);
  }
  active = std::max(1, std::min<int>(active, static_cast<int>(idx.size())));
  const auto w = rng.simplex(static_cast<std::size_t>(active));
  std::vector<double> lambdas(static_cast<std::size_t>(n), -(1.0 - p));
  for (int k = 0; k < active; ++k) lambdas[static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])] += n * (1.0 - p) * w[static_cast<std::size_t>(k)];
  // remove rounding drift so Σλ = 0 to working precision
  double sum = 0.0;
  for (double l : lambdas) sum += l;
  lambdas[static_cast<std::size_t>(idx[0])] -= sum;
  return lambdas;
}

inline double sigma_of(const std::vector<double>& l) {
  double s = 0.0;
  for (double x : l) s += x * x;
  return s / static_cast<double>(l.size());
}

/// Lower bound on min_ij d_ij asserted for the stage (λ̄ = 1).
inline double stage_d_lower_bound(const StageParams& sp, double sigma) {
  const int n = sp.n;
  const double a = sp.transform.a;
  const double b = sp.transform.b;
  switch (sp.stage) {
    case Stage::FirstFamily:
      return (2 + 2 * (n - 2) * b) / ((1 + 2 * (n - 1) * a) * (1 + (n - 2) * b * b)) * sigma * b * b * (1 - 2 * b);
    case Stage::SecondFamily: {
      // bound obtained after σ ≤ (n-1)(1-p)²λ̄²; the simplified rational form
      // second_family_rational_bound does not dominate it for small s
      const double s = sp.parameter;
      const double m = n + 2 + 4 * s;
      return (n - 2.0) / (n + 2.0) + s * (n - 6 + 4 * s) / m -
             16.0 * (n - 1) * n * s / ((4.0 * n + 4.0 * (n - 1) * s) * m * m);
    }
    default: return -std::numeric_limits<double>::infinity();
  }
}

/// (5 + s(n-6) + 4s² - 4s)/(n+2+4s), the simplified second-family bound (λ̄ = 1).
inline double second_family_rational_bound(int n, double s) {
  return (5 + s * (n - 6) + 4 * s * s - 4 * s) / (n + 2 + 4 * s);
}

/// p·λ̄² + r_i - p·scal(X_{a,b})/n at a spectrum with λ_i = -(1-p)λ̄ (λ̄ = 1),
/// using Ric(R² + R#)_ii ≥ p²λ̄².
inline double ricci_preservation_slack(const StageParams& sp, const std::vector<double>& lambdas, int i) {
  const int n = sp.n;
  const double a = sp.transform.a;
  const double b = sp.transform.b;
  const double p = sp.p;
  const double sigma = sigma_of(lambdas);
  const auto r = r_spectrum(lambdas, 1.0, sp.transform);
  const double e_id = 1 + 2 * (n - 1) * a;
  const double scal_over_n = e_id + (1 + (n - 2) * b) * (1 + (n - 2) * b) / e_id * sigma;
  return p * p + r[static_cast<std::size_t>(i)] - p * scal_over_n;
}

inline void fold(CertificateCheck& c, double slack, double sigma, const std::vector<double>& spectrum) {
  ++c.evaluated;
  if (slack < c.min_slack) {
    c.min_slack = slack;
    c.argmin_spectrum = spectrum;
  }
  if (sigma > kSigmaFloor) c.min_slack_nondegenerate = std::min(c.min_slack_nondegenerate, slack);
}

inline void fold_scalar(CertificateCheck& c, double slack) {
  ++c.evaluated;
  if (c.kind == CheckKind::Sampled) c.kind = CheckKind::Inequality;
  c.min_slack = std::min(c.min_slack, slack);
  c.min_slack_nondegenerate = std::min(c.min_slack_nondegenerate, slack);
}

inline CertificateCheck identity_check(std::string name, double residual) {
  CertificateCheck c{std::move(name), CheckKind::Identity, residual};
  c.evaluated = 1;
  c.min_slack = c.min_slack_nondegenerate = kIdentityTolerance - residual;
  return c;
}

inline void finalize(CertificateCheck& c) {
  if (c.kind == CheckKind::Identity) {
    c.passed = c.residual <= kIdentityTolerance;
    return;
  }
  c.passed = c.min_slack >= -kSlackTolerance;
  if (c.strict && c.evaluated > 0 && std::isfinite(c.min_slack_nondegenerate))
    c.passed = c.passed && c.min_slack_nondegenerate > 0.0;
}

}  // namespace detail

/// A 2-nonnegative curvature operator on the boundary of the cone for n = 4
/// with spectrum (-1, 1, 1, 1, 1, 1): I - 2vvᵀ with v orthogonal to the
/// Bianchi constraint in the sense vᵀ⋆v = 0 for the Hodge star ⋆.
inline CurvOp extreme_two_nonneg_n4() {
  const auto alg = so_algebra(4);
  const auto& basis = alg->basis;
  // Hodge star on Λ²ℝ⁴ in the pair basis: ⋆(e_i∧e_j) = ε_{ijkl} e_k∧e_l.
  Matrix star = Matrix::Zero(6, 6);
  const int pairs[3][4] = {{0, 1, 2, 3}, {0, 2, 3, 1}, {0, 3, 1, 2}};
  for (const auto& q : pairs) {
    const auto x = basis.bivector(q[0], q[1]);
    const auto y = basis.bivector(q[2], q[3]);
    star(x.index, y.index) = x.sign * y.sign;
    star(y.index, x.index) = x.sign * y.sign;
  }
  const auto es = eigensystem(star);
  const Vector v = (es.eigenvectors().col(0) + es.eigenvectors().col(5)) / std::sqrt(2.0);
  return {alg, Matrix::Identity(6, 6) - 2.0 * v * v.transpose()};
}

inline CertificateReport positivity_certificate(Stage stage, int n, double parameter, std::size_t samples,
                                                std::uint64_t seed, unsigned threads = 1) {
  CertificateReport rep;
  rep.params = schedule(stage, n, parameter);
  rep.samples = samples;
  rep.seed = seed;
  const StageParams& sp = rep.params;
  const double b = sp.transform.b;

  // spectral stage driving the d_ij checks
  StageParams spectral = sp;
  if (stage == Stage::TwoPositiveExtension)
    spectral = parameter <= 0.5 ? schedule(Stage::FirstFamily, n, parameter)
                                : schedule(Stage::SecondFamily, n, parameter - 0.5);

  const bool has_pinching = spectral.stage != Stage::PropStage;
  auto sampled = parallel_map(samples, threads, [&](std::size_t s) {
    CounterRng rng(seed, s);
    detail::SpectralSample out;
    const int active = 1 + static_cast<int>(s % static_cast<std::size_t>(n));
    out.lambdas = detail::sample_spectrum(n, spectral.p, rng, active);
    out.sigma = detail::sigma_of(out.lambdas);
    const auto d = d_spectrum(out.lambdas, 1.0, spectral.transform);
    out.min_d = *std::min_element(d.begin(), d.end());
    out.d_bound = out.min_d - detail::stage_d_lower_bound(spectral, out.sigma);
    if (has_pinching && spectral.p < 1.0) {
      const int pin = static_cast<int>(s % static_cast<std::size_t>(n));
      out.pinned = detail::sample_spectrum(n, spectral.p, rng, 1 + static_cast<int>((s / n) % n), pin);
      out.pinned[static_cast<std::size_t>(pin)] = -(1.0 - spectral.p);
      double sum = 0.0;
      for (double l : out.pinned) sum += l;
      for (int i = 0; i < n; ++i)
        if (i != pin) {
          out.pinned[static_cast<std::size_t>(i)] -= sum;
          break;
        }
      out.ricci_slack = detail::ricci_preservation_slack(spectral, out.pinned, pin);
    }
    return out;
  });

  CertificateCheck d_check{"d_ij >= 0"};
  d_check.strict = spectral.stage != Stage::PropStage || b > 0.0;
  CertificateCheck bound_check{"d_ij >= stage lower bound"};
  bound_check.strict = true;
  CertificateCheck ricci_check{"Ricci pinching preserved at pinned spectra"};
  ricci_check.strict = true;
  for (const auto& s : sampled) {
    detail::fold(d_check, s.min_d, s.sigma, s.lambdas);
    if (std::isfinite(s.d_bound)) detail::fold(bound_check, s.d_bound, s.sigma, s.lambdas);
    if (!s.pinned.empty()) detail::fold(ricci_check, s.ricci_slack, detail::sigma_of(s.pinned), s.pinned);
  }
  rep.checks.push_back(d_check);
  if (bound_check.evaluated) rep.checks.push_back(bound_check);
  if (ricci_check.evaluated) rep.checks.push_back(ricci_check);

  // parameter-only identities
  if (spectral.stage == Stage::PropStage) {
    CertificateCheck scalar{"b^2 (n(1-2b) - (n-2)(1-2b+nb^2)) >= 0"};
    detail::fold_scalar(scalar, b * b * (n * (1 - 2 * b) - (n - 2) * (1 - 2 * b + n * b * b)));
    rep.checks.push_back(scalar);
    const double bmax = prop_stage_b_max(n);
    rep.checks.push_back(detail::identity_check("(n-2) b_max^2 = (2/n)(1-2 b_max)",
                                                std::abs((n - 2) * bmax * bmax - 2.0 / n * (1 - 2 * bmax))));
  }
  if (spectral.stage == Stage::FirstFamily) {
    const double sb = spectral.transform.b;
    const double sp_ = spectral.p;
    rep.checks.push_back(detail::identity_check(
        "p^2 + (n-2) b^2 (1-p)^2 = p", std::abs(sp_ * sp_ + (n - 2) * sb * sb * (1 - sp_) * (1 - sp_) - sp_)));
  }

  // The joining step to the 2-nonnegative cone is only claimed for n >= 4.
  if (stage == Stage::TwoPositiveExtension && n >= 4) {
    const auto alg = so_algebra(n);
    const int N = alg->dim();
    const auto two = ConeDescriptor::two_nonneg();
    const TransformParams terminal = prop_stage_terminal(n);
    struct OpSample {
      double bound_slack;
      double image_min;
    };
    const std::size_t op_samples = std::max<std::size_t>(1, samples / 10);
    auto ops = parallel_map(op_samples, threads, [&](std::size_t s) {
      CounterRng rng(seed ^ 0x5EED5EED5EED5EEDULL, s);
      const CurvOp R = sample_boundary(two, alg, rng);
      const double scale = R.norm();
      return OpSample{(eigenvalues(R)(0) + R.trace_lambda2() / (N - 1)) / scale,
                      eigenvalues(l_ab(R, terminal))(0) / scale};
    });
    CertificateCheck bound{"lambda_min(R) >= -2 tr(R)/(n(n-1)-2) on 2-nonnegative samples"};
    CertificateCheck image{"l_{a(b_max),b_max}(R) > 0 on 2-nonnegative samples"};
    image.strict = true;
    for (const auto& o : ops) {
      detail::fold_scalar(bound, o.bound_slack);
      detail::fold_scalar(image, o.image_min);
    }
    if (n == 4) {
      // Deterministic probe at the extreme spectrum of the 2-nonnegative boundary.
      const CurvOp probe = extreme_two_nonneg_n4();
      const double scale = probe.norm();
      detail::fold_scalar(bound, (eigenvalues(probe)(0) + probe.trace_lambda2() / (N - 1)) / scale);
      detail::fold_scalar(image, eigenvalues(l_ab(probe, terminal))(0) / scale);
    }
    rep.checks.push_back(bound);
    rep.checks.push_back(image);
  }

  for (auto& c : rep.checks) {
    detail::finalize(c);
    if (!c.passed)
      rep.failures.push_back(c.name + (c.kind == CheckKind::Identity
                                           ? ": residual " + std::to_string(c.residual)
                                           : ": min slack " + std::to_string(c.min_slack) + " (nondegenerate " +
                                                 std::to_string(c.min_slack_nondegenerate) + ")"));
    if (c.kind != CheckKind::Sampled) continue;
    if (c.min_slack < rep.min_slack) {
      rep.min_slack = c.min_slack;
      if (!c.argmin_spectrum.empty()) rep.argmin_spectrum = c.argmin_spectrum;
    }
    rep.min_slack_nondegenerate = std::min(rep.min_slack_nondegenerate, c.min_slack_nondegenerate);
  }
  return rep;
}

}  // namespace curvlab
