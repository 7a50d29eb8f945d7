#pragma once

// The equivariant linear maps l_{a,b} on S²_B(so(n)) and the difference
//
//   D_{a,b}(R) = l⁻¹((lR)² + (lR)#) - R² - R#
//
// evaluated both by composition and by its Weyl-free closed form in the Ricci
// tensor, plus the closed-form spectra of D on Ricci-type operators.

#include "curvlab/curvature.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace curvlab {

inline constexpr double kSingularMargin = 1e-10;

struct TransformParams {
  double a = 0.0;
  double b = 0.0;
  int n = 3;

  /// Eigenvalue of l_{a,b} on ⟨I⟩.
  double identity_eigenvalue() const { return 1.0 + 2.0 * (n - 1) * a; }
  /// Eigenvalue of l_{a,b} on ⟨Ric₀⟩.
  double ric0_eigenvalue() const { return 1.0 + (n - 2) * b; }

  void validate() const {
    if (n < 3) throw std::invalid_argument("transform requires n >= 3");
    if (std::abs(identity_eigenvalue()) < kSingularMargin || std::abs(ric0_eigenvalue()) < kSingularMargin)
      throw std::domain_error("l_{a,b} is singular for a = " + std::to_string(a) + ", b = " + std::to_string(b));
  }
};

inline void check_params(const CurvOp& R, const TransformParams& p) {
  p.validate();
  if (R.n() != p.n) throw std::invalid_argument("transform parameters were built for a different n");
}

inline CurvOp l_ab(const CurvOp& R, const TransformParams& p) {
  check_params(R, p);
  const auto d = decompose(R);
  const int n = p.n;
  return R + (2.0 * (n - 1) * p.a) * d.r_identity + ((n - 2) * p.b) * d.r_ric0;
}

inline CurvOp l_ab_inverse(const CurvOp& R, const TransformParams& p) {
  check_params(R, p);
  const auto d = decompose(R);
  return d.r_identity * (1.0 / p.identity_eigenvalue()) + d.r_ric0 * (1.0 / p.ric0_eigenvalue()) + d.r_weyl;
}

/// l(R) = R + 2b Ric∧id + 2(n-1)(a-b) R_I.
inline CurvOp l_ab_via_ricci(const CurvOp& R, const TransformParams& p) {
  check_params(R, p);
  const int n = p.n;
  const auto d = decompose(R);
  return R + (2.0 * p.b) * wedge_op(d.ric, Matrix::Identity(n, n), R.algebra_ptr()) +
         (2.0 * (n - 1) * (p.a - p.b)) * d.r_identity;
}

/// X_{a,b}(R) = l⁻¹((lR)² + (lR)#), the pulled-back vector field.
inline CurvOp pulled_back_field(const CurvOp& R, const TransformParams& p) {
  return l_ab_inverse(ode_field(l_ab(R, p)), p);
}

inline CurvOp D_ab_definition(const CurvOp& R, const TransformParams& p) {
  return pulled_back_field(R, p) - ode_field(R);
}

inline CurvOp D_ab_closed_form(const CurvOp& R, const TransformParams& p) {
  check_params(R, p);
  const int n = p.n;
  const double a = p.a;
  const double b = p.b;
  const double denom = n + 2.0 * n * (n - 1) * a;
  if (std::abs(denom) < kSingularMargin) throw std::domain_error("D_{a,b}: identity-term denominator vanishes");

  const auto d = decompose(R);
  const auto& alg = R.algebra_ptr();
  const Matrix id = Matrix::Identity(n, n);
  const double tr_ric0_sq = d.ric0.squaredNorm();
  const double id_coeff = tr_ric0_sq / denom * (n * b * b * (1 - 2 * b) - 2 * (a - b) * (1 - 2 * b + n * b * b));

  return ((n - 2) * b * b - 2 * (a - b)) * wedge_op(d.ric0, d.ric0, alg) + (2 * a) * wedge_op(d.ric, d.ric, alg) +
         (2 * b * b) * wedge_op(d.ric0 * d.ric0, id, alg) + id_coeff * CurvOp::identity(alg);
}

namespace detail {

inline double check_traceless_spectrum(const std::vector<double>& lambdas, const TransformParams& p) {
  p.validate();
  if (static_cast<int>(lambdas.size()) != p.n)
    throw std::invalid_argument("spectrum length does not match n");
  double sum = 0.0;
  double scale = 0.0;
  double sq = 0.0;
  for (double l : lambdas) {
    sum += l;
    scale = std::max(scale, std::abs(l));
    sq += l * l;
  }
  if (std::abs(sum) > scaled_tol(1e-12, scale, 1e-12))
    throw std::invalid_argument("traceless Ricci eigenvalues must sum to zero");
  return sq / p.n;  // σ
}

}  // namespace detail

/// Eigenvalues d_ij of D_{a,b} on e_i∧e_j (pair-index order) for the Ricci-type
/// operator whose traceless Ricci eigenvalues are `lambdas`.
inline std::vector<double> d_spectrum(const std::vector<double>& lambdas, double lambda_bar, const TransformParams& p) {
  const double sigma = detail::check_traceless_spectrum(lambdas, p);
  const int n = p.n;
  const double a = p.a;
  const double b = p.b;
  const double sigma_term =
      sigma / p.identity_eigenvalue() * (n * b * b * (1 - 2 * b) - 2 * (a - b) * (1 - 2 * b + n * b * b));
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double li = lambdas[static_cast<std::size_t>(i)];
      const double lj = lambdas[static_cast<std::size_t>(j)];
      out.push_back(((n - 2) * b * b - 2 * (a - b)) * li * lj + 2 * a * (lambda_bar + li) * (lambda_bar + lj) +
                    b * b * (li * li + lj * lj) + sigma_term);
    }
  return out;
}

/// Eigenvalues r_i of Ric(D_{a,b}) on e_i.
inline std::vector<double> r_spectrum(const std::vector<double>& lambdas, double lambda_bar, const TransformParams& p) {
  const double sigma = detail::check_traceless_spectrum(lambdas, p);
  const int n = p.n;
  const double a = p.a;
  const double b = p.b;
  const double sigma_term = sigma / p.identity_eigenvalue() * (n * n * b * b - 2.0 * (n - 1) * (a - b) * (1 - 2 * b));
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n));
  for (double li : lambdas)
    out.push_back(-2 * b * li * li + 2 * a * lambda_bar * (n - 2) * li + 2 * a * (n - 1) * lambda_bar * lambda_bar +
                  sigma_term);
  return out;
}

}  // namespace curvlab
