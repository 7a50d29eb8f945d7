#include "curvlab/transform.hpp"
#include "curvlab/verify.hpp"

#include <catch_amalgamated.hpp>

using namespace curvlab;

namespace {

double rel(const Matrix& a, const Matrix& b) { return (a - b).norm() / std::max({a.norm(), b.norm(), 1e-300}); }
double rel(const CurvOp& a, const CurvOp& b) { return rel(a.coeffs(), b.coeffs()); }

TransformParams params(int n, double a, double b) { return {a, b, n}; }

}  // namespace

TEST_CASE("l_ab eigenvalues and inverse") {
  CounterRng rng(1);
  for (int n = 3; n <= 6; ++n) {
    const auto alg = so_algebra(n);
    const CurvOp I = CurvOp::identity(alg);
    const CurvOp R = random_curvature_operator(alg, rng);
    CHECK(rel(l_ab(R, params(n, 0, 0)), R) == 0.0);
    for (int s = 0; s < 20; ++s) {
      const TransformParams p = detail::random_params(n, rng);
      CHECK(rel(l_ab(I, p), p.identity_eigenvalue() * I) <= 1e-14);
      const CurvOp ric0_part = decompose(R).r_ric0;
      CHECK(rel(l_ab(ric0_part, p), p.ric0_eigenvalue() * ric0_part) <= 1e-13);
      if (n >= 4) {
        const CurvOp W = random_weyl(alg, rng);
        CHECK(rel(l_ab(W, p), W) <= 1e-13);
        CHECK(D_ab_definition(W, p).norm() <= 1e-12 * W.norm() * W.norm());
      }
      CHECK(rel(l_ab_inverse(l_ab(R, p), p), R) <= 1e-12);
      CHECK(rel(l_ab(l_ab_inverse(R, p), p), R) <= 1e-12);
      CHECK(rel(l_ab(R, p), l_ab_via_ricci(R, p)) <= 1e-12);
      const Matrix Q = random_orthogonal(n, rng);
      CHECK(rel(l_ab(conjugate(R, Q), p), conjugate(l_ab(R, p), Q)) <= 1e-12);
    }
  }
}

TEST_CASE("singular parameters are rejected") {
  const int n = 4;
  const auto alg = so_algebra(n);
  const CurvOp R = CurvOp::identity(alg);
  CHECK_THROWS_AS(l_ab(R, params(n, -1.0 / (2 * (n - 1)), 0.1)), std::domain_error);
  CHECK_THROWS_AS(l_ab_inverse(R, params(n, 0.1, -1.0 / (n - 2))), std::domain_error);
  CHECK_THROWS_AS(D_ab_closed_form(R, params(n, -1.0 / (2 * (n - 1)), 0.0)), std::domain_error);
  CHECK_THROWS_AS(l_ab(CurvOp::identity(3), params(n, 0.1, 0.1)), std::invalid_argument);
  CHECK_NOTHROW(l_ab(R, params(n, -1.0 / (2 * (n - 1)) + 1e-6, 0.0)));
}

TEST_CASE("D_ab: definition against closed form") {
  CounterRng rng(2);
  for (int n = 3; n <= 6; ++n) {
    const auto alg = so_algebra(n);
    CHECK(D_ab_definition(random_curvature_operator(alg, rng), params(n, 0, 0)).norm() <= 1e-13);
    for (int s = 0; s < 200; ++s) {
      const TransformParams p = detail::random_params(n, rng);
      const CurvOp R = random_curvature_operator(alg, rng);
      const CurvOp D = D_ab_definition(R, p);
      CHECK(rel(D, D_ab_closed_form(R, p)) <= 1e-9);
      // closed form ignores the Weyl part by construction
      CHECK(rel(D_ab_closed_form(R, p), D_ab_closed_form(R - decompose(R).r_weyl, p)) <= 1e-13);
      if (n >= 4) CHECK(rel(D_ab_definition(R + random_weyl(alg, rng), p), D) <= 1e-10);
    }
    // Einstein input: D = 2a λ̄² I
    const TransformParams p = params(n, 0.3, 0.2);
    const CurvOp I = CurvOp::identity(alg);
    const double lb = n - 1.0;
    CHECK(rel(D_ab_definition(I, p), (2 * p.a * lb * lb) * I) <= 1e-13);
    CHECK(rel(D_ab_closed_form(I, p), (2 * p.a * lb * lb) * I) <= 1e-13);
  }
}

TEST_CASE("Weyl part of D at Ricci-type operators") {
  CounterRng rng(3);
  for (int n = 4; n <= 6; ++n) {
    const auto alg = so_algebra(n);
    for (int s = 0; s < 20; ++s) {
      const TransformParams p = detail::random_params(n, rng);
      const CurvOp R = ricci_type_operator(random_symmetric(n, rng), alg);
      const auto d = decompose(R);
      const CurvOp DW = decompose(D_ab_definition(R, p)).r_weyl;
      const CurvOp expected = ((n - 2) * p.b * p.b + 2 * p.b) * decompose(wedge_op(d.ric0, d.ric0, alg)).r_weyl;
      CHECK((DW - expected).norm() <= 1e-10 * D_ab_definition(R, p).norm());
    }
  }
}

TEST_CASE("spectra of D on Ricci-type operators") {
  CounterRng rng(4);
  for (int n = 3; n <= 6; ++n) {
    const auto alg = so_algebra(n);
    const int N = alg->dim();
    // Einstein case
    const TransformParams p0 = params(n, 0.3, 0.2);
    const std::vector<double> zero(static_cast<std::size_t>(n), 0.0);
    for (double d : d_spectrum(zero, 1.5, p0)) CHECK(d == Catch::Approx(2 * 0.3 * 1.5 * 1.5));
    for (double r : r_spectrum(zero, 1.5, p0)) CHECK(r == Catch::Approx(2 * 0.3 * (n - 1) * 1.5 * 1.5));
    for (int s = 0; s < 100; ++s) {
      const TransformParams p = detail::random_params(n, rng);
      std::vector<double> l;
      double lb = 0.0;
      const Matrix ric = detail::random_spectrum_ricci(n, rng, &l, &lb);
      const CurvOp R = ricci_type_operator(ric, alg);
      const CurvOp D = D_ab_closed_form(R, p);
      const auto d = d_spectrum(l, lb, p);
      const auto r = r_spectrum(l, lb, p);
      // diagonal in the pair basis of the Ricci eigenframe
      Matrix off = D.coeffs();
      off.diagonal().setZero();
      CHECK(off.norm() <= 1e-10 * D.norm());
      CHECK(off.norm() == 0.0);
      for (int a = 0; a < N; ++a) CHECK(std::abs(D.coeffs()(a, a) - d[a]) <= 1e-10 * D.norm());
      const Matrix ricD = ricci(D);
      for (int i = 0; i < n; ++i) CHECK(std::abs(ricD(i, i) - r[i]) <= 1e-10 * ricD.norm());
      // the definition path agrees as well
      const CurvOp Dd = D_ab_definition(R, p);
      Matrix off_d = Dd.coeffs();
      off_d.diagonal().setZero();
      CHECK(off_d.norm() <= 1e-10 * Dd.norm());
    }
  }
  // n = 3, λ = (2, -1, -1), λ̄ = 1, (a, b) = (0.3, 0.2)
  const auto alg = so_algebra(3);
  const TransformParams p = params(3, 0.3, 0.2);
  const std::vector<double> l{2, -1, -1};
  const CurvOp R = ricci_type_operator(Eigen::Vector3d(3, 0, 0).asDiagonal(), alg);
  const CurvOp D = D_ab_closed_form(R, p);
  const auto d = d_spectrum(l, 1.0, p);
  const auto r = r_spectrum(l, 1.0, p);
  for (int a = 0; a < 3; ++a) CHECK(D.coeffs()(a, a) == Catch::Approx(d[a]).epsilon(1e-12));
  const Matrix ricD = ricci(D);
  for (int i = 0; i < 3; ++i) CHECK(ricD(i, i) == Catch::Approx(r[i]).epsilon(1e-12));
  CHECK_THROWS_AS(d_spectrum({1, 1, 1}, 1.0, p), std::invalid_argument);
  CHECK_THROWS_AS(r_spectrum({1, -1}, 1.0, p), std::invalid_argument);
}
