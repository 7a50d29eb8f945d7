#include "curvlab/curvature.hpp"
#include "oracles.hpp"

#include <catch_amalgamated.hpp>

using namespace curvlab;

namespace {

double rel(const Matrix& a, const Matrix& b) { return (a - b).norm() / std::max({a.norm(), b.norm(), 1e-300}); }
double rel(const CurvOp& a, const CurvOp& b) { return rel(a.coeffs(), b.coeffs()); }

}  // namespace

TEST_CASE("tensor picture of the identity and of a projector") {
  const auto alg = so_algebra(4);
  const Tensor4 T = to_tensor(CurvOp::identity(alg));
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k)
        for (int l = 0; l < 4; ++l) {
          double expected = 0.0;
          if (i != j && i == k && j == l) expected = 1.0;
          if (i != j && i == l && j == k) expected = -1.0;
          CHECK(T(i, j, k, l) == expected);
        }
  const auto alg3 = so_algebra(3);
  const Tensor4 P = to_tensor(rank_one_projector(0, 1, alg3));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) {
          const bool orbit = (i < 2 && j < 2 && k < 2 && l < 2 && i != j && k != l);
          if (!orbit) CHECK(P(i, j, k, l) == 0.0);
          else CHECK(std::abs(P(i, j, k, l)) == 1.0);
        }
}

TEST_CASE("tensor round trip and symmetries") {
  CounterRng rng(2);
  for (int n = 3; n <= 6; ++n) {
    const auto alg = so_algebra(n);
    for (int s = 0; s < 100; ++s) {
      const CurvOp R = random_curvature_operator(alg, rng);
      const Tensor4 T = to_tensor(R);
      CHECK(T.symmetry_defect() <= 1e-15 * T.norm());
      CHECK(rel(from_tensor(T, alg), R) <= 1e-15);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l)
              REQUIRE(T(i, j, k, l) == oracle::tensor(R.coeffs(), n, i, j, k, l));
    }
  }
  Tensor4 bad(3);
  bad(0, 1, 0, 2) = 1.0;
  CHECK_THROWS_AS(from_tensor(bad, so_algebra(3)), std::invalid_argument);
}

TEST_CASE("Bianchi projection") {
  CounterRng rng(3);
  {
    const auto alg = so_algebra(3);
    const Matrix G = random_gaussian_matrix(3, 3, rng);
    const CurvOp S(alg, G + G.transpose());
    CHECK(bianchi_project(S).coeffs() == S.coeffs());
  }
  for (int n = 4; n <= 6; ++n) {
    const auto alg = so_algebra(n);
    const int N = alg->dim();
    for (int s = 0; s < 100; ++s) {
      const Matrix G = random_gaussian_matrix(N, N, rng);
      const CurvOp S(alg, G + G.transpose());
      const CurvOp P = bianchi_project(S);
      CHECK(rel(bianchi_project(P), P) <= 1e-12);
      CHECK(bianchi_residual(P) <= 1e-13 * P.norm());
      // orthogonal: the removed part is orthogonal to every curvature operator
      const CurvOp R = random_curvature_operator(alg, rng);
      CHECK(std::abs(inner(S - P, R)) <= 1e-12 * S.norm() * R.norm());
      // commutes with the O(n) action
      const Matrix Q = random_orthogonal(n, rng);
      CHECK(rel(bianchi_project(conjugate(S, Q)), conjugate(P, Q)) <= 1e-12);
    }
  }
  // the volume form of ℝ⁴ spans Λ⁴ and projects to zero
  const auto alg = so_algebra(4);
  Tensor4 eps(4);
  std::array<int, 4> p{0, 1, 2, 3};
  do {
    eps(p[0], p[1], p[2], p[3]) = detail::perm_sign(p);
  } while (std::next_permutation(p.begin(), p.end()));
  const CurvOp vol = from_tensor(eps, alg);
  CHECK(vol.norm() > 1.0);
  CHECK(bianchi_project(vol).norm() <= 1e-15);
  CHECK_FALSE(is_curvature_operator(vol));
}

TEST_CASE("Ricci tensor") {
  CounterRng rng(4);
  for (int n = 3; n <= 6; ++n) {
    const auto alg = so_algebra(n);
    CHECK(ricci(CurvOp::identity(alg)) == (n - 1.0) * Matrix::Identity(n, n));
    Matrix d = Matrix::Zero(n, n);
    d(0, 0) = d(1, 1) = 1.0;
    CHECK(ricci(rank_one_projector(0, 1, alg)) == d);
    CHECK(ricci(wedge_op(Matrix::Identity(n, n), Matrix::Identity(n, n), alg)) == (n - 1.0) * Matrix::Identity(n, n));
    const CurvOp R = random_curvature_operator(alg, rng);
    CHECK(rel(ricci(R), oracle::ricci(R.coeffs(), n)) <= 1e-15);
    CHECK(std::abs(scal(R) - ricci(R).trace()) <= 1e-13 * R.norm());
    if (n >= 4) CHECK(ricci(random_weyl(alg, rng)).norm() <= 1e-13);
  }
}

TEST_CASE("irreducible decomposition") {
  CounterRng rng(5);
  for (int n = 3; n <= 6; ++n) {
    const auto alg = so_algebra(n);
    const auto dI = decompose(CurvOp::identity(alg));
    CHECK(rel(dI.r_identity, CurvOp::identity(alg)) <= 1e-15);
    CHECK(dI.r_ric0.norm() <= 1e-15);
    CHECK(dI.r_weyl.norm() <= 1e-14);
    CHECK(dI.lambda_bar == Catch::Approx(n - 1.0));
    CHECK(dI.sigma == 0.0);

    const Matrix T = random_traceless_symmetric(n, rng);
    const auto dT = decompose(wedge_op(T, Matrix::Identity(n, n), alg));
    CHECK(dT.r_identity.norm() <= 1e-14 * T.norm());
    CHECK(dT.r_weyl.norm() <= 1e-14 * T.norm());
    CHECK(rel(dT.ric, ((n - 2) / 2.0) * T) <= 1e-14);

    for (int s = 0; s < 50; ++s) {
      const CurvOp R = random_curvature_operator(alg, rng);
      const auto d = decompose(R);
      CHECK(rel(d.r_identity + d.r_ric0 + d.r_weyl, R) <= 1e-14);
      const double sc = R.norm() * R.norm();
      CHECK(std::abs(inner(d.r_identity, d.r_ric0)) <= 1e-13 * sc);
      CHECK(std::abs(inner(d.r_identity, d.r_weyl)) <= 1e-13 * sc);
      CHECK(std::abs(inner(d.r_ric0, d.r_weyl)) <= 1e-13 * sc);
      CHECK(ricci(d.r_weyl).norm() <= 1e-13 * R.norm());
      if (n == 3) CHECK(d.r_weyl.norm() <= 1e-14 * R.norm());
      CHECK(rel(d.r_identity, (d.lambda_bar / (n - 1)) * wedge_op(Matrix::Identity(n, n), Matrix::Identity(n, n), alg)) <= 1e-15);
      CHECK(rel(d.r_ric0, (2.0 / (n - 2)) * wedge_op(d.ric0, Matrix::Identity(n, n), alg)) <= 1e-15);
      CHECK(d.sigma == Catch::Approx(d.ric0.squaredNorm() / n));
    }
  }
  const auto alg = so_algebra(4);
  const auto dP = decompose(rank_one_projector(0, 1, alg));
  CHECK(dP.r_identity.norm() > 0.1);
  CHECK(dP.r_ric0.norm() > 0.1);
  CHECK(dP.r_weyl.norm() > 0.1);
  CHECK(dP.r_identity.norm() * dP.r_identity.norm() + dP.r_ric0.norm() * dP.r_ric0.norm() +
            dP.r_weyl.norm() * dP.r_weyl.norm() ==
        Catch::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("sharp product against the defining quadratic form") {
  CounterRng rng(6);
  for (int n = 3; n <= 4; ++n) {
    const auto alg = so_algebra(n);
    for (int s = 0; s < 10; ++s) {
      const CurvOp R = random_curvature_operator(alg, rng);
      const CurvOp S = random_curvature_operator(alg, rng);
      CHECK(rel(sharp(R, S).coeffs(), oracle::sharp(R.coeffs(), S.coeffs(), n)) <= 1e-13);
      // symmetric operators give an already symmetric matrix form
      const Matrix M = sharp_unsymmetrized(R, R);
      CHECK((M - M.transpose()).norm() <= 1e-11 * M.norm());
    }
  }
}

TEST_CASE("sharp product examples and symmetries") {
  CounterRng rng(7);
  for (int n = 3; n <= 6; ++n) {
    const auto alg = so_algebra(n);
    const CurvOp I = CurvOp::identity(alg);
    CHECK(rel(sharp(I, I), (n - 2.0) * I) <= 1e-15);
    CHECK(sharp(rank_one_projector(0, 1, alg)).norm() == 0.0);
    for (int s = 0; s < 200; ++s) {
      const CurvOp R = random_curvature_operator(alg, rng);
      const CurvOp S = random_curvature_operator(alg, rng);
      CHECK(rel(sharp(R, S), sharp(S, R)) <= 1e-11);
    }
    for (int s = 0; s < 20; ++s) {
      const CurvOp R = random_curvature_operator(alg, rng);
      const CurvOp S = random_curvature_operator(alg, rng);
      const Matrix Q = random_orthogonal(n, rng);
      CHECK(rel(sharp(conjugate(R, Q), conjugate(S, Q)), conjugate(sharp(R, S), Q)) <= 1e-9);
      CHECK(rel(ode_field(conjugate(R, Q)), conjugate(ode_field(R), Q)) <= 1e-9);
      CHECK((decompose(conjugate(R, Q)).r_weyl - conjugate(decompose(R).r_weyl, Q)).norm() <= 1e-9 * R.norm());
      // the field of a curvature operator is already a curvature operator
      CHECK(rel(ode_field(R), ode_field_raw(R)) <= 1e-10);
    }
  }
}

TEST_CASE("vector field examples") {
  CounterRng rng(8);
  for (int n = 3; n <= 6; ++n) {
    const auto alg = so_algebra(n);
    const CurvOp I = CurvOp::identity(alg);
    const double c = 1.7;
    CHECK(rel(ode_field(c * I), (c * c * (n - 1)) * I) <= 1e-15);
    const CurvOp P = rank_one_projector(0, 1, alg);
    CHECK(rel(ode_field(P), P) <= 1e-15);
    const Matrix Q = random_orthogonal(n, rng);
    const CurvOp Pq = rank_one_projector(Q.col(0), Q.col(1), alg);
    CHECK(rel(ode_field(Pq), Pq) <= 1e-13);
    CHECK(std::abs(Pq.norm() - 1.0) <= 1e-14);
    if (n >= 4) {
      const CurvOp W = random_weyl(alg, rng);
      CHECK(ricci(ode_field(W)).norm() <= 1e-10 * ode_field(W).norm());
    }
  }
}

TEST_CASE("tri and the potential") {
  CounterRng rng(9);
  for (int n = 3; n <= 6; ++n) {
    const auto alg = so_algebra(n);
    const int N = alg->dim();
    const CurvOp I = CurvOp::identity(alg);
    CHECK(tri(I, I, I) == Catch::Approx(2.0 * (n - 1) * N).epsilon(1e-14));
    CHECK(6 * potential(I) == Catch::Approx(tri(I, I, I)).epsilon(1e-14));
    for (int s = 0; s < 100; ++s) {
      const CurvOp A = random_curvature_operator(alg, rng);
      const CurvOp B = random_curvature_operator(alg, rng);
      const CurvOp C = random_curvature_operator(alg, rng);
      const double v = tri(A, B, C);
      const double scale = A.norm() * B.norm() * C.norm();
      for (double w : {tri(A, C, B), tri(B, A, C), tri(B, C, A), tri(C, A, B), tri(C, B, A)})
        CHECK(std::abs(w - v) <= 1e-10 * scale);
      // P(R) = (1/3) tr(R³ + R·R#)
      const Matrix& r = A.coeffs();
      CHECK(potential(A) == Catch::Approx(((r * r * r).trace() + (r * sharp(A).coeffs()).trace()) / 3.0).epsilon(1e-12));
    }
    for (int s = 0; s < 20; ++s) {
      const CurvOp R = random_curvature_operator(alg, rng);
      const CurvOp H = random_curvature_operator(alg, rng);
      const double h = 1e-5;
      const double fd = (potential(R + h * H) - potential(R - h * H)) / (2 * h);
      const double exact = inner(ode_field(R), H);
      CHECK(std::abs(fd - exact) <= 1e-6 * std::abs(exact) + 1e-9 * ode_field(R).norm() * H.norm());
    }
  }
}

TEST_CASE("invalid inputs") {
  const auto a3 = so_algebra(3);
  const auto a4 = so_algebra(4);
  CHECK_THROWS_AS(CurvOp(a3, Matrix::Identity(4, 4)), std::invalid_argument);
  CHECK_THROWS_AS(sharp(CurvOp::identity(a3), CurvOp::identity(a4)), std::invalid_argument);
  CHECK_THROWS_AS(CurvOp::identity(a3) + CurvOp::identity(a4), std::invalid_argument);
}

TEST_CASE("sign-fuzzed bases give the same invariants") {
  CounterRng rng(10);
  for (int n = 3; n <= 5; ++n) {
    const auto plain = so_algebra(n);
    const int N = plain->dim();
    std::vector<double> flips(static_cast<std::size_t>(N));
    for (auto& f : flips) f = rng.uniform() < 0.5 ? -1.0 : 1.0;
    const auto fuzz = make_so_algebra(n, flips);
    const Matrix F = Eigen::Map<const Vector>(flips.data(), N).asDiagonal();
    for (int s = 0; s < 10; ++s) {
      const CurvOp R = random_curvature_operator(plain, rng);
      const CurvOp S = random_curvature_operator(plain, rng);
      // the same operators written in the flipped basis
      const CurvOp Rf(fuzz, F * R.coeffs() * F);
      const CurvOp Sf(fuzz, F * S.coeffs() * F);
      CHECK(rel(ricci(Rf), ricci(R)) <= 1e-14);
      CHECK(rel(F * sharp(Rf, Sf).coeffs() * F, sharp(R, S).coeffs()) <= 1e-13);
      CHECK(rel(F * ode_field(Rf).coeffs() * F, ode_field(R).coeffs()) <= 1e-13);
      CHECK(rel(F * decompose(Rf).r_weyl.coeffs() * F, decompose(R).r_weyl.coeffs()) <= 1e-13);
      CHECK(std::abs(tri(Rf, Sf, Rf) - tri(R, S, R)) <= 1e-12 * R.norm() * R.norm() * S.norm());
      CHECK(rel(eigenvalues(Rf), eigenvalues(R)) <= 1e-13);
      const Matrix Q = random_orthogonal(n, rng);
      CHECK(rel(F * conjugate(Rf, Q).coeffs() * F, conjugate(R, Q).coeffs()) <= 1e-13);
    }
  }
}
