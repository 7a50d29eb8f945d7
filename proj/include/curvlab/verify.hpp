#pragma once

// Randomized identity suites. Each suite draws `samples` independent cases
// from per-sample RNG streams and reports the maximum residual of every
// assertion; aggregation is a max, so results do not depend on threading.

#include "curvlab/parallel.hpp"
#include "curvlab/transform.hpp"

#include <algorithm>
#include <cstdint>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace curvlab {

struct Assertion {
  std::string name;
  double max_residual = 0.0;
  double tolerance = 0.0;
  std::size_t cases = 0;
  bool passed() const { return max_residual <= tolerance; }
};

struct SuiteReport {
  std::string suite;
  std::string certifies;   // what the suite certifies, in words
  int n = 3;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  std::vector<Assertion> assertions;

  bool passed() const {
    return std::all_of(assertions.begin(), assertions.end(), [](const Assertion& a) { return a.passed(); });
  }
};

struct SuiteOptions {
  int n = 4;
  std::size_t samples = 100;
  std::uint64_t seed = 1;
  std::optional<double> tol;   // overrides every assertion tolerance when set
  unsigned threads = 1;
};

inline double rel_residual(const Matrix& a, const Matrix& b) {
  const double scale = std::max({a.norm(), b.norm(), 1e-300});
  return (a - b).norm() / scale;
}

inline double rel_residual(const CurvOp& a, const CurvOp& b) { return rel_residual(a.coeffs(), b.coeffs()); }

inline double rel_residual(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

namespace detail {

using Residuals = std::vector<double>;

struct SuiteSpec {
  std::string certifies;
  std::vector<std::pair<std::string, double>> assertions;   // name, default tolerance
  std::function<Residuals(const AlgebraPtr&, CounterRng&, std::size_t)> run;
  bool exhaustive = false;   // runs once regardless of `samples`
};

inline Matrix traceless_part(const Matrix& A) {
  const int n = static_cast<int>(A.rows());
  return A - (A.trace() / n) * Matrix::Identity(n, n);
}

/// Transform parameters with both eigenvalues of l_{a,b} at least `margin` away from 0.
inline TransformParams random_params(int n, CounterRng& rng, double margin = 0.05) {
  TransformParams p;
  p.n = n;
  do {
    p.a = rng.uniform(-1.0, 1.0);
    p.b = rng.uniform(-1.0, 1.0);
  } while (std::abs(p.identity_eigenvalue()) < margin || std::abs(p.ric0_eigenvalue()) < margin);
  return p;
}

inline Matrix random_spectrum_ricci(int n, CounterRng& rng, std::vector<double>* lambdas, double* lambda_bar) {
  std::vector<double> l(static_cast<std::size_t>(n));
  double mean = 0.0;
  for (auto& x : l) {
    x = rng.normal();
    mean += x;
  }
  mean /= n;
  for (auto& x : l) x -= mean;
  const double lb = rng.normal();
  Matrix D = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) D(i, i) = lb + l[static_cast<std::size_t>(i)];
  if (lambdas) *lambdas = l;
  if (lambda_bar) *lambda_bar = lb;
  return D;
}

inline SuiteSpec suite_spec(const std::string& name) {
  if (name == "basis")
    return {"orthonormality of the pair basis, structure constants against explicit commutators, coordinate "
            "round trips",
            {{"generator-orthonormality", 1e-14},
             {"structure-constants-vs-commutators", 1e-14},
             {"bracket-closure", 1e-14},
             {"coords-round-trip", 1e-14},
             {"wedge-identity", 1e-14}},
            [](const AlgebraPtr& alg, CounterRng& rng, std::size_t) -> Residuals {
              const auto& B = alg->basis;
              const int N = B.dim();
              const int n = B.n();
              double ortho = 0.0;
              double sc = 0.0;
              double closure = 0.0;
              std::vector<Matrix> gens;
              for (int a = 0; a < N; ++a) gens.push_back(B.generator(a));
              Matrix C = Matrix::Zero(N * N, N);
              for (const auto& t : alg->constants.triples) C(t.alpha * N + t.beta, t.gamma) = t.c;
              for (int a = 0; a < N; ++a)
                for (int b = 0; b < N; ++b) {
                  ortho = std::max(ortho, std::abs(so_inner(gens[a], gens[b]) - (a == b ? 1.0 : 0.0)));
                  const Matrix br = gens[a] * gens[b] - gens[b] * gens[a];
                  Matrix rebuilt = Matrix::Zero(n, n);
                  for (int g = 0; g < N; ++g) {
                    sc = std::max(sc, std::abs(so_inner(br, gens[g]) - C(a * N + b, g)));
                    rebuilt += C(a * N + b, g) * gens[g];
                  }
                  closure = std::max(closure, (br - rebuilt).norm());
                }
              const Matrix A = random_gaussian_matrix(n, n, rng);
              const Matrix skew = A - A.transpose();
              const double round = (B.from_coords(B.coords(skew)) - skew).norm() / skew.norm();
              const double wid = (wedge(Matrix::Identity(n, n), Matrix::Identity(n, n), B) -
                                  Matrix::Identity(N, N)).norm();
              return {ortho, sc, closure, round, wid};
            },
            true};

  if (name == "sharp")
    return {"symmetry, bilinearity and O(n)-equivariance of the sharp product, its invariant description via the "
            "adjoint map, and the Ricci tensor of R^2 + R# in a Ricci eigenframe",
            {{"symmetry", 1e-9},
             {"bilinearity", 1e-9},
             {"equivariance", 1e-9},
             {"invariant-form", 1e-10},
             {"identity-sharp-identity", 1e-12},
             {"ricci-of-field", 1e-10}},
            [](const AlgebraPtr& alg, CounterRng& rng, std::size_t) -> Residuals {
              const int n = alg->n();
              const int N = alg->dim();
              const CurvOp R = random_curvature_operator(alg, rng);
              const CurvOp S = random_curvature_operator(alg, rng);
              const CurvOp T = random_curvature_operator(alg, rng);
              const double x = rng.normal();
              const double sym = rel_residual(sharp(R, S), sharp(S, R));
              const double lin = rel_residual(sharp(R + x * T, S), sharp(R, S) + x * sharp(T, S));
              const Matrix Q = random_orthogonal(n, rng);
              const double eq = rel_residual(sharp(conjugate(R, Q), conjugate(S, Q)), conjugate(sharp(R, S), Q));
              // R#S = ad (R∧S) adᵀ with ad_{γ,(α,β)} = c_{αβγ}, on Λ²(so(n)) with basis b_α∧b_β
              const SoBasis big(N);
              Matrix ad = Matrix::Zero(N, big.dim());
              for (const auto& t : alg->constants.triples)
                if (t.alpha < t.beta) {
                  const auto e = big.bivector(t.alpha, t.beta);
                  ad(t.gamma, e.index) += e.sign * t.c;
                }
              const Matrix RS = wedge(R.coeffs(), S.coeffs(), big);
              const double inv = rel_residual(sharp(R, S).coeffs(), ad * RS * ad.transpose());
              const CurvOp I = CurvOp::identity(alg);
              const double ii = rel_residual(sharp(I, I), (n - 2.0) * I);
              // Ric(R² + R#)_ij = Σ_k μ_k R̃(e_i∧e_k, e_j∧e_k) in the eigenframe of Ric
              const auto es = eigensystem(ricci(R));
              const Matrix& Qr = es.eigenvectors();
              const Matrix L = induced_rotation(Qr, alg->basis);
              const CurvOp Rt = R.with(L.transpose() * R.coeffs() * L);
              const Tensor4 Tt = to_tensor(Rt);
              Matrix rhs = Matrix::Zero(n, n);
              for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                  for (int k = 0; k < n; ++k) rhs(i, j) += es.eigenvalues()(k) * Tt(i, k, j, k);
              const double ric = rel_residual(Matrix(Qr.transpose() * ricci(ode_field(R)) * Qr), rhs);
              return {sym, lin, eq, inv, ii, ric};
            }};

  if (name == "lemma-sharp-identity")
    return {"R + R#I = Ric wedge id = (n-1) R_I + ((n-2)/2) R_Ric0 for curvature operators",
            {{"R+R#I=Ric^id", 1e-10}, {"Ric^id=decomposition", 1e-10}, {"Ric(I)=(n-1)id", 1e-12}},
            [](const AlgebraPtr& alg, CounterRng& rng, std::size_t) -> Residuals {
              const int n = alg->n();
              const CurvOp R = random_curvature_operator(alg, rng);
              const CurvOp I = CurvOp::identity(alg);
              const auto d = decompose(R);
              const CurvOp rw = wedge_op(d.ric, Matrix::Identity(n, n), alg);
              return {rel_residual(R + sharp(R, I), rw),
                      rel_residual(rw, (n - 1.0) * d.r_identity + (0.5 * (n - 2)) * d.r_ric0),
                      rel_residual(ricci(I), Matrix((n - 1.0) * Matrix::Identity(n, n)))};
            }};

  if (name == "ricci-type")
    return {"the vector field, its Weyl part and its Ricci tensor at operators with vanishing Weyl curvature",
            {{"field-formula", 1e-10}, {"weyl-part", 1e-10}, {"ricci-formula", 1e-10}},
            [](const AlgebraPtr& alg, CounterRng& rng, std::size_t) -> Residuals {
              const int n = alg->n();
              const Matrix id = Matrix::Identity(n, n);
              const CurvOp R = ricci_type_operator(random_symmetric(n, rng), alg);
              const auto d = decompose(R);
              const Matrix r0sq = d.ric0 * d.ric0;
              const Matrix r0sq0 = traceless_part(r0sq);
              const CurvOp I = CurvOp::identity(alg);
              const CurvOp X = ode_field(R);
              const CurvOp formula = (1.0 / (n - 2)) * wedge_op(d.ric0, d.ric0, alg) +
                                     (2.0 * d.lambda_bar / (n - 1)) * wedge_op(d.ric0, id, alg) -
                                     (2.0 / ((n - 2.0) * (n - 2.0))) * wedge_op(r0sq0, id, alg) +
                                     (d.lambda_bar * d.lambda_bar / (n - 1) + d.sigma / (n - 2)) * I;
              const CurvOp weyl = decompose((1.0 / (n - 2)) * wedge_op(d.ric0, d.ric0, alg)).r_weyl;
              const Matrix ric_formula = (-2.0 / (n - 2)) * r0sq0 + ((n - 2.0) / (n - 1)) * d.lambda_bar * d.ric0 +
                                         (d.lambda_bar * d.lambda_bar + d.sigma) * id;
              // the Weyl parts are compared relative to the whole field
              const double wscale = std::max(X.norm(), 1e-300);
              return {rel_residual(X, formula), (decompose(X).r_weyl - weyl).norm() / wscale,
                      rel_residual(ricci(X), ric_formula)};
            }};

  if (name == "thm2")
    return {"closed form of D_ab = l^-1((lR)^2 + (lR)#) - R^2 - R# in terms of the Ricci tensor, and its "
            "independence of the Weyl curvature",
            {{"definition-vs-closed-form", 1e-9},
             {"weyl-independence", 1e-10},
             {"l-inverse", 1e-12},
             {"l-via-ricci", 1e-12},
             {"l-self-adjoint", 1e-12}},
            [](const AlgebraPtr& alg, CounterRng& rng, std::size_t) -> Residuals {
              const int n = alg->n();
              const TransformParams p = random_params(n, rng);
              const CurvOp R = random_curvature_operator(alg, rng);
              const CurvOp D = D_ab_definition(R, p);
              const double main = rel_residual(D, D_ab_closed_form(R, p));
              double weyl = 0.0;
              if (n >= 4) {
                const CurvOp W = random_weyl(alg, rng);
                weyl = rel_residual(D_ab_definition(R + W, p), D);
              }
              const double inv = rel_residual(l_ab_inverse(l_ab(R, p), p), R);
              const double via = rel_residual(l_ab(R, p), l_ab_via_ricci(R, p));
              const CurvOp S = random_curvature_operator(alg, rng);
              const CurvOp lR = l_ab(R, p);
              const CurvOp lS = l_ab(S, p);
              const double adj = std::abs(inner(lR, S) - inner(R, lS)) / std::max(lR.norm() * S.norm(), R.norm() * lS.norm());
              return {main, weyl, inv, via, adj};
            }};

  if (name == "corollary-spectra")
    return {"eigenvalues d_ij of D_ab on e_i^e_j and r_i of Ric(D_ab) at Ricci-type operators with diagonal Ricci",
            {{"d_ij", 1e-10}, {"r_i", 1e-10}, {"d_ij-rotated", 1e-10}},
            [](const AlgebraPtr& alg, CounterRng& rng, std::size_t) -> Residuals {
              const int n = alg->n();
              const auto& B = alg->basis;
              const TransformParams p = random_params(n, rng);
              std::vector<double> lambdas;
              double lb = 0.0;
              const Matrix ric = random_spectrum_ricci(n, rng, &lambdas, &lb);
              const CurvOp R = ricci_type_operator(ric, alg);
              const CurvOp D = D_ab_definition(R, p);
              const auto d = d_spectrum(lambdas, lb, p);
              const auto r = r_spectrum(lambdas, lb, p);
              Matrix dexp = Matrix::Zero(B.dim(), B.dim());
              for (int a = 0; a < B.dim(); ++a) dexp(a, a) = d[static_cast<std::size_t>(a)];
              Matrix rexp = Matrix::Zero(n, n);
              for (int i = 0; i < n; ++i) rexp(i, i) = r[static_cast<std::size_t>(i)];
              const double dres = rel_residual(D.coeffs(), dexp);
              const double rres = rel_residual(ricci(D), rexp);
              // same spectrum in a random frame, compared as sorted eigenvalues
              const Matrix Q = random_orthogonal(n, rng);
              const CurvOp Dq = D_ab_definition(ricci_type_operator(Q * ric * Q.transpose(), alg), p);
              Vector ds = Eigen::Map<const Vector>(d.data(), static_cast<Eigen::Index>(d.size()));
              std::sort(ds.data(), ds.data() + ds.size());
              const double rot = rel_residual(Matrix(eigenvalues(Dq)), Matrix(ds));
              return {dres, rres, rot};
            }};

  if (name == "gradient")
    return {"P(R) = tri(R,R,R)/6 has gradient R^2 + R# on S^2_B: central differences and a cubic homogeneity "
            "check",
            {{"central-difference", 1e-6}, {"homogeneity", 1e-12}},
            [](const AlgebraPtr& alg, CounterRng& rng, std::size_t) -> Residuals {
              const CurvOp R = random_curvature_operator(alg, rng);
              const CurvOp H = random_curvature_operator(alg, rng);
              const double h = 1e-5;
              const double fd = (potential(R + h * H) - potential(R - h * H)) / (2 * h);
              const double exact = inner(ode_field(R), H);
              const double scale = std::max(std::abs(exact), ode_field(R).norm() * H.norm());
              const double k = 1.0 + rng.uniform();
              const double cube = k * k * k * std::pow(R.norm(), 3);
              return {std::abs(fd - exact) / scale, std::abs(potential(k * R) - k * k * k * potential(R)) / cube};
            }};

  if (name == "tri-symmetry")
    return {"full permutation symmetry of tri(R1,R2,R3) = tr((R1R2 + R2R1 + 2 R1#R2) R3)",
            {{"permutation-symmetry", 1e-10}},
            [](const AlgebraPtr& alg, CounterRng& rng, std::size_t) -> Residuals {
              const CurvOp A = random_curvature_operator(alg, rng);
              const CurvOp B = random_curvature_operator(alg, rng);
              const CurvOp C = random_curvature_operator(alg, rng);
              const double v[6] = {tri(A, B, C), tri(A, C, B), tri(B, A, C), tri(B, C, A), tri(C, A, B), tri(C, B, A)};
              const double scale = A.norm() * B.norm() * C.norm();
              double worst = 0.0;
              for (double x : v) worst = std::max(worst, std::abs(x - v[0]) / scale);
              return {worst};
            }};

  throw std::invalid_argument("unknown suite '" + name + "'");
}

}  // namespace detail

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"basis", "sharp", "lemma-sharp-identity", "ricci-type",
                                              "thm2", "corollary-spectra", "gradient", "tri-symmetry"};
  return names;
}

inline SuiteReport run_suite(const std::string& name, const SuiteOptions& opt) {
  if (opt.n < 3) throw std::invalid_argument("suites require n >= 3");
  const auto spec = detail::suite_spec(name);
  const auto alg = so_algebra(opt.n);
  SuiteReport rep;
  rep.suite = name;
  rep.certifies = spec.certifies;
  rep.n = opt.n;
  rep.seed = opt.seed;
  rep.samples = spec.exhaustive ? 1 : opt.samples;
  const auto results = parallel_map(rep.samples, opt.threads, [&](std::size_t i) {
    CounterRng rng(opt.seed, i);
    return spec.run(alg, rng, i);
  });
  for (std::size_t k = 0; k < spec.assertions.size(); ++k) {
    Assertion a{spec.assertions[k].first, 0.0, opt.tol.value_or(spec.assertions[k].second), results.size()};
    for (const auto& r : results)
      a.max_residual = std::isnan(r[k]) ? std::numeric_limits<double>::infinity() : std::max(a.max_residual, r[k]);
    rep.assertions.push_back(a);
  }
  return rep;
}

}  // namespace curvlab
