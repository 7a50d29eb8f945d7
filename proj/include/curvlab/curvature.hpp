#pragma once

// Symmetric operators on Λ²ℝⁿ, the space of curvature operators S²_B(so(n)),
// and the algebra that acts on it: Bianchi projection, Ricci contraction,
// irreducible decomposition, Hamilton's # product, tri and the potential P,
// and the vector field X(R) = R² + R#.
//
// Trace conventions: trace_lambda2(R) is the trace of the N×N matrix, while
// scal(R) = tr Ric(R) = 2 · trace_lambda2(R).

#include "curvlab/rng.hpp"
#include "curvlab/so_algebra.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace curvlab {

/// Relative tolerance helper: tol · scale, never below the absolute floor.
inline double scaled_tol(double tol, double scale, double floor = 1e-14) {
  return std::max(tol * scale, floor);
}

/// A symmetric operator on Λ²ℝⁿ in the pair basis of its algebra. It is a
/// curvature operator when it also satisfies the first Bianchi identity.
class CurvOp {
 public:
  CurvOp() = default;
  CurvOp(AlgebraPtr algebra, Matrix coeffs) : algebra_(std::move(algebra)), coeffs_(std::move(coeffs)) {
    if (!algebra_) throw std::invalid_argument("CurvOp: null algebra");
    if (coeffs_.rows() != algebra_->dim() || coeffs_.cols() != algebra_->dim())
      throw std::invalid_argument("CurvOp: coefficient matrix is " + std::to_string(coeffs_.rows()) + "x" +
                                  std::to_string(coeffs_.cols()) + ", expected N = " +
                                  std::to_string(algebra_->dim()));
  }

  static CurvOp zero(AlgebraPtr algebra) {
    const int N = algebra->dim();
    return {std::move(algebra), Matrix::Zero(N, N)};
  }
  static CurvOp zero(int n) { return zero(so_algebra(n)); }
  static CurvOp identity(AlgebraPtr algebra) {
    const int N = algebra->dim();
    return {std::move(algebra), Matrix::Identity(N, N)};
  }
  static CurvOp identity(int n) { return identity(so_algebra(n)); }

  int n() const { return algebra_->n(); }
  int dim() const { return algebra_->dim(); }
  const Matrix& coeffs() const noexcept { return coeffs_; }
  const SoAlgebra& algebra() const { return *algebra_; }
  const AlgebraPtr& algebra_ptr() const noexcept { return algebra_; }

  double norm() const { return coeffs_.norm(); }
  double trace_lambda2() const { return coeffs_.trace(); }
  CurvOp with(Matrix m) const { return {algebra_, std::move(m)}; }

  CurvOp& operator+=(const CurvOp& o) {
    check_same(o);
    coeffs_ += o.coeffs_;
    return *this;
  }
  CurvOp& operator-=(const CurvOp& o) {
    check_same(o);
    coeffs_ -= o.coeffs_;
    return *this;
  }
  CurvOp& operator*=(double s) {
    coeffs_ *= s;
    return *this;
  }
  friend CurvOp operator+(CurvOp a, const CurvOp& b) { return a += b; }
  friend CurvOp operator-(CurvOp a, const CurvOp& b) { return a -= b; }
  friend CurvOp operator*(double s, CurvOp a) { return a *= s; }
  friend CurvOp operator*(CurvOp a, double s) { return a *= s; }
  friend CurvOp operator-(CurvOp a) { return a *= -1.0; }

  void check_same(const CurvOp& o) const {
    if (n() != o.n()) throw std::invalid_argument("dimension mismatch between curvature operators");
  }

 private:
  AlgebraPtr algebra_;
  Matrix coeffs_;
};

/// Frobenius inner product tr(AB) of symmetric operators.
inline double inner(const CurvOp& A, const CurvOp& B) {
  A.check_same(B);
  return (A.coeffs().array() * B.coeffs().array()).sum();
}

/// Operator product AB (symmetrized, so products of commuting operators stay exact).
inline CurvOp product(const CurvOp& A, const CurvOp& B) {
  A.check_same(B);
  const Matrix P = A.coeffs() * B.coeffs();
  return A.with(0.5 * (P + P.transpose()));
}

// ---------------------------------------------------------------------------
// (0,4) tensor picture

/// R_{ijkl} = ⟨R(e_i∧e_j), e_k∧e_l⟩.
class Tensor4 {
 public:
  explicit Tensor4(int n) : n_(n), data_(static_cast<std::size_t>(n) * n * n * n, 0.0) {}
  int n() const noexcept { return n_; }
  double& operator()(int i, int j, int k, int l) { return data_[idx(i, j, k, l)]; }
  double operator()(int i, int j, int k, int l) const { return data_[idx(i, j, k, l)]; }
  const std::vector<double>& data() const noexcept { return data_; }

  double norm() const {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return std::sqrt(s);
  }

  /// Largest violation of the pair antisymmetries and the pair-exchange symmetry.
  double symmetry_defect() const {
    double worst = 0.0;
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j)
        for (int k = 0; k < n_; ++k)
          for (int l = 0; l < n_; ++l) {
            const double v = (*this)(i, j, k, l);
            worst = std::max({worst, std::abs(v + (*this)(j, i, k, l)), std::abs(v + (*this)(i, j, l, k)),
                              std::abs(v - (*this)(k, l, i, j))});
          }
    return worst;
  }

 private:
  std::size_t idx(int i, int j, int k, int l) const {
    return ((static_cast<std::size_t>(i) * n_ + j) * n_ + k) * n_ + l;
  }
  int n_;
  std::vector<double> data_;
};

inline Tensor4 to_tensor(const CurvOp& R) {
  const auto& basis = R.algebra().basis;
  const int n = R.n();
  Tensor4 T(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const auto a = basis.bivector(i, j);
      if (a.sign == 0.0) continue;
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          const auto b = basis.bivector(k, l);
          if (b.sign == 0.0) continue;
          T(i, j, k, l) = a.sign * b.sign * R.coeffs()(b.index, a.index);
        }
    }
  return T;
}

inline CurvOp from_tensor(const Tensor4& T, AlgebraPtr algebra, double tol = 1e-12) {
  if (T.n() != algebra->n()) throw std::invalid_argument("from_tensor: dimension mismatch");
  const double defect = T.symmetry_defect();
  if (defect > scaled_tol(tol, T.norm()))
    throw std::invalid_argument("from_tensor: tensor violates curvature symmetries (defect " +
                                std::to_string(defect) + ")");
  const auto& basis = algebra->basis;
  const int N = basis.dim();
  Matrix M(N, N);
  for (int a = 0; a < N; ++a) {
    const auto [i, j] = basis.pair(a);
    for (int b = 0; b < N; ++b) {
      const auto [k, l] = basis.pair(b);
      M(b, a) = basis.generator_sign(a) * basis.generator_sign(b) * T(i, j, k, l);
    }
  }
  return {std::move(algebra), M};
}

namespace detail {

// Sign of a permutation of 4 elements given as positions.
inline int perm_sign(const std::array<int, 4>& p) {
  int s = 1;
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j)
      if (p[static_cast<std::size_t>(i)] > p[static_cast<std::size_t>(j)]) s = -s;
  return s;
}

// Λ⁴ component of T; zero unless the four indices are distinct.
inline Tensor4 full_antisymmetrization(const Tensor4& T) {
  const int n = T.n();
  Tensor4 A(n);
  std::array<int, 4> perm{0, 1, 2, 3};
  std::vector<std::pair<std::array<int, 4>, int>> perms;
  do perms.emplace_back(perm, perm_sign(perm));
  while (std::next_permutation(perm.begin(), perm.end()));

  for (int p = 0; p < n; ++p)
    for (int q = p + 1; q < n; ++q)
      for (int r = q + 1; r < n; ++r)
        for (int s = r + 1; s < n; ++s) {
          const std::array<int, 4> idx{p, q, r, s};
          double acc = 0.0;
          for (const auto& [pm, sg] : perms)
            acc += sg * T(idx[static_cast<std::size_t>(pm[0])], idx[static_cast<std::size_t>(pm[1])],
                          idx[static_cast<std::size_t>(pm[2])], idx[static_cast<std::size_t>(pm[3])]);
          acc /= 24.0;
          for (const auto& [pm, sg] : perms)
            A(idx[static_cast<std::size_t>(pm[0])], idx[static_cast<std::size_t>(pm[1])],
              idx[static_cast<std::size_t>(pm[2])], idx[static_cast<std::size_t>(pm[3])]) = sg * acc;
        }
  return A;
}

}  // namespace detail

inline CurvOp symmetrized(const CurvOp& S) { return S.with(0.5 * (S.coeffs() + S.coeffs().transpose())); }

/// Norm of the Λ⁴ component of the associated (0,4) tensor.
inline double bianchi_residual(const CurvOp& R) {
  return detail::full_antisymmetrization(to_tensor(symmetrized(R))).norm();
}

/// Orthogonal projection of a symmetric operator onto S²_B(so(n)).
inline CurvOp bianchi_project(const CurvOp& S) {
  const CurvOp sym = symmetrized(S);
  if (S.n() == 3) return sym;
  Tensor4 T = to_tensor(sym);
  const Tensor4 A = detail::full_antisymmetrization(T);
  const int n = S.n();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) T(i, j, k, l) -= A(i, j, k, l);
  return from_tensor(T, S.algebra_ptr(), 1e-10);
}

/// True when R is symmetric and satisfies the first Bianchi identity.
inline bool is_curvature_operator(const CurvOp& R, double tol = 1e-10) {
  const double scale = R.norm();
  if ((R.coeffs() - R.coeffs().transpose()).norm() > scaled_tol(1e-12, scale)) return false;
  return bianchi_residual(R) <= scaled_tol(tol, scale);
}

// ---------------------------------------------------------------------------
// Ricci contraction and the irreducible decomposition

/// Ric_{ij} = Σ_k ⟨R(e_i∧e_k), e_j∧e_k⟩.
inline Matrix ricci(const CurvOp& R) {
  const auto& basis = R.algebra().basis;
  const int n = R.n();
  Matrix Ric = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int k = 0; k < n; ++k) {
        const auto a = basis.bivector(i, k);
        const auto b = basis.bivector(j, k);
        if (a.sign == 0.0 || b.sign == 0.0) continue;
        acc += a.sign * b.sign * R.coeffs()(b.index, a.index);
      }
      Ric(i, j) = acc;
    }
  return Ric;
}

inline double scal(const CurvOp& R) { return 2.0 * R.trace_lambda2(); }

/// A∧B for endomorphisms of ℝⁿ, as an operator on Λ²ℝⁿ of the given algebra.
inline CurvOp wedge_op(const Matrix& A, const Matrix& B, const AlgebraPtr& algebra) {
  return {algebra, wedge(A, B, algebra->basis)};
}

struct Decomposition {
  CurvOp r_identity;   // R_I
  CurvOp r_ric0;       // R_{Ric₀}
  CurvOp r_weyl;       // R_W
  double lambda_bar;   // tr(Ric)/n
  double sigma;        // ‖Ric₀‖²/n
  Matrix ric;
  Matrix ric0;
};

inline Decomposition decompose(const CurvOp& R) {
  const int n = R.n();
  const auto& alg = R.algebra_ptr();
  Decomposition d;
  d.ric = ricci(R);
  d.lambda_bar = d.ric.trace() / n;
  d.ric0 = d.ric - d.lambda_bar * Matrix::Identity(n, n);
  d.sigma = d.ric0.squaredNorm() / n;
  d.r_identity = (d.lambda_bar / (n - 1)) * CurvOp::identity(alg);
  d.r_ric0 = (2.0 / (n - 2)) * wedge_op(d.ric0, Matrix::Identity(n, n), alg);
  d.r_weyl = R - d.r_identity - d.r_ric0;
  return d;
}

/// Curvature operator of Ricci type with the given Ricci tensor.
inline CurvOp ricci_type_operator(const Matrix& ric, const AlgebraPtr& algebra) {
  const int n = algebra->n();
  const double lambda_bar = ric.trace() / n;
  const Matrix ric0 = ric - lambda_bar * Matrix::Identity(n, n);
  return (lambda_bar / (n - 1)) * CurvOp::identity(algebra) +
         (2.0 / (n - 2)) * wedge_op(ric0, Matrix::Identity(n, n), algebra);
}

// ---------------------------------------------------------------------------
// The # product and the ODE vector field

/// (R#S)_{γδ} = -½ tr(R C_γ S C_δ), before symmetrization in (γ, δ).
inline Matrix sharp_unsymmetrized(const CurvOp& R, const CurvOp& S) {
  R.check_same(S);
  const auto& sc = R.algebra().constants;
  const int N = R.dim();
  const Matrix& r = R.coeffs();
  const Matrix& s = S.coeffs();
  Matrix out(N, N);
  for (int g = 0; g < N; ++g) {
    const auto& Cg = sc.per_gamma[static_cast<std::size_t>(g)];
    for (int d = 0; d < N; ++d) {
      const auto& Cd = sc.per_gamma[static_cast<std::size_t>(d)];
      double acc = 0.0;
      for (const auto& e1 : Cg)
        for (const auto& e2 : Cd) acc += e1.c * e2.c * r(e1.alpha, e2.alpha) * s(e1.beta, e2.beta);
      out(g, d) = 0.5 * acc;
    }
  }
  return out;
}

inline CurvOp sharp(const CurvOp& R, const CurvOp& S) {
  const Matrix M = sharp_unsymmetrized(R, S);
  return R.with(0.5 * (M + M.transpose()));
}

inline CurvOp sharp(const CurvOp& R) { return sharp(R, R); }

/// X(R) = R² + R#, projected back onto S²_B.
inline CurvOp ode_field(const CurvOp& R) { return bianchi_project(product(R, R) + sharp(R, R)); }

/// R² + R# without the Bianchi projection.
inline CurvOp ode_field_raw(const CurvOp& R) { return product(R, R) + sharp(R, R); }

inline double tri(const CurvOp& R1, const CurvOp& R2, const CurvOp& R3) {
  const CurvOp left = product(R1, R2) + product(R2, R1) + 2.0 * sharp(R1, R2);
  return inner(left, R3);
}

inline double potential(const CurvOp& R) { return tri(R, R, R) / 6.0; }

// ---------------------------------------------------------------------------
// O(n) action

/// Matrix of Λ²Q = Q∧Q for Q ∈ O(n).
inline Matrix induced_rotation(const Matrix& Q, const SoBasis& basis) { return wedge(Q, Q, basis); }

/// The operator Q·R = (Λ²Q) R (Λ²Q)ᵀ.
inline CurvOp conjugate(const CurvOp& R, const Matrix& Q) {
  const Matrix L = induced_rotation(Q, R.algebra().basis);
  return R.with(L * R.coeffs() * L.transpose());
}

// ---------------------------------------------------------------------------
// Random sampling

inline Matrix random_gaussian_matrix(int rows, int cols, CounterRng& rng) {
  Matrix M(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) M(i, j) = rng.normal();
  return M;
}

inline Matrix random_symmetric(int n, CounterRng& rng) {
  const Matrix G = random_gaussian_matrix(n, n, rng);
  return 0.5 * (G + G.transpose());
}

inline Matrix random_traceless_symmetric(int n, CounterRng& rng) {
  Matrix S = random_symmetric(n, rng);
  S -= (S.trace() / n) * Matrix::Identity(n, n);
  return S;
}

/// Haar-distributed element of O(n) (QR of a Gaussian matrix with sign fix).
inline Matrix random_orthogonal(int n, CounterRng& rng) {
  const Matrix G = random_gaussian_matrix(n, n, rng);
  Eigen::HouseholderQR<Matrix> qr(G);
  Matrix Q = qr.householderQ();
  const Matrix Rm = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j)
    if (Rm(j, j) < 0) Q.col(j) *= -1.0;
  return Q;
}

/// Gaussian element of S²_B(so(n)).
inline CurvOp random_curvature_operator(const AlgebraPtr& algebra, CounterRng& rng) {
  const int N = algebra->dim();
  const Matrix G = random_gaussian_matrix(N, N, rng);
  return bianchi_project(CurvOp(algebra, 0.5 * (G + G.transpose())));
}

inline CurvOp random_weyl(const AlgebraPtr& algebra, CounterRng& rng) {
  return decompose(random_curvature_operator(algebra, rng)).r_weyl;
}

/// Rank-one curvature operator ω ωᵀ for the decomposable unit bivector u∧v.
inline CurvOp rank_one_projector(const Vector& u, const Vector& v, const AlgebraPtr& algebra) {
  Vector w = algebra->basis.wedge_vectors(u, v);
  w.normalize();
  return {algebra, w * w.transpose()};
}

inline CurvOp rank_one_projector(int i, int j, const AlgebraPtr& algebra) {
  const int n = algebra->n();
  return rank_one_projector(Vector::Unit(n, i), Vector::Unit(n, j), algebra);
}

/// Symmetric eigen-decomposition with ascending eigenvalues.
inline Eigen::SelfAdjointEigenSolver<Matrix> eigensystem(const Matrix& M) {
  return Eigen::SelfAdjointEigenSolver<Matrix>(0.5 * (M + M.transpose()));
}

inline Vector eigenvalues(const CurvOp& R) { return eigensystem(R.coeffs()).eigenvalues(); }

}  // namespace curvlab
