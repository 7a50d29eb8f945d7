#pragma once

// Orthonormal basis of Λ²ℝⁿ ≅ so(n), bracket structure constants, and the
// wedge product of endomorphisms of ℝⁿ acting on Λ²ℝⁿ.

#include <Eigen/Dense>

#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace curvlab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// e_i ∧ e_j = sign · b_index. sign is 0 when i == j.
struct PairEntry {
  int index = -1;
  double sign = 0.0;
};

/// Basis b_α of so(n), α = 0..N-1 in lexicographic order of (i, j), i < j.
///
/// The generator of (i, j) maps e_i ↦ e_j and e_j ↦ -e_i, optionally multiplied
/// by a per-generator sign flip. All coordinate conversions honour the flips,
/// so basis-independent quantities do not see them.
class SoBasis {
 public:
  explicit SoBasis(int n, std::vector<double> flips = {}) : n_(n) {
    if (n < 3) throw std::invalid_argument("so(n) basis requires n >= 3, got n = " + std::to_string(n));
    dim_ = n * (n - 1) / 2;
    if (flips.empty()) flips.assign(static_cast<std::size_t>(dim_), 1.0);
    if (static_cast<int>(flips.size()) != dim_)
      throw std::invalid_argument("generator sign vector has wrong length");
    for (double s : flips)
      if (s != 1.0 && s != -1.0) throw std::invalid_argument("generator signs must be +1 or -1");
    signs_ = std::move(flips);
    index_.assign(static_cast<std::size_t>(n * n), -1);
    pairs_.reserve(static_cast<std::size_t>(dim_));
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        index_[static_cast<std::size_t>(i * n + j)] = static_cast<int>(pairs_.size());
        index_[static_cast<std::size_t>(j * n + i)] = static_cast<int>(pairs_.size());
        pairs_.emplace_back(i, j);
      }
  }

  int n() const noexcept { return n_; }
  int dim() const noexcept { return dim_; }
  std::pair<int, int> pair(int alpha) const { return pairs_.at(static_cast<std::size_t>(alpha)); }
  double generator_sign(int alpha) const { return signs_.at(static_cast<std::size_t>(alpha)); }
  const std::vector<double>& generator_signs() const noexcept { return signs_; }

  PairEntry bivector(int i, int j) const {
    if (i == j) return {};
    const int a = index_[static_cast<std::size_t>(i * n_ + j)];
    const double s = signs_[static_cast<std::size_t>(a)];
    return {a, i < j ? s : -s};
  }

  /// n×n antisymmetric matrix of b_α.
  Matrix generator(int alpha) const {
    const auto [i, j] = pair(alpha);
    const double s = generator_sign(alpha);
    Matrix L = Matrix::Zero(n_, n_);
    L(j, i) = s;
    L(i, j) = -s;
    return L;
  }

  /// Coordinates of an antisymmetric n×n matrix under ⟨A,B⟩ = -½ tr(AB).
  Vector coords(const Matrix& antisym) const {
    Vector c(dim_);
    for (int a = 0; a < dim_; ++a) {
      const auto [i, j] = pairs_[static_cast<std::size_t>(a)];
      c(a) = signs_[static_cast<std::size_t>(a)] * 0.5 * (antisym(j, i) - antisym(i, j));
    }
    return c;
  }

  Matrix from_coords(const Vector& c) const {
    Matrix M = Matrix::Zero(n_, n_);
    for (int a = 0; a < dim_; ++a) {
      const auto [i, j] = pairs_[static_cast<std::size_t>(a)];
      const double v = signs_[static_cast<std::size_t>(a)] * c(a);
      M(j, i) += v;
      M(i, j) -= v;
    }
    return M;
  }

  /// Coordinates of the bivector v ∧ w.
  Vector wedge_vectors(const Vector& v, const Vector& w) const {
    Vector c(dim_);
    for (int a = 0; a < dim_; ++a) {
      const auto [i, j] = pairs_[static_cast<std::size_t>(a)];
      c(a) = signs_[static_cast<std::size_t>(a)] * (v(i) * w(j) - v(j) * w(i));
    }
    return c;
  }

 private:
  int n_;
  int dim_ = 0;
  std::vector<double> signs_;
  std::vector<int> index_;
  std::vector<std::pair<int, int>> pairs_;
};

inline double so_inner(const Matrix& A, const Matrix& B) { return -0.5 * (A * B).trace(); }

inline SoBasis build_basis(int n) { return SoBasis(n); }

/// Nonzero entry c = ⟨[b_α, b_β], b_γ⟩.
struct BracketTriple {
  int alpha;
  int beta;
  int gamma;
  double c;
};

/// Entry (α, β, c) of the antisymmetric matrix C_γ with (C_γ)_{αβ} = c_{αβγ}.
struct BracketEntry {
  int alpha;
  int beta;
  double c;
};

struct StructureConstants {
  int dim = 0;
  std::vector<BracketTriple> triples;                 // every ordered nonzero (α, β, γ)
  std::vector<std::vector<BracketEntry>> per_gamma;   // C_γ in coordinate form

  Matrix gamma_matrix(int gamma) const {
    Matrix C = Matrix::Zero(dim, dim);
    for (const auto& e : per_gamma.at(static_cast<std::size_t>(gamma))) C(e.alpha, e.beta) = e.c;
    return C;
  }
};

/// Brackets are only nonzero for generators whose index pairs share exactly
/// one element, so only those pairs are commuted.
inline StructureConstants bracket_constants(const SoBasis& basis) {
  const int N = basis.dim();
  StructureConstants sc;
  sc.dim = N;
  sc.per_gamma.resize(static_cast<std::size_t>(N));
  for (int a = 0; a < N; ++a) {
    const auto [i, j] = basis.pair(a);
    const Matrix La = basis.generator(a);
    for (int b = a + 1; b < N; ++b) {
      const auto [k, l] = basis.pair(b);
      const int shared = (i == k) + (i == l) + (j == k) + (j == l);
      if (shared != 1) continue;
      const Matrix Lb = basis.generator(b);
      const Vector c = basis.coords(La * Lb - Lb * La);
      for (int g = 0; g < N; ++g) {
        if (c(g) == 0.0) continue;
        sc.triples.push_back({a, b, g, c(g)});
        sc.triples.push_back({b, a, g, -c(g)});
        sc.per_gamma[static_cast<std::size_t>(g)].push_back({a, b, c(g)});
        sc.per_gamma[static_cast<std::size_t>(g)].push_back({b, a, -c(g)});
      }
    }
  }
  return sc;
}

/// Matrix of A∧B : v∧w ↦ ½(Av∧Bw + Bv∧Aw) in the pair basis.
inline Matrix wedge(const Matrix& A, const Matrix& B, const SoBasis& basis) {
  const int n = basis.n();
  if (A.rows() != n || A.cols() != n || B.rows() != n || B.cols() != n)
    throw std::invalid_argument("wedge: endomorphism size does not match basis dimension");
  const int N = basis.dim();
  Matrix W(N, N);
  for (int a = 0; a < N; ++a) {
    const auto [i, j] = basis.pair(a);
    const double sa = basis.generator_sign(a);
    for (int b = 0; b < N; ++b) {
      const auto [k, l] = basis.pair(b);
      const double sb = basis.generator_sign(b);
      W(b, a) = sa * sb * 0.5 *
                (A(k, i) * B(l, j) - A(l, i) * B(k, j) + B(k, i) * A(l, j) - B(l, i) * A(k, j));
    }
  }
  return W;
}

/// Basis together with its structure constants; shared read-only.
struct SoAlgebra {
  SoBasis basis;
  StructureConstants constants;

  explicit SoAlgebra(SoBasis b) : basis(std::move(b)), constants(bracket_constants(basis)) {}
  int n() const noexcept { return basis.n(); }
  int dim() const noexcept { return basis.dim(); }
};

using AlgebraPtr = std::shared_ptr<const SoAlgebra>;

/// Canonical (unflipped) algebra for dimension n, built once per n.
inline AlgebraPtr so_algebra(int n) {
  static std::mutex mutex;
  static std::map<int, AlgebraPtr> cache;
  if (n < 3) throw std::invalid_argument("so(n) basis requires n >= 3, got n = " + std::to_string(n));
  std::lock_guard lock(mutex);
  auto& slot = cache[n];
  if (!slot) slot = std::make_shared<const SoAlgebra>(SoBasis(n));
  return slot;
}

inline AlgebraPtr make_so_algebra(int n, std::vector<double> flips) {
  return std::make_shared<const SoAlgebra>(SoBasis(n, std::move(flips)));
}

}  // namespace curvlab
