#pragma once

#include "dtnlab/core.hpp"
#include "dtnlab/mesh.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

namespace dtnlab {

/// (n₋, n₀, n₊) of a symmetric matrix.
struct InertiaTriple {
  Index n_minus = 0;
  Index n_zero = 0;
  Index n_plus = 0;

  Index dimension() const { return n_minus + n_zero + n_plus; }
  friend bool operator==(const InertiaTriple&, const InertiaTriple&) = default;
};

/// P A Pᵀ = L D Lᵀ with L unit lower triangular and D block diagonal with
/// 1×1 and 2×2 blocks. `permutation[k]` is the original row placed at k.
template <typename Scalar>
struct LdltFactorization {
  std::vector<Index> permutation;
  Matrix<Scalar> L;
  Vector<Scalar> d_diag;     ///< D(k,k)
  Vector<Scalar> d_sub;      ///< D(k+1,k); zero unless a 2×2 block starts at k
  std::vector<int> block_size;  ///< 1 or 2 at the first row of each block, 0 on the second row of a 2×2
  InertiaTriple inertia;
  Scalar growth = Scalar(1);
  Scalar zero_threshold = Scalar(0);

  Index size() const { return L.rows(); }

  Matrix<Scalar> d_matrix() const {
    const Index n = size();
    Matrix<Scalar> D = Matrix<Scalar>::Zero(n, n);
    D.diagonal() = d_diag;
    for (Index k = 0; k + 1 < n; ++k) {
      D(k + 1, k) = d_sub(k);
      D(k, k + 1) = d_sub(k);
    }
    return D;
  }

  /// L D Lᵀ, i.e. the permuted input.
  Matrix<Scalar> reconstruct() const { return L * d_matrix() * L.transpose(); }

  /// Applies the stored permutation: returns P A Pᵀ.
  Matrix<Scalar> permuted(const Matrix<Scalar>& a) const { return a(permutation, permutation); }

  /// Solves A x = b; requires n₀ = 0.
  Matrix<Scalar> solve(const Matrix<Scalar>& b) const {
    if (inertia.n_zero != 0)
      throw Error(ErrorKind::solver_failure, "solve on a numerically singular factorization", inertia.n_zero);
    const Index n = size();
    Matrix<Scalar> y = b(permutation, Eigen::all);
    L.template triangularView<Eigen::UnitLower>().solveInPlace(y);
    for (Index k = 0; k < n;) {
      if (block_size[k] == 2) {
        const Scalar a = d_diag(k), c = d_diag(k + 1), off = d_sub(k);
        const Scalar det = a * c - off * off;
        for (Index j = 0; j < y.cols(); ++j) {
          const Scalar y0 = y(k, j), y1 = y(k + 1, j);
          y(k, j) = (c * y0 - off * y1) / det;
          y(k + 1, j) = (a * y1 - off * y0) / det;
        }
        k += 2;
      } else {
        y.row(k) /= d_diag(k);
        k += 1;
      }
    }
    L.transpose().template triangularView<Eigen::UnitUpper>().solveInPlace(y);
    Matrix<Scalar> x(n, b.cols());
    x(permutation, Eigen::all) = y;
    return x;
  }
};

namespace detail {

template <typename Scalar>
void classify(Scalar value, Scalar threshold, InertiaTriple& out) {
  if (std::abs(value) <= threshold) {
    ++out.n_zero;
  } else if (value < 0) {
    ++out.n_minus;
  } else {
    ++out.n_plus;
  }
}

// Signs of a symmetric 2×2 block [[a, b], [b, c]].
template <typename Scalar>
void classify_block(Scalar a, Scalar b, Scalar c, Scalar threshold, InertiaTriple& out) {
  const Scalar det = a * c - b * b;
  if (det < 0) {
    ++out.n_minus;
    ++out.n_plus;
    return;
  }
  const Scalar half_trace = (a + c) / 2;
  const Scalar disc = std::sqrt(std::max(Scalar(0), (a - c) * (a - c) / 4 + b * b));
  classify(half_trace - disc, threshold, out);
  classify(half_trace + disc, threshold, out);
}

}  // namespace detail

/// Bunch–Kaufman factorization with partial (diagonal) pivoting, α = (1+√17)/8.
/// Ties in the pivot search go to the smallest index. Pivots with magnitude
/// at most `zero_pivot_tol·‖A‖_max` count into n₀; a negative tolerance
/// selects the default n·ε.
template <typename Scalar>
LdltFactorization<Scalar> ldlt(const Matrix<Scalar>& input, Scalar zero_pivot_tol = Scalar(-1)) {
  const Index n = input.rows();
  if (input.cols() != n) throw Error(ErrorKind::invalid_argument, "ldlt needs a square matrix");
  const Scalar alpha = (Scalar(1) + std::sqrt(Scalar(17))) / Scalar(8);

  Matrix<Scalar> a = (input + input.transpose()) / Scalar(2);
  const Scalar amax = n > 0 ? a.cwiseAbs().maxCoeff() : Scalar(0);
  if (zero_pivot_tol < 0) zero_pivot_tol = Scalar(std::max<Index>(n, 1)) * std::numeric_limits<Scalar>::epsilon();

  LdltFactorization<Scalar> f;
  f.permutation.resize(static_cast<std::size_t>(n));
  std::iota(f.permutation.begin(), f.permutation.end(), Index{0});
  f.L = Matrix<Scalar>::Identity(n, n);
  f.d_diag = Vector<Scalar>::Zero(n);
  f.d_sub = Vector<Scalar>::Zero(n);
  f.block_size.assign(static_cast<std::size_t>(n), 0);
  f.zero_threshold = zero_pivot_tol * amax;
  Scalar seen_max = amax;

  // Symmetric interchange of rows/columns p and q in the trailing matrix and
  // of the already computed rows of L.
  auto swap = [&](Index p, Index q, Index k) {
    if (p == q) return;
    a.row(p).swap(a.row(q));
    a.col(p).swap(a.col(q));
    if (k > 0) f.L.row(p).head(k).swap(f.L.row(q).head(k));
    std::swap(f.permutation[p], f.permutation[q]);
  };

  Index k = 0;
  while (k < n) {
    int step = 1;
    const Scalar absakk = std::abs(a(k, k));
    Index imax = k;
    Scalar colmax = 0;
    if (k + 1 < n) {
      Index rel = 0;
      colmax = a.col(k).tail(n - k - 1).cwiseAbs().maxCoeff(&rel);
      imax = k + 1 + rel;
    }

    Index pivot = k;
    if (std::max(absakk, colmax) == Scalar(0)) {
      pivot = k;  // zero column: D(k,k) = 0, nothing to eliminate
    } else if (absakk >= alpha * colmax) {
      pivot = k;
    } else {
      Scalar rowmax = 0;
      for (Index j = k; j < n; ++j)
        if (j != imax) rowmax = std::max(rowmax, std::abs(a(imax, j)));
      if (absakk * rowmax >= alpha * colmax * colmax) {
        pivot = k;
      } else if (std::abs(a(imax, imax)) >= alpha * rowmax) {
        pivot = imax;
      } else {
        pivot = imax;
        step = 2;
      }
    }

    if (step == 1) {
      swap(k, pivot, k);
      const Scalar d = a(k, k);
      f.d_diag(k) = d;
      f.block_size[k] = 1;
      detail::classify(d, f.zero_threshold, f.inertia);
      const Index m = n - k - 1;
      if (m > 0) {
        if (d != Scalar(0)) {
          Vector<Scalar> l = a.col(k).tail(m) / d;
          a.bottomRightCorner(m, m).noalias() -= d * l * l.transpose();
          f.L.col(k).tail(m) = l;
        }
        // A zero pivot only happens for an all-zero column; L stays zero there.
      }
      k += 1;
    } else {
      swap(k + 1, pivot, k);
      const Scalar d11 = a(k, k), d21 = a(k + 1, k), d22 = a(k + 1, k + 1);
      f.d_diag(k) = d11;
      f.d_diag(k + 1) = d22;
      f.d_sub(k) = d21;
      f.block_size[k] = 2;
      f.block_size[k + 1] = 0;
      detail::classify_block(d11, d21, d22, f.zero_threshold, f.inertia);
      const Index m = n - k - 2;
      if (m > 0) {
        const Scalar det = d11 * d22 - d21 * d21;
        Matrix<Scalar> w = a.block(k + 2, k, m, 2);
        Matrix<Scalar> l(m, 2);
        l.col(0) = (w.col(0) * d22 - w.col(1) * d21) / det;
        l.col(1) = (w.col(1) * d11 - w.col(0) * d21) / det;
        a.bottomRightCorner(m, m).noalias() -= l * w.transpose();
        f.L.block(k + 2, k, m, 2) = l;
      }
      k += 2;
    }
    if (k < n) seen_max = std::max(seen_max, a.bottomRightCorner(n - k, n - k).cwiseAbs().maxCoeff());
  }
  f.growth = amax > 0 ? seen_max / amax : Scalar(1);
  return f;
}

template <typename Scalar>
InertiaTriple inertia_of(const Matrix<Scalar>& a, Scalar zero_pivot_tol = Scalar(-1)) {
  return ldlt<Scalar>(a, zero_pivot_tol).inertia;
}

/// K − σM restricted to the rows/columns of `problem`.
template <typename Scalar>
Matrix<Scalar> shifted_block(const FormPair<Scalar>& form, const IndexSplit& split, Problem problem, Scalar sigma) {
  if (problem == Problem::neumann) return form.K - sigma * form.M;
  return form.K(split.interior, split.interior) - sigma * form.M(split.interior, split.interior);
}

struct CountResult {
  Index count = 0;  ///< eigenvalues strictly below λ (outside the cluster window)
  Index n_at = 0;   ///< eigenvalues inside the cluster window around λ
};

/// N_B(λ) and the multiplicity at λ by Sylvester's law, without eigensolves:
/// count = n₋(A − (λ−t)M) and n_at = n₋(A − (λ+t)M) − count, t the cluster width.
template <typename Scalar>
CountResult count_below(const FormPair<Scalar>& form, const IndexSplit& split, Problem problem, Scalar lambda,
                        const Tolerances& tol = {}) {
  const Scalar t = Scalar(cluster_width(static_cast<double>(lambda), tol));
  const Index below = inertia_of<Scalar>(shifted_block(form, split, problem, lambda - t)).n_minus;
  const Index upto = inertia_of<Scalar>(shifted_block(form, split, problem, lambda + t)).n_minus;
  return {below, upto - below};
}

struct SweepPoint {
  double lambda = 0;
  Index count = 0;
  Index n_at = 0;
};

/// count_below over a list of shifts; items are independent and may run on
/// `jobs` threads, results stay in input order.
template <typename Scalar>
std::vector<SweepPoint> inertia_sweep(const FormPair<Scalar>& form, const IndexSplit& split, Problem problem,
                                      std::span<const double> lambdas, const Tolerances& tol = {},
                                      unsigned jobs = 1) {
  std::vector<SweepPoint> out(lambdas.size());
  parallel_for(lambdas.size(), jobs, [&](std::size_t i) {
    const CountResult r = count_below<Scalar>(form, split, problem, Scalar(lambdas[i]), tol);
    out[i] = {lambdas[i], r.count, r.n_at};
  });
  return out;
}

}  // namespace dtnlab
