#pragma once

#include "dtnlab/core.hpp"
#include "dtnlab/mesh.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

namespace dtnlab {

enum class SpectrumTag { neumann, dirichlet, pencil, plain };

inline const char* to_string(SpectrumTag t) {
  switch (t) {
    case SpectrumTag::neumann: return "neumann";
    case SpectrumTag::dirichlet: return "dirichlet";
    case SpectrumTag::pencil: return "pencil";
    case SpectrumTag::plain: return "plain";
  }
  return "unknown";
}

/// Ascending eigenvalues, optionally with vectors (M-orthonormal for
/// generalized problems, column j belongs to values(j)).
template <typename Scalar>
struct Spectrum {
  Vector<Scalar> values;
  Matrix<Scalar> vectors;  ///< empty when not requested
  SpectrumTag tag = SpectrumTag::plain;
  double cluster_rel = Tolerances{}.cluster_rel;

  bool has_vectors() const { return vectors.size() > 0; }
  Index size() const { return values.size(); }
};

/// Basis of the eigenspace of one problem at one eigenvalue.
template <typename Scalar>
struct EigenBasis {
  Scalar lambda = 0;
  Matrix<Scalar> basis;  ///< n × dim, zero-extended for Dirichlet
  Problem problem = Problem::neumann;

  Index dimension() const { return basis.cols(); }
};

struct EighOptions {
  bool vectors = true;
  double off_tolerance = 1e-13;  ///< stop when off(S)_F ≤ off_tolerance·‖S‖_F
  int max_sweeps = 40;
  Index jacobi_limit = 256;  ///< larger problems go through Householder tridiagonalisation
};

namespace detail {

// Cyclic Jacobi rotations on a symmetric matrix (row-by-row sweep order).
template <typename Scalar>
void jacobi(Matrix<Scalar>& a, Matrix<Scalar>* v, const EighOptions& opt) {
  const Index n = a.rows();
  const Scalar norm = a.norm();
  if (norm == Scalar(0)) return;
  const Scalar target = Scalar(opt.off_tolerance) * norm;
  auto off = [&] {
    Scalar s = 0;
    for (Index j = 0; j < n; ++j)
      for (Index i = j + 1; i < n; ++i) s += a(i, j) * a(i, j);
    return std::sqrt(2 * s);
  };
  for (int sweep = 0; sweep < opt.max_sweeps; ++sweep) {
    if (off() <= target) return;
    for (Index p = 0; p + 1 < n; ++p) {
      for (Index q = p + 1; q < n; ++q) {
        const Scalar apq = a(p, q);
        if (apq == Scalar(0)) continue;
        const Scalar theta = (a(q, q) - a(p, p)) / (2 * apq);
        const Scalar t = (theta >= 0 ? Scalar(1) : Scalar(-1)) / (std::abs(theta) + std::sqrt(theta * theta + 1));
        const Scalar c = Scalar(1) / std::sqrt(t * t + 1);
        const Scalar s = t * c;
        // A ← Jᵀ A J with J the rotation in the (p, q) plane.
        for (Index k = 0; k < n; ++k) {
          const Scalar akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Index k = 0; k < n; ++k) {
          const Scalar apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0;
        a(q, p) = 0;
        if (v) {
          for (Index k = 0; k < n; ++k) {
            const Scalar vkp = (*v)(k, p), vkq = (*v)(k, q);
            (*v)(k, p) = c * vkp - s * vkq;
            (*v)(k, q) = s * vkp + c * vkq;
          }
        }
      }
    }
  }
  if (off() > target) throw Error(ErrorKind::solver_failure, "Jacobi iteration did not converge");
}

}  // namespace detail

/// All eigenvalues (and optionally vectors) of a symmetric matrix. The input
/// is symmetrized on entry; output is sorted ascending and deterministic.
template <typename Scalar>
Spectrum<Scalar> eigh(const Matrix<Scalar>& s, const EighOptions& opt = {}) {
  const Index n = s.rows();
  if (s.cols() != n) throw Error(ErrorKind::invalid_argument, "eigh needs a square matrix");
  Matrix<Scalar> a = (s + s.transpose()) / Scalar(2);
  Spectrum<Scalar> out;
  Vector<Scalar> values;
  Matrix<Scalar> vectors;

  if (n <= opt.jacobi_limit) {
    Matrix<Scalar> v;
    if (opt.vectors) v = Matrix<Scalar>::Identity(n, n);
    detail::jacobi(a, opt.vectors ? &v : nullptr, opt);
    values = a.diagonal();
    vectors = std::move(v);
  } else {
    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(a, opt.vectors ? Eigen::ComputeEigenvectors
                                                                    : Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw Error(ErrorKind::solver_failure, "tridiagonal QR did not converge");
    values = es.eigenvalues();
    if (opt.vectors) vectors = es.eigenvectors();
  }

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index i, Index j) { return values(i) < values(j); });
  out.values = values(order);
  if (opt.vectors) out.vectors = vectors(Eigen::all, order);
  return out;
}

/// Generalized problem K x = λ M x via Cholesky M = LLᵀ and the standard
/// problem for L⁻¹ K L⁻ᵀ. Vectors are back-transformed and M-orthonormalized.
template <typename Scalar>
Spectrum<Scalar> eigh_gen(const Matrix<Scalar>& K, const Matrix<Scalar>& M, const EighOptions& opt = {}) {
  const Index n = K.rows();
  if (K.cols() != n || M.rows() != n || M.cols() != n)
    throw Error(ErrorKind::invalid_argument, "eigh_gen needs square matrices of equal size");
  Eigen::LLT<Matrix<Scalar>> llt((M + M.transpose()) / Scalar(2));
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::invalid_mass, "mass matrix is not positive definite");
  const auto L = llt.matrixL();
  Matrix<Scalar> c = L.solve(K);
  c = L.solve(c.transpose()).transpose();
  Spectrum<Scalar> spec = eigh<Scalar>(c, opt);
  if (spec.has_vectors()) {
    Matrix<Scalar> x = llt.matrixU().solve(spec.vectors);
    // Modified Gram–Schmidt in the M inner product.
    Matrix<Scalar> mx = M * x;
    for (Index j = 0; j < n; ++j) {
      for (Index i = 0; i < j; ++i) {
        const Scalar proj = mx.col(i).dot(x.col(j));
        x.col(j) -= proj * x.col(i);
        mx.col(j) -= proj * mx.col(i);
      }
      const Scalar norm = std::sqrt(mx.col(j).dot(x.col(j)));
      x.col(j) /= norm;
      mx.col(j) /= norm;
    }
    spec.vectors = std::move(x);
  }
  return spec;
}

/// N(λ) = #{j : values_j < λ}, where values within the cluster window of λ
/// are not counted (left continuity).
template <typename Scalar>
Index counting(const Spectrum<Scalar>& spec, Scalar lambda) {
  const Scalar t = Scalar(spec.cluster_rel * std::max(1.0, std::abs(static_cast<double>(lambda))));
  Index count = 0;
  for (Index j = 0; j < spec.size(); ++j)
    if (spec.values(j) < lambda - t) ++count;
  return count;
}

/// Number of eigenvalues within the cluster window of λ.
template <typename Scalar>
Index multiplicity(const Spectrum<Scalar>& spec, Scalar lambda) {
  const Scalar t = Scalar(spec.cluster_rel * std::max(1.0, std::abs(static_cast<double>(lambda))));
  Index count = 0;
  for (Index j = 0; j < spec.size(); ++j)
    if (std::abs(spec.values(j) - lambda) <= t) ++count;
  return count;
}

/// Neumann spectrum: the full pencil (K, M).
template <typename Scalar>
Spectrum<Scalar> neumann_spectrum(const FormPair<Scalar>& form, const Tolerances& tol = {}, bool vectors = true) {
  EighOptions opt;
  opt.vectors = vectors;
  Spectrum<Scalar> s = eigh_gen<Scalar>(form.K, form.M, opt);
  s.tag = SpectrumTag::neumann;
  s.cluster_rel = tol.cluster_rel;
  return s;
}

/// Dirichlet spectrum: the interior block pencil (K_II, M_II); vectors are
/// returned zero-extended to all nodes.
template <typename Scalar>
Spectrum<Scalar> dirichlet_spectrum(const FormPair<Scalar>& form, const IndexSplit& split,
                                    const Tolerances& tol = {}, bool vectors = true) {
  EighOptions opt;
  opt.vectors = vectors;
  Spectrum<Scalar> s = eigh_gen<Scalar>(form.K(split.interior, split.interior),
                                        form.M(split.interior, split.interior), opt);
  if (vectors) {
    Matrix<Scalar> full = Matrix<Scalar>::Zero(form.size(), s.vectors.cols());
    full(split.interior, Eigen::all) = s.vectors;
    s.vectors = std::move(full);
  }
  s.tag = SpectrumTag::dirichlet;
  s.cluster_rel = tol.cluster_rel;
  return s;
}

template <typename Scalar>
Spectrum<Scalar> problem_spectrum(const FormPair<Scalar>& form, const IndexSplit& split, Problem problem,
                                  const Tolerances& tol = {}, bool vectors = true) {
  return problem == Problem::neumann ? neumann_spectrum(form, tol, vectors)
                                     : dirichlet_spectrum(form, split, tol, vectors);
}

/// Eigenvectors of a precomputed spectrum whose values lie in the cluster
/// window of λ.
template <typename Scalar>
EigenBasis<Scalar> eigenspace_basis(const Spectrum<Scalar>& spec, Problem problem, Scalar lambda) {
  if (!spec.has_vectors()) throw Error(ErrorKind::invalid_argument, "spectrum carries no eigenvectors");
  const Scalar t = Scalar(spec.cluster_rel * std::max(1.0, std::abs(static_cast<double>(lambda))));
  std::vector<Index> cols;
  for (Index j = 0; j < spec.size(); ++j)
    if (std::abs(spec.values(j) - lambda) <= t) cols.push_back(j);
  return {lambda, spec.vectors(Eigen::all, cols), problem};
}

/// M-orthonormal basis of the eigenspace at λ; `tol` is the relative
/// cluster tolerance deciding membership.
template <typename Scalar>
EigenBasis<Scalar> eigenspace_basis(const FormPair<Scalar>& form, const IndexSplit& split, Problem problem,
                                    Scalar lambda, double tol) {
  if (!(tol > 0)) throw Error(ErrorKind::invalid_argument, "eigenspace tolerance must be positive");
  Tolerances t;
  t.cluster_rel = tol;
  return eigenspace_basis(problem_spectrum(form, split, problem, t), problem, lambda);
}

template <typename Scalar>
struct CommonEigenspace {
  Index dimension = 0;
  Matrix<Scalar> basis;  ///< n × dimension, M-orthonormal
  Vector<Scalar> cosines;  ///< principal-angle cosines, descending
};

/// Vectors that are simultaneously Neumann and Dirichlet eigenvectors at λ:
/// intersection of the two eigenspaces via principal angles in the M inner
/// product (cos θ ≥ 1 − principal_angle counts as shared).
template <typename Scalar>
CommonEigenspace<Scalar> common_eigenspace(const FormPair<Scalar>& form, const EigenBasis<Scalar>& neumann,
                                           const EigenBasis<Scalar>& dirichlet, const Tolerances& tol = {}) {
  CommonEigenspace<Scalar> out;
  out.basis = Matrix<Scalar>::Zero(form.size(), 0);
  if (neumann.dimension() == 0 || dirichlet.dimension() == 0) return out;
  Matrix<Scalar> cross = neumann.basis.transpose() * form.M * dirichlet.basis;
  Eigen::JacobiSVD<Matrix<Scalar>> svd(cross, Eigen::ComputeFullV);
  out.cosines = svd.singularValues();
  std::vector<Index> keep;
  for (Index j = 0; j < out.cosines.size(); ++j)
    if (out.cosines(j) >= Scalar(1 - tol.principal_angle)) keep.push_back(j);
  out.dimension = static_cast<Index>(keep.size());
  out.basis = dirichlet.basis * svd.matrixV()(Eigen::all, keep);
  return out;
}

template <typename Scalar>
CommonEigenspace<Scalar> common_eigenspace(const FormPair<Scalar>& form, const IndexSplit& split, Scalar lambda,
                                           double tol) {
  Tolerances t;
  t.cluster_rel = tol;
  return common_eigenspace(form, eigenspace_basis(form, split, Problem::neumann, lambda, tol),
                           eigenspace_basis(form, split, Problem::dirichlet, lambda, tol), t);
}

/// Neumann and Dirichlet spectra with vectors, computed once per fixture.
template <typename Scalar>
struct SpectralPair {
  Spectrum<Scalar> neumann;
  Spectrum<Scalar> dirichlet;
};

template <typename Scalar>
SpectralPair<Scalar> spectral_pair(const FormPair<Scalar>& form, const IndexSplit& split,
                                   const Tolerances& tol = {}, bool vectors = true) {
  return {neumann_spectrum(form, tol, vectors), dirichlet_spectrum(form, split, tol, vectors)};
}

/// Multiplicities at λ split as in the comparison identities: `common` is
/// n_{N,D}(λ), and the Neumann/Dirichlet parts exclude it.
struct Multiplicities {
  Index total_neumann = 0;
  Index total_dirichlet = 0;
  Index common = 0;

  Index n_neumann() const { return total_neumann - common; }
  Index n_dirichlet() const { return total_dirichlet - common; }
  bool is_eigenvalue() const { return total_neumann + total_dirichlet > 0; }
};

template <typename Scalar>
Multiplicities multiplicities(const FormPair<Scalar>& form, const SpectralPair<Scalar>& spectra, Scalar lambda,
                              const Tolerances& tol = {}) {
  Multiplicities m;
  const auto bn = eigenspace_basis(spectra.neumann, Problem::neumann, lambda);
  const auto bd = eigenspace_basis(spectra.dirichlet, Problem::dirichlet, lambda);
  m.total_neumann = bn.dimension();
  m.total_dirichlet = bd.dimension();
  m.common = common_eigenspace(form, bn, bd, tol).dimension;
  return m;
}

}  // namespace dtnlab
