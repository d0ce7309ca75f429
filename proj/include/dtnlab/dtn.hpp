#pragma once

#include "dtnlab/core.hpp"
#include "dtnlab/eigensolve.hpp"
#include "dtnlab/inertia.hpp"
#include "dtnlab/mesh.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <ostream>
#include <vector>

namespace dtnlab {

/// Interior rows of K − λM (|I| × n). G_λ is its nullspace.
template <typename Scalar>
Matrix<Scalar> interior_rows(const FormPair<Scalar>& form, const IndexSplit& split, Scalar lambda) {
  return form.K(split.interior, Eigen::all) - lambda * form.M(split.interior, Eigen::all);
}

namespace detail {

template <typename Scalar>
LdltFactorization<Scalar> factor_interior(const FormPair<Scalar>& form, const IndexSplit& split, Scalar lambda,
                                          const Tolerances& tol) {
  const CountResult hit = count_below<Scalar>(form, split, Problem::dirichlet, lambda, tol);
  if (hit.n_at > 0)
    throw Error(ErrorKind::dirichlet_eigenvalue,
                "λ = " + std::to_string(static_cast<double>(lambda)) + " is a Dirichlet eigenvalue", hit.n_at);
  auto f = ldlt<Scalar>(shifted_block(form, split, Problem::dirichlet, lambda));
  if (f.inertia.n_zero > 0)
    throw Error(ErrorKind::dirichlet_eigenvalue, "interior block is numerically singular", f.inertia.n_zero);
  return f;
}

}  // namespace detail

/// λ-harmonic extension E(λ) (n × |Γ|): column g equals the indicator of
/// boundary node g on Γ and solves the interior rows of (K − λM)u = 0.
template <typename Scalar>
Matrix<Scalar> harmonic_extension(const FormPair<Scalar>& form, const IndexSplit& split, Scalar lambda,
                                  const Tolerances& tol = {}) {
  const auto f = detail::factor_interior(form, split, lambda, tol);
  const Matrix<Scalar> t_ib =
      form.K(split.interior, split.boundary) - lambda * form.M(split.interior, split.boundary);
  Matrix<Scalar> e = Matrix<Scalar>::Zero(form.size(), split.n_boundary());
  e(split.interior, Eigen::all) = -f.solve(t_ib);
  for (Index g = 0; g < split.n_boundary(); ++g) e(split.boundary[g], g) = Scalar(1);
  return e;
}

/// Dirichlet-to-Neumann map: the Schur complement of the interior block of
/// K − λM.
template <typename Scalar>
struct DtnMap {
  Scalar lambda = 0;
  Matrix<Scalar> S;
  Scalar condition = 1;  ///< max|pivot| / min|pivot| of the interior factorization
};

template <typename Scalar>
DtnMap<Scalar> schur_dtn(const FormPair<Scalar>& form, const IndexSplit& split, Scalar lambda,
                         const Tolerances& tol = {}) {
  const auto f = detail::factor_interior(form, split, lambda, tol);
  const Matrix<Scalar> t = form.K - lambda * form.M;
  const Matrix<Scalar> t_ib = t(split.interior, split.boundary);
  Matrix<Scalar> s = t(split.boundary, split.boundary) - t_ib.transpose() * f.solve(t_ib);
  s = ((s + s.transpose()) / Scalar(2)).eval();
  const Vector<Scalar> piv = f.d_diag.cwiseAbs();
  Scalar cond = 1;
  if (piv.size() > 0 && piv.minCoeff() > 0) cond = piv.maxCoeff() / piv.minCoeff();
  return {lambda, std::move(s), cond};
}

/// Basis of G_λ with the a-Gram matrix and the b-form. The pencil
/// (b_form, a_gram) realises the operator 𝓑_λ on G_λ: a[𝓑_λ u, v] = b[u, v]
/// with b[u, v] = vᵀ(K − λM)u. The basis itself is not canonical; only
/// basis-invariant quantities (pencil eigenvalues, inertia) are results.
template <typename Scalar>
struct GLambdaFrame {
  Scalar lambda = 0;
  Matrix<Scalar> basis;  ///< n × dim, orthonormal columns
  Matrix<Scalar> a_gram;
  Matrix<Scalar> b_form;
  Vector<Scalar> rank_values;  ///< |R_jj| of the column-pivoted QR, nonincreasing
  Scalar threshold = 0;        ///< τ
  bool ill_conditioned_rank = false;

  Index dimension() const { return basis.cols(); }
};

/// Nullspace of the interior rows of K − λM by column-pivoted Householder QR
/// of their transpose. Valid at every real λ, Dirichlet eigenvalues included.
/// τ ≤ 0 selects max(|I|, n)·ε·σ_max·rank_factor.
template <typename Scalar>
GLambdaFrame<Scalar> glambda_frame(const FormPair<Scalar>& form, const IndexSplit& split, Scalar lambda,
                                   const Tolerances& tol = {}, Scalar tau = Scalar(-1)) {
  const Index n = form.size();
  const Index ni = split.n_interior();
  const Matrix<Scalar> rows_t = interior_rows(form, split, lambda).transpose();
  Eigen::ColPivHouseholderQR<Matrix<Scalar>> qr(rows_t);

  GLambdaFrame<Scalar> fr;
  fr.lambda = lambda;
  fr.rank_values = qr.matrixR().diagonal().cwiseAbs();
  const Scalar sigma_max = fr.rank_values.size() > 0 ? fr.rank_values(0) : Scalar(0);
  fr.threshold = tau > 0 ? tau
                         : Scalar(std::max(ni, n)) * std::numeric_limits<Scalar>::epsilon() * sigma_max *
                               Scalar(tol.rank_factor);
  Index rank = 0;
  for (Index j = 0; j < fr.rank_values.size(); ++j) {
    const Scalar r = fr.rank_values(j);
    if (r > fr.threshold) ++rank;
    if (r > fr.threshold / 10 && r < fr.threshold * 10) fr.ill_conditioned_rank = true;
  }
  const Matrix<Scalar> q = qr.householderQ() * Matrix<Scalar>::Identity(n, n);
  fr.basis = q.rightCols(n - rank);
  fr.a_gram = fr.basis.transpose() * form.K * fr.basis;
  fr.a_gram = ((fr.a_gram + fr.a_gram.transpose()) / Scalar(2)).eval();
  fr.b_form = fr.basis.transpose() * (form.K - lambda * form.M) * fr.basis;
  fr.b_form = ((fr.b_form + fr.b_form.transpose()) / Scalar(2)).eval();
  return fr;
}

template <typename Scalar>
struct PencilEigen {
  Vector<Scalar> nu;       ///< ascending eigenvalues of 𝓑_λ
  Matrix<Scalar> vectors;  ///< n × dim, a-orthonormal eigenvectors in node coordinates
};

/// Eigenpairs of the pencil (b_form, a_gram) by Cholesky reduction of a_gram.
template <typename Scalar>
PencilEigen<Scalar> pencil_eigen(const GLambdaFrame<Scalar>& fr, bool vectors = false) {
  PencilEigen<Scalar> out;
  if (fr.dimension() == 0) {
    out.nu = Vector<Scalar>(0);
    out.vectors = Matrix<Scalar>::Zero(fr.basis.rows(), 0);
    return out;
  }
  EighOptions opt;
  opt.vectors = vectors;
  Spectrum<Scalar> s = eigh_gen<Scalar>(fr.b_form, fr.a_gram, opt);
  out.nu = s.values;
  if (vectors) out.vectors = fr.basis * s.vectors;
  return out;
}

template <typename Scalar>
struct PencilSignature {
  InertiaTriple inertia;       ///< (dim G_λ⁻, dim G_λ⁰, dim G_λ⁺) from the pencil eigenvalues
  InertiaTriple ldlt_inertia;  ///< same triple from LDLᵀ of the whitened b-form
  Vector<Scalar> nu;
  bool routes_agree = true;
};

/// Signature of 𝓑_λ. Computed twice: by sign counts of the pencil
/// eigenvalues, and by Sylvester's law on C ± ε·I with C = L⁻¹ B L⁻ᵀ,
/// a_gram = LLᵀ (ε = pencil_zero). Both are reported.
template <typename Scalar>
PencilSignature<Scalar> blambda_signature(const GLambdaFrame<Scalar>& fr, const Tolerances& tol = {}) {
  PencilSignature<Scalar> sig;
  const Index d = fr.dimension();
  if (d == 0) {
    sig.nu = Vector<Scalar>(0);
    return sig;
  }
  const Scalar eps = Scalar(tol.pencil_zero);
  sig.nu = pencil_eigen(fr).nu;
  for (Index j = 0; j < d; ++j) detail::classify(sig.nu(j), eps, sig.inertia);

  Eigen::LLT<Matrix<Scalar>> llt(fr.a_gram);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::solver_failure, "a-Gram matrix is not positive definite");
  Matrix<Scalar> c = llt.matrixL().solve(fr.b_form);
  c = llt.matrixL().solve(c.transpose()).transpose();
  c = ((c + c.transpose()) / Scalar(2)).eval();
  const Matrix<Scalar> id = Matrix<Scalar>::Identity(d, d);
  sig.ldlt_inertia.n_minus = inertia_of<Scalar>(Matrix<Scalar>(c + eps * id)).n_minus;
  sig.ldlt_inertia.n_plus = inertia_of<Scalar>(Matrix<Scalar>(c - eps * id)).n_plus;
  sig.ldlt_inertia.n_zero = d - sig.ldlt_inertia.n_minus - sig.ldlt_inertia.n_plus;
  sig.routes_agree = sig.inertia == sig.ldlt_inertia;
  return sig;
}

enum class TraceFlag { ok, refined, unresolved };

inline const char* to_string(TraceFlag f) {
  switch (f) {
    case TraceFlag::ok: return "ok";
    case TraceFlag::refined: return "refined";
    case TraceFlag::unresolved: return "unresolved";
  }
  return "unknown";
}

/// Eigenvalue branches ν_j(μ) of 𝓑_μ over an ascending μ grid.
/// `matching[k][j]` is the branch index at step k+1 continuing branch j of
/// step k (-1 when the dimension of G_μ drops).
template <typename Scalar>
struct BranchTrace {
  std::vector<Scalar> mu;
  std::vector<Vector<Scalar>> nu;
  std::vector<TraceFlag> flags;
  std::vector<std::vector<Index>> matching;
};

struct CrossingEvent {
  Index branch = 0;
  double mu_low = 0;   ///< last grid point before the sign change
  double mu_high = 0;  ///< first grid point after it
  double mu = 0;       ///< linear estimate of the zero
  int from_sign = 0;
  int to_sign = 0;
  friend bool operator==(const CrossingEvent&, const CrossingEvent&) = default;
};

struct BranchOptions {
  Index max_depth = 12;
  double resolve_fraction = 0.1;  ///< bisect until |Δν| < fraction·(branch scale)
  unsigned jobs = 1;
};

namespace detail {

// Order-preserving assignment between two ascending lists minimising the
// total |Δν|. On the real line the optimal bipartite matching never crosses,
// so this is the nearest-value assignment.
template <typename Scalar>
std::vector<Index> match_sorted(const Vector<Scalar>& from, const Vector<Scalar>& to) {
  const Index m = from.size(), n = to.size();
  std::vector<Index> out(static_cast<std::size_t>(m), -1);
  if (m == n) {
    for (Index j = 0; j < m; ++j) out[j] = j;
    return out;
  }
  // cost[i][j]: best cost using the first i of `from` and first j of `to`
  // with min(i, j) pairs formed.
  const Scalar inf = std::numeric_limits<Scalar>::infinity();
  Matrix<Scalar> cost = Matrix<Scalar>::Constant(m + 1, n + 1, inf);
  cost(0, 0) = 0;
  for (Index i = 0; i <= m; ++i) {
    for (Index j = 0; j <= n; ++j) {
      if (cost(i, j) == inf) continue;
      if (i < m && j < n) cost(i + 1, j + 1) = std::min(cost(i + 1, j + 1), cost(i, j) + std::abs(from(i) - to(j)));
      if (m > n && i < m) cost(i + 1, j) = std::min(cost(i + 1, j), cost(i, j));
      if (n > m && j < n) cost(i, j + 1) = std::min(cost(i, j + 1), cost(i, j));
    }
  }
  Index i = m, j = n;
  while (i > 0 && j > 0) {
    if (cost(i, j) == cost(i - 1, j - 1) + std::abs(from(i - 1) - to(j - 1))) {
      out[i - 1] = j - 1;
      --i;
      --j;
    } else if (m > n) {
      --i;
    } else {
      --j;
    }
  }
  return out;
}

template <typename Scalar>
int sign_of(Scalar v, Scalar zero) {
  return v > zero ? 1 : (v < -zero ? -1 : 0);
}

}  // namespace detail

/// Traces the pencil eigenvalues of 𝓑_μ for μ on [mu_from, mu_to] with
/// `steps` equal intervals, then bisects every interval in which a branch
/// changes sign until the branch moves by less than resolve_fraction of its
/// scale, or max_depth is reached (flagged unresolved).
template <typename Scalar>
BranchTrace<Scalar> blambda_branches(const FormPair<Scalar>& form, const IndexSplit& split, Scalar mu_from,
                                     Scalar mu_to, Index steps, const Tolerances& tol = {},
                                     const BranchOptions& opt = {}) {
  if (!(mu_from < mu_to)) throw Error(ErrorKind::invalid_argument, "sweep needs mu_from < mu_to");
  if (steps < 2) throw Error(ErrorKind::invalid_argument, "sweep needs at least 2 steps");

  auto eval = [&](Scalar mu) { return pencil_eigen(glambda_frame(form, split, mu, tol)).nu; };

  struct Point {
    Scalar mu;
    Vector<Scalar> nu;
    TraceFlag flag;
  };
  std::vector<Point> coarse(static_cast<std::size_t>(steps + 1));
  parallel_for(coarse.size(), opt.jobs, [&](std::size_t k) {
    const Scalar mu = k == coarse.size() - 1 ? mu_to
                                             : mu_from + (mu_to - mu_from) * Scalar(k) / Scalar(steps);
    coarse[k] = {mu, eval(mu), TraceFlag::ok};
  });

  // Per-branch magnitude over the coarse grid (branches indexed in sorted order).
  Index width = 0;
  for (const auto& p : coarse) width = std::max(width, p.nu.size());
  Vector<Scalar> scale = Vector<Scalar>::Zero(width);
  for (const auto& p : coarse)
    for (Index j = 0; j < p.nu.size(); ++j) scale(j) = std::max(scale(j), std::abs(p.nu(j)));
  for (Index j = 0; j < width; ++j)
    if (scale(j) == Scalar(0)) scale(j) = 1;

  const Scalar zero = Scalar(tol.pencil_zero);
  auto needs_refinement = [&](const Point& a, const Point& b) {
    if (a.nu.size() != b.nu.size()) return false;
    for (Index j = 0; j < a.nu.size(); ++j) {
      const int sa = detail::sign_of(a.nu(j), zero), sb = detail::sign_of(b.nu(j), zero);
      if (sa != sb && std::abs(a.nu(j) - b.nu(j)) >= Scalar(opt.resolve_fraction) * scale(j)) return true;
    }
    return false;
  };

  std::vector<Point> out;
  std::function<void(const Point&, const Point&, Index)> refine = [&](const Point& a, const Point& b, Index depth) {
    if (!needs_refinement(a, b)) return;
    if (depth >= opt.max_depth) {
      out.back().flag = TraceFlag::unresolved;
      return;
    }
    const Scalar mid_mu = (a.mu + b.mu) / 2;
    Point mid{mid_mu, eval(mid_mu), TraceFlag::refined};
    refine(a, mid, depth + 1);
    out.push_back(mid);
    refine(mid, b, depth + 1);
  };

  out.push_back(coarse.front());
  for (std::size_t k = 0; k + 1 < coarse.size(); ++k) {
    refine(coarse[k], coarse[k + 1], 0);
    out.push_back(coarse[k + 1]);
  }
  // An unresolved marker set on the left point of an interval belongs to
  // the interval; move it to the right end so it sits after the jump.
  for (std::size_t k = 0; k + 1 < out.size(); ++k) {
    if (out[k].flag == TraceFlag::unresolved && needs_refinement(out[k], out[k + 1])) {
      out[k].flag = TraceFlag::ok;
      out[k + 1].flag = TraceFlag::unresolved;
    }
  }

  BranchTrace<Scalar> trace;
  for (auto& p : out) {
    trace.mu.push_back(p.mu);
    trace.nu.push_back(std::move(p.nu));
    trace.flags.push_back(p.flag);
  }
  for (std::size_t k = 0; k + 1 < trace.mu.size(); ++k)
    trace.matching.push_back(detail::match_sorted(trace.nu[k], trace.nu[k + 1]));
  return trace;
}

/// Sign changes of each branch along the trace; zeros at grid points are
/// bridged (a (+, 0, −) run is one event).
template <typename Scalar>
std::vector<CrossingEvent> crossing_events(const BranchTrace<Scalar>& trace, const Tolerances& tol = {}) {
  std::vector<CrossingEvent> events;
  if (trace.mu.empty()) return events;
  const Scalar zero = Scalar(tol.pencil_zero);
  struct State {
    int sign;
    std::size_t at;
  };
  const Index width = trace.nu.front().size();
  std::vector<State> last(static_cast<std::size_t>(width), State{0, 0});
  for (Index j = 0; j < width; ++j) last[j] = {detail::sign_of(trace.nu[0](j), zero), 0};
  for (std::size_t k = 1; k < trace.mu.size(); ++k) {
    if (trace.nu[k].size() != width) {
      // Dimension of G_μ changed (common eigenvectors); restart tracking.
      for (Index j = 0; j < width && j < trace.nu[k].size(); ++j)
        last[j] = {detail::sign_of(trace.nu[k](j), zero), k};
      continue;
    }
    for (Index j = 0; j < width; ++j) {
      const int s = detail::sign_of(trace.nu[k](j), zero);
      if (s == 0) continue;
      if (last[j].sign != 0 && s != last[j].sign) {
        const std::size_t a = last[j].at;
        const double va = static_cast<double>(trace.nu[a](j)), vb = static_cast<double>(trace.nu[k](j));
        const double ma = static_cast<double>(trace.mu[a]), mb = static_cast<double>(trace.mu[k]);
        events.push_back({j, ma, mb, ma + (mb - ma) * va / (va - vb), last[j].sign, s});
      }
      last[j] = {s, k};
    }
  }
  return events;
}

/// Long-format CSV: header "mu,branch,nu,flag".
template <typename Scalar>
void write_trace_csv(const BranchTrace<Scalar>& trace, std::ostream& os) {
  os << "mu,branch,nu,flag\n";
  char buf[96];
  for (std::size_t k = 0; k < trace.mu.size(); ++k) {
    for (Index j = 0; j < trace.nu[k].size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g,%ld,%.17g,", static_cast<double>(trace.mu[k]), static_cast<long>(j),
                    static_cast<double>(trace.nu[k](j)));
      os << buf << to_string(trace.flags[k]) << '\n';
    }
  }
}

/// R′(λ) = (A_N − λ)⁻¹ − (A_D − λ)⁻¹ as the symmetric kernel
/// X = (K − λM)⁻¹ − ext((K_II − λM_II)⁻¹); the operator on H is X·M, whose
/// inertia equals that of X by congruence.
template <typename Scalar>
struct ResolventDiff {
  Scalar lambda = 0;
  Matrix<Scalar> matrix;
  InertiaTriple inertia;
  Index rank = 0;
};

template <typename Scalar>
ResolventDiff<Scalar> resolvent_difference(const FormPair<Scalar>& form, const IndexSplit& split, Scalar lambda,
                                           const Tolerances& tol = {}) {
  const CountResult n_hit = count_below<Scalar>(form, split, Problem::neumann, lambda, tol);
  const CountResult d_hit = count_below<Scalar>(form, split, Problem::dirichlet, lambda, tol);
  if (n_hit.n_at > 0 || d_hit.n_at > 0)
    throw Error(ErrorKind::spectral_point,
                "λ = " + std::to_string(static_cast<double>(lambda)) + " is an eigenvalue",
                n_hit.n_at + d_hit.n_at);
  const Index n = form.size();
  const auto full = ldlt<Scalar>(shifted_block(form, split, Problem::neumann, lambda));
  const auto inner = ldlt<Scalar>(shifted_block(form, split, Problem::dirichlet, lambda));
  Matrix<Scalar> x = full.solve(Matrix<Scalar>::Identity(n, n));
  x(split.interior, split.interior) -= inner.solve(Matrix<Scalar>::Identity(split.n_interior(), split.n_interior()));
  x = ((x + x.transpose()) / Scalar(2)).eval();

  ResolventDiff<Scalar> r;
  r.lambda = lambda;
  // Congruence with the Cholesky factor of M gives the M-self-adjoint operator.
  Eigen::LLT<Matrix<Scalar>> llt(form.M);
  const Matrix<Scalar> lf = llt.matrixL();
  EighOptions opt;
  opt.vectors = false;
  const Vector<Scalar> ev = eigh<Scalar>(Matrix<Scalar>(lf.transpose() * x * lf), opt).values;
  const Scalar top = ev.size() > 0 ? ev.cwiseAbs().maxCoeff() : Scalar(0);
  const Scalar zero = Scalar(tol.resolvent_rank) * top;
  for (Index j = 0; j < ev.size(); ++j) detail::classify(ev(j), zero, r.inertia);
  r.rank = r.inertia.n_minus + r.inertia.n_plus;
  r.matrix = std::move(x);
  return r;
}

}  // namespace dtnlab
