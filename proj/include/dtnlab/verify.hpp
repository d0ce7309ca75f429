#pragma once

#include "dtnlab/core.hpp"
#include "dtnlab/dtn.hpp"
#include "dtnlab/eigensolve.hpp"
#include "dtnlab/mesh.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace dtnlab {

enum class CheckStatus { pass, fail, skipped };

const char* to_string(CheckStatus s);
CheckStatus parse_check_status(const std::string& s);

/// Outcome of one check. Integer identities pass iff lhs == rhs; inequality
/// checks pass iff residual <= tolerance.
struct CheckResult {
  std::string name;
  CheckStatus status = CheckStatus::skipped;
  std::string reason;  ///< why skipped or failed
  std::optional<long long> lhs;
  std::optional<long long> rhs;
  std::optional<double> residual;
  std::optional<double> tolerance;
  std::optional<double> lambda;
  std::optional<std::pair<double, double>> interval;
  std::string diagnostics;

  bool passed() const { return status == CheckStatus::pass; }
  bool failed() const { return status == CheckStatus::fail; }
  friend bool operator==(const CheckResult&, const CheckResult&) = default;
};

/// Form, split and both spectra of one fixture. Holds references: the form
/// and split must outlive it.
struct Lab {
  const FormPair<double>& form;
  const IndexSplit& split;
  SpectralPair<double> spectra;
  Tolerances tol;
  double k_norm = 0;  ///< ‖K‖_F
};

/// Computes both spectra (with vectors unless `vectors` is false).
Lab make_lab(const FormPair<double>& form, const IndexSplit& split, const Tolerances& tol = {},
             bool vectors = true);

/// Union of both spectra, clustered, ascending.
std::vector<double> distinct_eigenvalues(const Lab& lab);

bool is_eigenvalue(const Lab& lab, double lambda);

/// Moves λ upward in steps of 10·cluster width until it is clear of both spectra.
double nudge_off_spectrum(const Lab& lab, double lambda);

/// `count` seeded probes in (0, 1.05·λ_max), nudged off the spectra.
std::vector<double> random_probes(const Lab& lab, std::size_t count, std::uint64_t seed);

/// N_N(λ) = N_D(λ) + n_D(λ) + dim G_λ⁻. Counts come from LDLᵀ inertia,
/// n_D from the eigenvectors, dim G_λ⁻ from the pencil on G_λ. Away from
/// the spectra the Schur complement signature must also match the pencil.
CheckResult check_haynsworth(const Lab& lab, double lambda);

/// dim G_λ⁰ = n_N + n_D + n_{N,D}, plus membership of every eigenvector at λ
/// in the kernel of 𝓑_λ and dim G_λ = |Γ| + n_{N,D}.
CheckResult check_kernel_dim(const Lab& lab, double lambda);

/// Sign pattern of the near-zero pencil branches at λ − δ/2, λ, λ + δ/2.
/// Non-positive ε or δ selects them automatically from the spectra.
CheckResult check_crossing(const Lab& lab, double lambda, double epsilon = 0, double delta = 0);

/// dim G_b⁻ = dim G_a⁻ + #N[a,b) − #D(a,b], common multiplicity excluded.
/// Throws invalid_argument when an endpoint is an eigenvalue.
CheckResult check_interval(const Lab& lab, double a, double b);

/// a[u] ≤ λ‖u‖² on span of Dirichlet eigenvectors up to λ, Neumann
/// eigenvectors at λ and G_λ⁰ + G_λ⁻. Throws invalid_argument if λ ≤ 0.
CheckResult check_filonov(const Lab& lab, double lambda, Index n_samples, std::uint64_t seed);

/// n₋(R′(λ)) = N_N(λ) − N_D(λ); throws spectral_point at eigenvalues.
CheckResult check_resolvent(const Lab& lab, double lambda);

/// Jump of n₋(R′) across the eigenvalue λ0 equals n_N(λ0) − n_D(λ0).
CheckResult check_resolvent_jump(const Lab& lab, double lambda0, double delta = 0);

struct PayneRecord {
  Index k = 0;
  double lambda_d = 0;                       ///< λ_{D,k}
  std::optional<double> lambda_n_next;       ///< λ_{N,k+1} when computed
  Index p = 0;                               ///< dim G⁻ at λ_{D,k}
  Index q = 0;                               ///< n_D(λ_{D,k})
  Index k0 = 0;                              ///< first index of the Dirichlet cluster containing k
  std::optional<double> margin_strict;       ///< λ_{D,k} − λ_{N,k0+q+p−1}, must be > 0; empty if vacuous or out of range
  std::optional<double> margin_weak;         ///< λ_{D,k} − λ_{N,k+p}, must be ≥ 0; empty if out of range
  std::optional<double> payne_margin;        ///< λ_{D,k} − λ_{N,k+1}
  bool witness = false;  ///< some vector of G⁰ + G⁻ at λ_{D,k} is nonzero on Γ
  friend bool operator==(const PayneRecord&, const PayneRecord&) = default;
};

struct PayneReport {
  std::vector<PayneRecord> records;
  CheckResult result;
};

/// Index chains at the first k_max Dirichlet eigenvalues. The weak and strict
/// chains are asserted; λ_{N,k+1} < λ_{D,k} is asserted only when
/// `assert_payne` is set (continuum mode). Without eigenvectors p_k and q_k
/// follow from the spectral counts and only the Payne margin is asserted.
PayneReport check_payne_chain(const Lab& lab, Index k_max, bool assert_payne = false);

/// b[P′_B(λ)v] along `grid`: nondecreasing for Neumann, nonincreasing for
/// Dirichlet, strictly when v lies outside the operator domain.
CheckResult check_monotone(const Lab& lab, const Vector<double>& v, std::span<const double> grid, Problem problem);

/// Closed-form value of b[P′_B(λ)v] used as an independent reference.
double monotone_closed_form(const Lab& lab, const Vector<double>& v, double lambda, Problem problem);

/// Discrete P′_B(λ)v.
Vector<double> projected(const Lab& lab, const Vector<double>& v, double lambda, Problem problem);

/// Π₀ = zero-extended K_II⁻¹(K·)_I: idempotent, a-self-adjoint, I − Π₀ maps
/// into G₀ with rank |Γ|, and A_D⁻¹f = Π₀A_N⁻¹f for `n_random` random f.
CheckResult check_projection_identities(const Lab& lab, Index n_random = 20, std::uint64_t seed = 1);

struct SuiteOptions {
  std::vector<double> lambdas;  ///< explicit probes; random ones are added on top
  std::size_t n_random = 10;
  Index eigen_limit = 10;  ///< probe every distinct eigenvalue below the eigen_limit-th of each problem
  std::size_t n_intervals = 5;
  Index filonov_samples = 100;
  std::size_t monotone_vectors = 4;
  Index monotone_points = 50;
  Index payne_k_max = 10;
  bool assert_payne = false;
  std::uint64_t seed = 1;
  unsigned jobs = 1;
};

/// Runs every check family on one fixture. Results come back in a fixed
/// order independent of `jobs`.
std::vector<CheckResult> run_suite(const Lab& lab, const SuiteOptions& opt);

}  // namespace dtnlab
