#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstddef>
#include <exception>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace dtnlab {

using Index = Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Which eigenproblem of a form pair is meant. Neumann is the full pencil
/// (K, M); Dirichlet is the interior block (K_II, M_II).
enum class Problem { neumann, dirichlet };

inline const char* to_string(Problem p) { return p == Problem::neumann ? "neumann" : "dirichlet"; }

enum class ErrorKind {
  invalid_argument,
  invalid_domain,
  assembly_failure,
  solver_failure,
  invalid_mass,
  dirichlet_eigenvalue,
  spectral_point,
  parse_error,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::invalid_domain: return "invalid-domain";
    case ErrorKind::assembly_failure: return "assembly-failure";
    case ErrorKind::solver_failure: return "solver-failure";
    case ErrorKind::invalid_mass: return "invalid-mass";
    case ErrorKind::dirichlet_eigenvalue: return "dirichlet-eigenvalue";
    case ErrorKind::spectral_point: return "spectral-point";
    case ErrorKind::parse_error: return "parse-error";
  }
  return "unknown";
}

/// Single exception type for the library; `kind()` distinguishes the cause
/// and `detail()` carries an integer payload (offending pivot index for
/// assembly failures, zero-pivot count for Dirichlet-eigenvalue hits).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, Index detail = -1)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), detail_(detail) {}

  ErrorKind kind() const noexcept { return kind_; }
  Index detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  Index detail_;
};

/// Numerical knobs shared by every module. All have defaults and are echoed
/// into reports so runs can be reproduced.
struct Tolerances {
  double cluster_rel = 1e-9;      ///< |λ−μ| ≤ cluster_rel·max(1,|λ|) ⇒ same eigenvalue
  double pencil_zero = 1e-8;      ///< |ν| ≤ pencil_zero ⇒ zero eigenvalue of the pencil on G_λ
  double principal_angle = 1e-8;  ///< cos θ ≥ 1 − principal_angle ⇒ intersecting eigenspaces
  double rank_factor = 10.0;      ///< nullspace threshold multiplier
  double inequality = 1e-8;       ///< quadratic-form inequality slack (relative to ‖K‖_F‖u‖²)
  double monotone = 1e-9;         ///< one-sided monotonicity slack (relative to sample scale)
  double projection = 1e-9;       ///< projection identities (relative)
  double resolvent_rank = 1e-10;  ///< eigenvalues of R′ below this·‖R′‖₂ count as zero
};

inline double cluster_width(double lambda, const Tolerances& tol) {
  return tol.cluster_rel * std::max(1.0, std::abs(lambda));
}

/// Evaluates `fn(i)` for i in [0, count) on up to `jobs` threads. Results
/// are written by index, so the output order never depends on scheduling.
template <typename Fn>
void parallel_for(std::size_t count, unsigned jobs, Fn&& fn) {
  if (jobs <= 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(jobs, count));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::vector<std::exception_ptr> errors(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < count; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace dtnlab
