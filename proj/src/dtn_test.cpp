#include "dtnlab/dtn.hpp"
#include "dtnlab/fixtures.hpp"

#include <doctest.h>

#include <random>
#include <sstream>

using namespace dtnlab;
using Mat = Matrix<double>;
using Vec = Vector<double>;

namespace {

// Scalar map of the three-node path, boundary = {2}, shift 1, M = I.
double p3_dtn(double mu) { return (2 - mu) - (2 - mu) / ((2 - mu) * (3 - mu) - 1); }

const double ld1 = (5 - std::sqrt(5.0)) / 2;
const double ld2 = (5 + std::sqrt(5.0)) / 2;

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::invalid_argument;
}

}  // namespace

TEST_CASE("harmonic extension of the three-node path") {
  const auto fx = p3_fixture();
  const Mat e = harmonic_extension(fx.form, fx.split, 0.0);
  REQUIRE(e.rows() == 3);
  REQUIRE(e.cols() == 1);
  CHECK(std::abs(e(0, 0) - 0.2) < 1e-14);
  CHECK(std::abs(e(1, 0) - 0.4) < 1e-14);
  CHECK(e(2, 0) == 1.0);
  CHECK(interior_rows(fx.form, fx.split, 0.0).operator*(e).norm() < 1e-14);
  CHECK(kind_of([&] { harmonic_extension(fx.form, fx.split, ld1); }) == ErrorKind::dirichlet_eigenvalue);
}

TEST_CASE("Dirichlet-to-Neumann values") {
  const auto fx = p3_fixture();
  CHECK(std::abs(schur_dtn(fx.form, fx.split, 0.0).S(0, 0) - 1.6) < 1e-14);
  CHECK(std::abs(schur_dtn(fx.form, fx.split, 3.0).S(0, 0) + 2.0) < 1e-14);
  const std::pair<double, double> printed[] = {{0.9, 0.26031}, {1.1, -0.36761}, {1.3, -2.9842}, {1.45, 4.2788}};
  for (auto [mu, value] : printed) {
    const double s = schur_dtn(fx.form, fx.split, mu).S(0, 0);
    CHECK(std::abs(s - p3_dtn(mu)) <= 1e-12 * std::max(1.0, std::abs(s)));
    CHECK(std::abs(s - value) <= 5e-5 * std::max(1.0, std::abs(value)));
  }
  for (double mu : {ld1, ld2})
    CHECK(kind_of([&] { schur_dtn(fx.form, fx.split, mu); }) == ErrorKind::dirichlet_eigenvalue);
  // Zeros of the map sit at the Neumann eigenvalues.
  for (double mu : {1.0, 2.0, 4.0}) CHECK(std::abs(schur_dtn(fx.form, fx.split, mu).S(0, 0)) < 1e-12);
}

TEST_CASE("G-lambda frame and signature") {
  const auto fx = p3_fixture();
  for (double mu : {0.5, 1.1, ld1, 1.45, 3.0, ld2}) {
    const auto fr = glambda_frame(fx.form, fx.split, mu);
    CHECK(fr.dimension() == 1);
    CHECK((fr.basis.transpose() * fr.basis - Mat::Identity(1, 1)).norm() < 1e-13);
    CHECK(interior_rows(fx.form, fx.split, mu).operator*(fr.basis).norm() < 1e-12);
    const auto sig = blambda_signature(fr);
    CHECK(sig.routes_agree);
    CHECK(sig.inertia == sig.ldlt_inertia);
  }
  // Below the first Neumann eigenvalue the map is positive.
  CHECK(blambda_signature(glambda_frame(fx.form, fx.split, 0.5)).inertia == InertiaTriple{0, 0, 1});
  CHECK(blambda_signature(glambda_frame(fx.form, fx.split, 1.1)).inertia == InertiaTriple{1, 0, 0});
  CHECK(blambda_signature(glambda_frame(fx.form, fx.split, ld1)).inertia == InertiaTriple{0, 1, 0});
  CHECK(blambda_signature(glambda_frame(fx.form, fx.split, 2.0)).inertia == InertiaTriple{0, 1, 0});
  CHECK(blambda_signature(glambda_frame(fx.form, fx.split, 3.0)).inertia == InertiaTriple{1, 0, 0});

  // Away from Dirichlet eigenvalues ν has the sign of S scaled by the a-norm of E.
  for (double mu : {0.9, 1.1, 1.3, 1.45}) {
    const double nu = pencil_eigen(glambda_frame(fx.form, fx.split, mu)).nu(0);
    const Mat e = harmonic_extension(fx.form, fx.split, mu);
    const double a = (e.transpose() * fx.form.K * e)(0, 0);
    CHECK(std::abs(nu - p3_dtn(mu) / a) < 1e-11);
  }
}

TEST_CASE("frame dimension counts boundary nodes plus shared eigenvectors") {
  const auto fx = p3_triangle_fixture();
  CHECK(glambda_frame(fx.form, fx.split, 0.5).dimension() == 1);
  CHECK(glambda_frame(fx.form, fx.split, 1.0).dimension() == 2);
  CHECK(glambda_frame(fx.form, fx.split, 4.0).dimension() == 3);
  const auto g = square_grid_fixture(8);
  const double h = 0.37;
  CHECK(glambda_frame(g.form, g.split, h).dimension() == g.split.n_boundary());
}

TEST_CASE("branch trace and crossings of the three-node path") {
  const auto fx = p3_fixture();
  const auto trace = blambda_branches(fx.form, fx.split, 0.5, 4.5, 200);
  const auto events = crossing_events(trace);
  REQUIRE(events.size() == 5);
  const double where[] = {1.0, ld1, 2.0, ld2, 4.0};
  const int to[] = {-1, 1, -1, 1, -1};
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(events[i].mu_low <= where[i]);
    CHECK(events[i].mu_high >= where[i]);
    CHECK(std::abs(events[i].mu - where[i]) < 0.02);
    CHECK(events[i].to_sign == to[i]);
    CHECK(events[i].from_sign == -to[i]);
  }
  const auto again = crossing_events(blambda_branches(fx.form, fx.split, 0.5, 4.5, 200));
  CHECK(again == events);

  std::ostringstream os;
  write_trace_csv(trace, os);
  CHECK(os.str().rfind("mu,branch,nu,flag\n", 0) == 0);

  CHECK(kind_of([&] { blambda_branches(fx.form, fx.split, 2.0, 1.0, 10); }) == ErrorKind::invalid_argument);
  CHECK(kind_of([&] { blambda_branches(fx.form, fx.split, 1.0, 2.0, 1); }) == ErrorKind::invalid_argument);
}

TEST_CASE("resolvent difference") {
  const auto fx = p3_fixture();
  const auto r3 = resolvent_difference(fx.form, fx.split, 3.0);
  CHECK(r3.inertia.n_minus == 1);
  CHECK(r3.rank == 1);
  const auto r05 = resolvent_difference(fx.form, fx.split, 0.5);
  CHECK(r05.inertia.n_minus == 0);
  CHECK(r05.rank == 1);
  CHECK(resolvent_difference(fx.form, fx.split, 5.0).inertia.n_minus == 1);
  CHECK(kind_of([&] { resolvent_difference(fx.form, fx.split, 2.0); }) == ErrorKind::spectral_point);
  CHECK(kind_of([&] { resolvent_difference(fx.form, fx.split, ld1); }) == ErrorKind::spectral_point);
}

TEST_CASE("Schur complement and pencil agree on random graphs") {
  std::mt19937_64 rng(3);
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto fx = make_fixture("g", random_graph(seed));
    const auto sp = spectral_pair(fx.form, fx.split, {}, false);
    std::uniform_real_distribution<double> u(0, 1.05 * sp.neumann.values.maxCoeff());
    for (int k = 0; k < 5; ++k) {
      const double mu = u(rng);
      const auto s = schur_dtn(fx.form, fx.split, mu);
      CHECK((s.S - s.S.transpose()).norm() == 0.0);
      const Mat e = harmonic_extension(fx.form, fx.split, mu);
      const Mat t = fx.form.K - mu * fx.form.M;
      CHECK((e.transpose() * t * e - s.S).norm() <= 1e-9 * std::max(1.0, s.S.norm()) * s.condition);
      const auto fr = glambda_frame(fx.form, fx.split, mu);
      const auto sig = blambda_signature(fr);
      CHECK(fr.dimension() >= fx.split.n_boundary());
      CHECK(sig.inertia.dimension() == fr.dimension());
      // The shared eigenvectors (if any) are a-orthogonal to E and b-null.
      const auto schur = inertia_of<double>(s.S);
      CHECK(sig.inertia.n_minus == schur.n_minus);
      CHECK(sig.inertia.n_plus == schur.n_plus);
    }
  }
}
