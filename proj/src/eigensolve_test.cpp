#include "dtnlab/eigensolve.hpp"
#include "dtnlab/fixtures.hpp"

#include <doctest.h>

#include <random>

using namespace dtnlab;
using Mat = Matrix<double>;
using Vec = Vector<double>;

namespace {

Mat random_symmetric(std::mt19937_64& rng, Index n) {
  std::normal_distribution<double> g;
  Mat a(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) a(i, j) = g(rng);
  return (a + a.transpose()) / 2;
}

Mat random_spd(std::mt19937_64& rng, Index n) {
  const Mat a = random_symmetric(rng, n);
  return a * a.transpose() + Mat::Identity(n, n);
}

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

FormPair<double> p3() { return p3_fixture().form; }

}  // namespace

TEST_CASE("standard problems") {
  Mat d = Mat::Zero(3, 3);
  d.diagonal() << 3, 1, 2;
  const auto s = eigh<double>(d);
  CHECK((s.values - vec({1, 2, 3})).norm() < 1e-14);
  CHECK((d * s.vectors - s.vectors * s.values.asDiagonal()).norm() < 1e-14);

  Mat swap(2, 2);
  swap << 0, 1, 1, 0;
  CHECK((eigh<double>(swap).values - vec({-1, 1})).norm() < 1e-14);

  CHECK(eigh<double>(Mat(0, 0)).size() == 0);
}

TEST_CASE("generalized problems") {
  const auto f = p3();
  const auto s = neumann_spectrum(f);
  CHECK((s.values - vec({1, 2, 4})).norm() < 1e-12);
  CHECK((s.vectors.transpose() * f.M * s.vectors - Mat::Identity(3, 3)).norm() < 1e-12);

  const Mat k = f.K;
  CHECK((eigh_gen<double>(k, k / 2).values - vec({2, 2, 2})).norm() < 1e-12);
  CHECK((eigh_gen<double>(Mat(Vec(vec({1, 2, 4})).asDiagonal()), Mat(4 * Mat::Identity(3, 3))).values -
         vec({0.25, 0.5, 1}))
            .norm() < 1e-14);

  Mat bad = Mat::Identity(3, 3);
  bad(1, 1) = -1;
  CHECK_THROWS_AS(eigh_gen<double>(k, bad), Error);
  try {
    eigh_gen<double>(k, bad);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::invalid_mass);
  }
}

TEST_CASE("three-node path spectra and counting") {
  const auto fx = p3_fixture();
  const auto sp = spectral_pair(fx.form, fx.split);
  CHECK((sp.neumann.values - vec({1, 2, 4})).norm() < 1e-12);
  const double r5 = std::sqrt(5.0);
  CHECK((sp.dirichlet.values - vec({(5 - r5) / 2, (5 + r5) / 2})).norm() < 1e-12);

  CHECK(counting(sp.neumann, 0.5) == 0);
  CHECK(counting(sp.neumann, 1.0) == 0);
  CHECK(counting(sp.neumann, 1.5) == 1);
  CHECK(counting(sp.neumann, 2.0) == 1);
  CHECK(counting(sp.neumann, 5.0) == 3);
  CHECK(counting(sp.dirichlet, 1.5) == 1);
  CHECK(counting(sp.dirichlet, 3.0) == 1);
  CHECK(counting(sp.dirichlet, 4.0) == 2);
  CHECK(multiplicity(sp.neumann, 2.0) == 1);
  CHECK(multiplicity(sp.neumann, 2.5) == 0);

  const auto e = eigenspace_basis(fx.form, fx.split, Problem::neumann, 2.0, 1e-9);
  REQUIRE(e.dimension() == 1);
  // Eigenvector at 2 is ±(1, 0, -1)/√2.
  CHECK(std::abs(std::abs(e.basis(0, 0)) - 1 / std::sqrt(2.0)) < 1e-12);
  CHECK(std::abs(e.basis(1, 0)) < 1e-12);
  CHECK(eigenspace_basis(fx.form, fx.split, Problem::dirichlet, 2.0, 1e-9).dimension() == 0);
  CHECK_THROWS_AS(eigenspace_basis(fx.form, fx.split, Problem::neumann, 2.0, 0.0), Error);

  const auto ed = eigenspace_basis(fx.form, fx.split, Problem::dirichlet, (5 - r5) / 2, 1e-9);
  REQUIRE(ed.dimension() == 1);
  CHECK(ed.basis(2, 0) == 0.0);
}

TEST_CASE("common eigenspace of a boundary-free component") {
  const auto fx = p3_triangle_fixture();
  const auto sp = spectral_pair(fx.form, fx.split);
  // The isolated triangle has Laplacian spectrum {0, 3, 3}; with shift 1: {1, 4, 4}.
  for (double lambda : {1.0, 4.0}) {
    const auto m = multiplicities(fx.form, sp, lambda);
    const auto c = common_eigenspace(fx.form, fx.split, lambda, 1e-9);
    CHECK(m.common == c.dimension);
    CHECK(c.dimension == (lambda == 1.0 ? 1 : 2));
    for (Index j = 0; j < c.dimension; ++j) {
      CHECK(c.basis.col(j).head(3).norm() < 1e-10);
      const Vec r = fx.form.K * c.basis.col(j) - lambda * fx.form.M * c.basis.col(j);
      CHECK(r.norm() < 1e-10);
    }
  }
  const auto m = multiplicities(fx.form, sp, 2.0);
  CHECK(m.total_neumann == 1);
  CHECK(m.common == 0);
  CHECK(m.is_eigenvalue());
}

TEST_CASE("residuals and Dirichlet-Neumann ordering on fixtures") {
  auto fixtures = standard_fixtures();
  for (std::uint64_t seed = 0; seed < 40; ++seed) fixtures.push_back(make_fixture("g", random_graph(seed)));
  for (const auto& fx : fixtures) {
    const auto sp = spectral_pair(fx.form, fx.split);
    const double kn = fx.form.K.norm();
    for (const auto* s : {&sp.neumann, &sp.dirichlet}) {
      for (Index j = 0; j < s->size(); ++j) {
        const Vec x = s->vectors.col(j);
        Vec r = fx.form.K * x - s->values(j) * fx.form.M * x;
        if (s == &sp.dirichlet) {
          r = Vec(r(fx.split.interior));
          CHECK(x(fx.split.boundary).norm() == 0.0);
        }
        CHECK(r.norm() <= 1e-10 * kn);
      }
      CHECK(std::is_sorted(s->values.data(), s->values.data() + s->size()));
    }
    // λ_{D,k} ≥ λ_{N,k}
    for (Index k = 0; k < sp.dirichlet.size(); ++k)
      CHECK(sp.dirichlet.values(k) >= sp.neumann.values(k) - 1e-10 * kn);
  }
}

TEST_CASE("Jacobi agrees with Eigen's self-adjoint solver") {
  std::mt19937_64 rng(20240517);
  std::uniform_int_distribution<Index> size(1, 40);
  for (int trial = 0; trial < 300; ++trial) {
    const Index n = size(rng);
    const Mat k = random_symmetric(rng, n);
    const Mat m = random_spd(rng, n);
    const auto ours = eigh_gen<double>(k, m);
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> ref(k, m);
    REQUIRE(ref.info() == Eigen::Success);
    const double scale = std::max(1.0, ref.eigenvalues().cwiseAbs().maxCoeff());
    CHECK((ours.values - ref.eigenvalues()).cwiseAbs().maxCoeff() <= 1e-9 * scale);
    CHECK((ours.vectors.transpose() * m * ours.vectors - Mat::Identity(n, n)).norm() <= 1e-9 * n);
  }
}

TEST_CASE("large problems take the tridiagonal route") {
  std::mt19937_64 rng(7);
  const Mat a = random_symmetric(rng, 30);
  EighOptions jac;
  EighOptions qr;
  qr.jacobi_limit = 10;
  const auto s1 = eigh<double>(a, jac);
  const auto s2 = eigh<double>(a, qr);
  CHECK((s1.values - s2.values).norm() < 1e-11);
  CHECK((a * s2.vectors - s2.vectors * s2.values.asDiagonal()).norm() < 1e-11);
}

TEST_CASE("eigensolves are deterministic") {
  const auto fx = l_shape_fixture(10);
  const auto a = spectral_pair(fx.form, fx.split);
  const auto b = spectral_pair(fx.form, fx.split);
  CHECK(a.neumann.values == b.neumann.values);
  CHECK(a.neumann.vectors == b.neumann.vectors);
  CHECK(a.dirichlet.vectors == b.dirichlet.vectors);
}
