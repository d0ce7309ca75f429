// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "dtnlab/cli.hpp"
#include "dtnlab/dtn.hpp"
#include "dtnlab/fixtures.hpp"
#include "dtnlab/inertia.hpp"
#include "dtnlab/verify.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

using namespace dtnlab;
using Mat = Matrix<double>;
using Vec = Vector<double>;

namespace {

constexpr std::size_t kRandomFixtures = 500;
constexpr std::size_t kLambdasPerRandomFixture = 10;
constexpr double kSuiteSeconds = 30.0;
constexpr Index kEigenLimit = 10;
constexpr std::size_t kSimpleEigenvalues = 5;
constexpr double kHandValueRel = 1e-6;
constexpr std::size_t kResolventProbes = 20;
constexpr Index kFilonovSamples = 1000;
constexpr Index kMonotonePoints = 50;
constexpr std::size_t kMonotoneVectors = 20;
constexpr double kConvergeSeconds = 300.0;
constexpr std::size_t kRandomMatrices = 300;
constexpr std::size_t kShiftsPerMatrix = 10;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::string summary;
};

struct Tally {
  std::size_t checked = 0;
  std::size_t failed = 0;
  std::string first_failure;

  void add(bool ok, const std::string& what) {
    ++checked;
    if (!ok && failed++ == 0) first_failure = what;
  }
  void add(const CheckResult& r, const std::string& where) {
    if (r.status == CheckStatus::skipped) return;
    add(r.passed(), where + " " + r.name + ": " + r.reason + " " + r.diagnostics);
  }
  std::string text() const {
    std::ostringstream os;
    os << checked << " checked, " << failed << " failed";
    if (failed) os << " (first: " << first_failure << ")";
    return os.str();
  }
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

std::string lam(double x) { return "lambda=" + fmt(x); }

struct Bench {
  const Fixture* fixture;
  Lab lab;
};

// Distinct eigenvalues among the first kEigenLimit of each problem.
std::vector<double> low_eigenvalues(const Lab& lab) {
  const auto& n = lab.spectra.neumann.values;
  const auto& d = lab.spectra.dirichlet.values;
  std::vector<double> out;
  for (double x : distinct_eigenvalues(lab)) {
    const bool in_n = n.size() > 0 && x <= n(std::min<Index>(kEigenLimit, n.size()) - 1) + cluster_width(x, lab.tol);
    const bool in_d = d.size() > 0 && x <= d(std::min<Index>(kEigenLimit, d.size()) - 1) + cluster_width(x, lab.tol);
    if (in_n || in_d) out.push_back(x);
  }
  return out;
}

// Eigenvalues of multiplicity one in the problem where they occur and not shared.
std::vector<double> simple_eigenvalues(const Lab& lab, std::size_t count) {
  std::vector<double> out;
  for (double x : distinct_eigenvalues(lab)) {
    const auto m = multiplicities(lab.form, lab.spectra, x, lab.tol);
    if (m.common == 0 && m.total_neumann <= 1 && m.total_dirichlet <= 1) out.push_back(x);
    if (out.size() == count) break;
  }
  return out;
}

Outcome criterion1() {
  const auto t0 = Clock::now();
  Tally t;
  for (std::uint64_t seed = 0; seed < kRandomFixtures; ++seed) {
    const auto fx = make_fixture("random", random_graph(seed));
    const Lab lab = make_lab(fx.form, fx.split, {}, false);
    for (double l : random_probes(lab, kLambdasPerRandomFixture, seed + 1)) {
      const Index nn = count_below(fx.form, fx.split, Problem::neumann, l).count;
      const Index nd = count_below(fx.form, fx.split, Problem::dirichlet, l).count;
      const Index ns = inertia_of<double>(schur_dtn(fx.form, fx.split, l).S).n_minus;
      t.add(nn == nd + ns, "seed " + std::to_string(seed) + " " + lam(l) + ": " + std::to_string(nn) +
                               " != " + std::to_string(nd) + " + " + std::to_string(ns));
    }
  }
  const double secs = seconds_since(t0);
  return {t.failed == 0 && t.checked == kRandomFixtures * kLambdasPerRandomFixture && secs <= kSuiteSeconds,
          t.text() + ", " + fmt(secs) + " s (limit " + fmt(kSuiteSeconds) + " s)"};
}

Outcome criterion2(const std::vector<Bench>& benches) {
  Tally t;
  for (const auto& b : benches)
    for (double l : low_eigenvalues(b.lab)) t.add(check_haynsworth(b.lab, l), b.fixture->name + " " + lam(l));
  return {t.failed == 0 && t.checked > 0, t.text()};
}

Outcome criterion3(const std::vector<Bench>& benches) {
  Tally t;
  std::size_t shared = 0;
  for (const auto& b : benches) {
    for (double l : low_eigenvalues(b.lab)) {
      const auto r = check_kernel_dim(b.lab, l);
      t.add(r.status == CheckStatus::pass, b.fixture->name + " " + lam(l) + ": " + r.reason);
      if (multiplicities(b.lab.form, b.lab.spectra, l, b.lab.tol).common >= 1) ++shared;
    }
  }
  return {t.failed == 0 && t.checked > 0 && shared > 0,
          t.text() + ", " + std::to_string(shared) + " probes with shared eigenvectors"};
}

Outcome criterion4(const std::vector<Bench>& benches) {
  Tally t;
  for (const auto& b : benches) {
    const auto simple = simple_eigenvalues(b.lab, kSimpleEigenvalues);
    for (double l : simple) {
      const auto r = check_crossing(b.lab, l);
      t.add(r.status == CheckStatus::pass, b.fixture->name + " " + lam(l) + ": " + r.reason + " " + r.diagnostics);
    }
  }
  // Hand values of the scalar map on the three-node path, quoted to three significant digits.
  const auto p3 = p3_fixture();
  const std::pair<double, double> hand[] = {{0.9, 0.260}, {1.1, -0.368}, {1.3, -2.98}, {1.45, 4.28}};
  std::ostringstream vals;
  for (auto [mu, quoted] : hand) {
    const double s = schur_dtn(p3.form, p3.split, mu).S(0, 0);
    const double exact = (2 - mu) - (2 - mu) / ((2 - mu) * (3 - mu) - 1);
    t.add(std::abs(s - exact) <= kHandValueRel * std::abs(exact), "S(" + fmt(mu) + ") = " + fmt(s));
    const double digits = std::pow(10.0, std::floor(std::log10(std::abs(quoted))) - 2);
    t.add(std::abs(s - quoted) <= digits / 2 + 1e-12, "S(" + fmt(mu) + ") = " + fmt(s) + " vs " + fmt(quoted));
    vals << " S(" << fmt(mu) << ")=" << fmt(s);
  }
  return {t.failed == 0, t.text() + ";" + vals.str()};
}

Outcome criterion5(const std::vector<Bench>& benches) {
  Tally t;
  for (const auto& b : benches) {
    for (double l : random_probes(b.lab, kResolventProbes, 55))
      t.add(check_resolvent(b.lab, l), b.fixture->name + " " + lam(l));
    for (double l : simple_eigenvalues(b.lab, kSimpleEigenvalues))
      t.add(check_resolvent_jump(b.lab, l), b.fixture->name + " jump at " + lam(l));
  }
  return {t.failed == 0 && t.checked > 0, t.text()};
}

Outcome criterion6(const std::vector<Bench>& benches) {
  Tally t;
  std::size_t skipped = 0;
  for (const auto& b : benches) {
    const auto& n = b.lab.spectra.neumann.values;
    const auto& d = b.lab.spectra.dirichlet.values;
    // A Neumann eigenvalue, a Dirichlet eigenvalue and a point between.
    const double l1 = n(std::min<Index>(2, n.size() - 1));
    const double l2 = d(std::min<Index>(2, d.size() - 1));
    const double l3 = nudge_off_spectrum(b.lab, (l1 + l2) / 2);
    std::uint64_t seed = 100;
    for (double l : {l1, l2, l3}) {
      const auto r = check_filonov(b.lab, l, kFilonovSamples, seed++);
      if (r.status == CheckStatus::skipped) ++skipped;
      t.add(r, b.fixture->name + " " + lam(l));
    }
  }
  return {t.failed == 0 && t.checked > 0,
          t.text() + " (" + std::to_string(kFilonovSamples) + " samples each, " + std::to_string(skipped) +
              " with an empty span)"};
}

Outcome criterion7(const std::vector<Bench>& benches) {
  Tally t;
  double worst = 0;
  for (const auto& b : benches) {
    const Lab& lab = b.lab;
    auto ev = distinct_eigenvalues(lab);
    ev.insert(ev.begin(), 0.0);
    std::vector<std::pair<double, double>> gaps;
    for (std::size_t i = 0; i + 1 < ev.size() && gaps.size() < 4; ++i) {
      const double w = ev[i + 1] - ev[i];
      gaps.emplace_back(ev[i] + 0.02 * w, ev[i + 1] - 0.02 * w);
    }
    std::mt19937_64 rng(77);
    std::normal_distribution<double> g;
    for (std::size_t k = 0; k < kMonotoneVectors; ++k) {
      Vec v(lab.form.size());
      for (Index i = 0; i < v.size(); ++i) v(i) = g(rng);
      const auto [lo, hi] = gaps[k % gaps.size()];
      std::vector<double> grid;
      for (Index i = 0; i < kMonotonePoints; ++i)
        grid.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(kMonotonePoints - 1));
      for (Problem p : {Problem::neumann, Problem::dirichlet}) {
        const auto r = check_monotone(lab, v, grid, p);
        worst = std::max(worst, r.residual.value_or(0));
        t.add(r, b.fixture->name + " [" + fmt(lo) + ", " + fmt(hi) + "]");
      }
    }
  }
  return {t.failed == 0 && t.checked > 0, t.text() + ", worst relative violation " + fmt(worst)};
}

Outcome criterion8() {
  const auto t0 = Clock::now();
  cli::ScenarioConfig cfg = cli::parse_config("[run]\ncommand = converge\nladder = 16, 32, 64\nk_max = 10\n");
  const cli::Report rep = cli::run_scenario(cfg);
  const double secs = seconds_since(t0);
  Tally t;
  for (const char* name : {"converge_dirichlet", "converge_neumann", "converge_order_dirichlet",
                           "converge_order_neumann", "payne_chain"}) {
    bool found = false;
    for (const auto& r : rep.checks) {
      if (r.name != name) continue;
      found = true;
      t.add(r.passed(), r.name + ": " + r.reason + " " + r.diagnostics);
    }
    t.add(found, std::string("missing ") + name);
  }
  std::size_t payne_held = 0;
  for (const auto& p : rep.payne) {
    const bool ok = p.payne_margin && *p.payne_margin > 0;
    if (ok) ++payne_held;
    t.add(ok, "Payne at k=" + std::to_string(p.k));
  }
  t.add(rep.payne.size() == 10, "fewer than 10 Payne records");
  const auto& c = *rep.convergence;
  const auto& top = c.levels.back();
  const double d_err = *std::max_element(top.dirichlet_error.begin(), top.dirichlet_error.end());
  const double n_err = *std::max_element(top.neumann_error.begin(), top.neumann_error.end());
  std::ostringstream os;
  os << t.text() << "; h=1/" << top.inverse_h << " Dirichlet err " << fmt(100 * d_err) << "%, Neumann err "
     << fmt(100 * n_err) << "%, order " << fmt(c.order_dirichlet.value_or(NAN)) << "/"
     << fmt(c.order_neumann.value_or(NAN)) << ", Payne " << payne_held << "/" << rep.payne.size() << ", "
     << fmt(secs) << " s (limit " << fmt(kConvergeSeconds) << " s)";
  return {t.failed == 0 && secs <= kConvergeSeconds, os.str()};
}

Outcome criterion9(const std::vector<Bench>& benches) {
  Tally t;
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> g;
  std::uniform_int_distribution<Index> size(1, 40);
  for (std::size_t m = 0; m < kRandomMatrices; ++m) {
    const Index n = size(rng);
    Mat a(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) a(i, j) = g(rng);
    a = ((a + a.transpose()) / 2).eval();
    Eigen::SelfAdjointEigenSolver<Mat> es(a, Eigen::EigenvaluesOnly);
    const Vec& ev = es.eigenvalues();
    std::uniform_real_distribution<double> shift(ev.minCoeff() - 1, ev.maxCoeff() + 1);
    for (std::size_t s = 0; s < kShiftsPerMatrix; ++s) {
      double sigma = shift(rng);
      // Keep the shift clear of the spectrum so both sign counts are unambiguous.
      while ((ev.array() - sigma).abs().minCoeff() < 1e-6) sigma += 1e-5;
      const InertiaTriple in = inertia_of<double>(Mat(a - sigma * Mat::Identity(n, n)));
      const Index minus = (ev.array() < sigma).count();
      t.add(in.n_minus == minus && in.n_zero == 0 && in.n_plus == n - minus,
            "matrix " + std::to_string(m) + " shift " + fmt(sigma));
    }
  }
  const std::size_t matrix_checks = t.checked;

  // Schur signature against the pencil signature on G_λ wherever the Schur complement exists.
  auto compare = [&](const Fixture& fx, const Lab& lab, double l) {
    const auto sig = blambda_signature(glambda_frame(fx.form, fx.split, l, lab.tol), lab.tol);
    // Zero pivots of S are judged on the scale of K, since S itself may vanish.
    const Mat S = schur_dtn(fx.form, fx.split, l).S;
    const double s_max = S.cwiseAbs().maxCoeff();
    const double zero_tol = s_max > 0 ? lab.tol.pencil_zero * fx.form.K.cwiseAbs().maxCoeff() / s_max : 0.0;
    const InertiaTriple schur = inertia_of<double>(S, zero_tol);
    const Index common = is_eigenvalue(lab, l) ? multiplicities(fx.form, lab.spectra, l, lab.tol).common : 0;
    const bool ok = sig.routes_agree && sig.inertia.n_minus == schur.n_minus && sig.inertia.n_plus == schur.n_plus &&
                    sig.inertia.n_zero == schur.n_zero + common;
    t.add(ok, fx.name + " " + lam(l));
  };
  for (const auto& b : benches) {
    for (double l : random_probes(b.lab, 20, 9)) compare(*b.fixture, b.lab, l);
    for (double l : b.lab.spectra.neumann.values)
      if (multiplicities(b.lab.form, b.lab.spectra, l, b.lab.tol).total_dirichlet == 0)
        compare(*b.fixture, b.lab, l);
  }
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto fx = make_fixture("random", random_graph(seed));
    const Lab lab = make_lab(fx.form, fx.split, {}, false);
    for (double l : random_probes(lab, 5, seed)) compare(fx, lab, l);
  }
  return {t.failed == 0, t.text() + " (" + std::to_string(matrix_checks) + " matrix shifts, " +
                             std::to_string(t.checked - matrix_checks) + " Schur/pencil comparisons)"};
}

}  // namespace

int main() {
  const std::vector<Fixture> fixtures = standard_fixtures();
  std::vector<Bench> benches;
  for (const auto& fx : fixtures) benches.push_back({&fx, make_lab(fx.form, fx.split)});
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 Schur counting identity on random graphs", [] { return criterion1(); }},
      {"2 full counting identity at eigenvalues", [&] { return criterion2(benches); }},
      {"3 kernel law", [&] { return criterion3(benches); }},
      {"4 crossing pattern and hand values", [&] { return criterion4(benches); }},
      {"5 resolvent difference", [&] { return criterion5(benches); }},
      {"6 span inequality", [&] { return criterion6(benches); }},
      {"7 monotone projections", [&] { return criterion7(benches); }},
      {"8 continuum convergence and Payne", [] { return criterion8(); }},
      {"9 inertia cross-oracle", [&] { return criterion9(benches); }},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("criterion %s: %s  %s\n", name.c_str(), o.pass ? "PASS" : "FAIL", o.summary.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
