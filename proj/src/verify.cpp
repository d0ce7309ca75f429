#include "dtnlab/verify.hpp"

#include "dtnlab/inertia.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <sstream>

namespace dtnlab {

const char* to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::pass: return "pass";
    case CheckStatus::fail: return "fail";
    case CheckStatus::skipped: return "skipped";
  }
  return "unknown";
}

CheckStatus parse_check_status(const std::string& s) {
  if (s == "pass") return CheckStatus::pass;
  if (s == "fail") return CheckStatus::fail;
  if (s == "skipped") return CheckStatus::skipped;
  throw Error(ErrorKind::parse_error, "unknown check status '" + s + "'");
}

namespace {

using Mat = Matrix<double>;
using Vec = Vector<double>;

CheckResult identity(std::string name, double lambda, long long lhs, long long rhs) {
  CheckResult r;
  r.name = std::move(name);
  r.lambda = lambda;
  r.lhs = lhs;
  r.rhs = rhs;
  r.status = lhs == rhs ? CheckStatus::pass : CheckStatus::fail;
  if (lhs != rhs) r.reason = "integer sides differ";
  return r;
}

void fail(CheckResult& r, const std::string& why) {
  r.status = CheckStatus::fail;
  if (!r.reason.empty()) r.reason += "; ";
  r.reason += why;
}

double cw(const Lab& lab, double lambda) { return cluster_width(lambda, lab.tol); }

Index count_in_window(const Vec& values, double lambda, double t) {
  Index c = 0;
  for (Index j = 0; j < values.size(); ++j)
    if (std::abs(values(j) - lambda) <= t) ++c;
  return c;
}

Index count_below_spec(const Vec& values, double lambda, double t) {
  Index c = 0;
  for (Index j = 0; j < values.size(); ++j)
    if (values(j) < lambda - t) ++c;
  return c;
}

Multiplicities mults(const Lab& lab, double lambda) {
  if (lab.spectra.neumann.has_vectors() && lab.spectra.dirichlet.has_vectors())
    return multiplicities(lab.form, lab.spectra, lambda, lab.tol);
  Multiplicities m;
  m.total_neumann = count_in_window(lab.spectra.neumann.values, lambda, cw(lab, lambda));
  m.total_dirichlet = count_in_window(lab.spectra.dirichlet.values, lambda, cw(lab, lambda));
  return m;
}

struct Signature {
  GLambdaFrame<double> frame;
  PencilSignature<double> sig;
};

Signature signature_at(const Lab& lab, double lambda) {
  Signature s{glambda_frame(lab.form, lab.split, lambda, lab.tol), {}};
  s.sig = blambda_signature(s.frame, lab.tol);
  return s;
}

void note_frame(std::ostringstream& diag, const Signature& s) {
  if (s.frame.ill_conditioned_rank) diag << " rank-ambiguous(threshold=" << s.frame.threshold << ")";
  if (!s.sig.routes_agree) diag << " pencil-routes-disagree";
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(10);
  os << x;
  return os.str();
}

// Solves with the Bunch–Kaufman factorization of K − λM (full or interior block).
Mat solve_shifted(const Lab& lab, Problem problem, double lambda, const Mat& rhs) {
  return ldlt<double>(shifted_block(lab.form, lab.split, problem, lambda)).solve(rhs);
}

}  // namespace

Lab make_lab(const FormPair<double>& form, const IndexSplit& split, const Tolerances& tol, bool vectors) {
  Lab lab{form, split, spectral_pair(form, split, tol, vectors), tol, form.K.norm()};
  return lab;
}

std::vector<double> distinct_eigenvalues(const Lab& lab) {
  std::vector<double> all;
  for (Index j = 0; j < lab.spectra.neumann.size(); ++j) all.push_back(lab.spectra.neumann.values(j));
  for (Index j = 0; j < lab.spectra.dirichlet.size(); ++j) all.push_back(lab.spectra.dirichlet.values(j));
  std::sort(all.begin(), all.end());
  std::vector<double> out;
  for (double x : all)
    if (out.empty() || x - out.back() > cw(lab, out.back())) out.push_back(x);
  return out;
}

bool is_eigenvalue(const Lab& lab, double lambda) {
  const double t = cw(lab, lambda);
  return count_in_window(lab.spectra.neumann.values, lambda, t) + count_in_window(lab.spectra.dirichlet.values, lambda, t) >
         0;
}

double nudge_off_spectrum(const Lab& lab, double lambda) {
  for (int guard = 0; guard < 1000; ++guard) {
    const double t = 10 * cw(lab, lambda);
    if (count_in_window(lab.spectra.neumann.values, lambda, t) + count_in_window(lab.spectra.dirichlet.values, lambda, t) ==
        0)
      return lambda;
    lambda += t;
  }
  return lambda;
}

std::vector<double> random_probes(const Lab& lab, std::size_t count, std::uint64_t seed) {
  double top = 1;
  if (lab.spectra.neumann.size() > 0) top = std::max(top, lab.spectra.neumann.values.maxCoeff());
  if (lab.spectra.dirichlet.size() > 0) top = std::max(top, lab.spectra.dirichlet.values.maxCoeff());
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.05 * top);
  std::vector<double> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(nudge_off_spectrum(lab, u(rng)));
  return out;
}

CheckResult check_haynsworth(const Lab& lab, double lambda) {
  const CountResult nn = count_below<double>(lab.form, lab.split, Problem::neumann, lambda, lab.tol);
  const CountResult nd = count_below<double>(lab.form, lab.split, Problem::dirichlet, lambda, lab.tol);
  const Multiplicities m = mults(lab, lambda);
  const Signature s = signature_at(lab, lambda);
  const Index g_minus = s.sig.inertia.n_minus;

  CheckResult r = identity("haynsworth", lambda, nn.count, nd.count + m.n_dirichlet() + g_minus);
  std::ostringstream diag;
  diag << "N_N=" << nn.count << " N_D=" << nd.count << " n_D=" << m.n_dirichlet() << " dimG-=" << g_minus;
  note_frame(diag, s);
  if (!s.sig.routes_agree) fail(r, "pencil eigenvalue and LDLT signatures differ");
  if (nd.n_at == 0 && m.total_dirichlet == 0) {
    const auto dtn = schur_dtn(lab.form, lab.split, lambda, lab.tol);
    const InertiaTriple schur = inertia_of<double>(dtn.S);
    diag << " n-(S)=" << schur.n_minus;
    if (!m.is_eigenvalue() && !(schur == s.sig.inertia)) fail(r, "Schur and pencil signatures differ");
  }
  r.diagnostics = diag.str();
  return r;
}

CheckResult check_kernel_dim(const Lab& lab, double lambda) {
  const Multiplicities m = mults(lab, lambda);
  const Signature s = signature_at(lab, lambda);
  CheckResult r = identity("kernel_dim", lambda, s.sig.inertia.n_zero, m.n_neumann() + m.n_dirichlet() + m.common);
  std::ostringstream diag;
  diag << "dimG0=" << s.sig.inertia.n_zero << " n_N=" << m.n_neumann() << " n_D=" << m.n_dirichlet()
       << " n_ND=" << m.common << " dimG=" << s.frame.dimension();
  note_frame(diag, s);
  if (s.frame.dimension() != lab.split.n_boundary() + m.common) fail(r, "dim G differs from |boundary| + n_ND");

  double worst = 0;
  if (lab.spectra.neumann.has_vectors() && lab.spectra.dirichlet.has_vectors()) {
    const Mat t = lab.form.K - lambda * lab.form.M;
    for (const Spectrum<double>* spec : {&lab.spectra.neumann, &lab.spectra.dirichlet}) {
      const auto basis = eigenspace_basis(*spec, Problem::neumann, lambda).basis;
      for (Index j = 0; j < basis.cols(); ++j) {
        const Vec u = basis.col(j);
        const Vec tu = t * u;
        const double scale = lab.k_norm * u.norm();
        worst = std::max(worst, tu(lab.split.interior).norm() / scale);
        worst = std::max(worst, (s.frame.basis.transpose() * tu).norm() / scale);
      }
    }
  }
  r.residual = worst;
  r.tolerance = lab.tol.inequality;
  if (worst > lab.tol.inequality) fail(r, "eigenvector outside the kernel of the pencil");
  r.diagnostics = diag.str();
  return r;
}

CheckResult check_crossing(const Lab& lab, double lambda, double epsilon, double delta) {
  CheckResult r;
  r.name = "crossing";
  r.lambda = lambda;
  const Multiplicities m = mults(lab, lambda);
  const double zero = lab.tol.pencil_zero;

  const Signature at = signature_at(lab, lambda);
  const Vec& nu0 = at.sig.nu;
  double nu_min = 1;
  for (Index j = 0; j < nu0.size(); ++j)
    if (std::abs(nu0(j)) > zero) nu_min = std::min(nu_min, std::abs(nu0(j)));
  const double eps = epsilon > 0 ? epsilon : nu_min / 2;

  double gap = std::numeric_limits<double>::infinity();
  for (double mu : distinct_eigenvalues(lab))
    if (std::abs(mu - lambda) > cw(lab, lambda)) gap = std::min(gap, std::abs(mu - lambda));
  if (!std::isfinite(gap)) gap = std::max(1.0, std::abs(lambda));
  double d = delta > 0 ? std::min(delta, gap / 2) : gap / 2;

  auto probe = [&](double mu) { return pencil_eigen(glambda_frame(lab.form, lab.split, mu, lab.tol)).nu; };
  struct Count {
    Index neg = 0, pos = 0, zero = 0;
  };
  auto tally = [&](const Vec& nu) {
    Count c;
    for (Index j = 0; j < nu.size(); ++j) {
      if (std::abs(nu(j)) >= eps) continue;
      if (nu(j) < -zero) ++c.neg;
      else if (nu(j) > zero) ++c.pos;
      else ++c.zero;
    }
    return c;
  };
  // Admissible: every probe value is either clearly inside (−ε/2, ε/2) and
  // resolvable in sign, or clearly outside (−1.5ε, 1.5ε).
  enum class Fit { ok, too_wide, too_narrow };
  auto fit = [&](const Vec& nu) {
    for (Index j = 0; j < nu.size(); ++j) {
      const double a = std::abs(nu(j));
      if (a >= eps / 2 && a <= 1.5 * eps) return Fit::too_wide;
      if (a < eps / 2 && a <= 10 * zero) return Fit::too_narrow;
    }
    return Fit::ok;
  };

  // |dν/dμ| is of order m[u]/a[u] ≤ 1/λ_{N,1}; start inside that cone.
  if (lab.spectra.neumann.size() > 0) d = std::min(d, eps * lab.spectra.neumann.values(0));
  auto inside = [&](const Vec& nu) {
    Index c = 0;
    for (Index j = 0; j < nu.size(); ++j)
      if (std::abs(nu(j)) < eps / 2) ++c;
    return c;
  };
  // Accept δ when both probes and their halved counterparts are cleanly
  // separated and agree on how many branches sit near zero.
  Vec below, above;
  bool admissible = false;
  for (int halvings = 0; halvings < 40 && !admissible; ++halvings) {
    below = probe(lambda - d / 2);
    above = probe(lambda + d / 2);
    const Fit fb = fit(below), fa = fit(above);
    if (fb == Fit::too_narrow || fa == Fit::too_narrow) break;
    if (fb == Fit::ok && fa == Fit::ok) {
      const Vec below2 = probe(lambda - d / 4), above2 = probe(lambda + d / 4);
      if (fit(below2) == Fit::ok && fit(above2) == Fit::ok && inside(below2) == inside(below) &&
          inside(above2) == inside(above))
        admissible = true;
    }
    if (!admissible) d /= 2;
  }
  if (!admissible) {
    r.status = CheckStatus::skipped;
    r.reason = "no admissible delta (eigenvalues too clustered)";
    return r;
  }

  const Count cb = tally(below), c0 = tally(nu0), ca = tally(above);
  const Index nN = m.n_neumann(), nD = m.n_dirichlet();
  const long long expected = 2 * (nN + nD) + nN + nD + m.common;
  const long long observed = cb.neg + cb.pos + cb.zero + c0.neg + c0.pos + c0.zero + ca.neg + ca.pos + ca.zero;
  r.lhs = observed;
  r.rhs = expected;
  const bool pattern = cb.neg == nD && cb.pos == nN && cb.zero == 0 && c0.zero == nN + nD + m.common &&
                       c0.neg == 0 && c0.pos == 0 && ca.neg == nN && ca.pos == nD && ca.zero == 0;
  r.status = pattern ? CheckStatus::pass : CheckStatus::fail;
  if (!pattern) r.reason = "branch sign pattern differs";
  std::ostringstream diag;
  diag << "eps=" << fmt(eps) << " delta=" << fmt(d) << " below(-,+)=(" << cb.neg << "," << cb.pos << ")"
       << " zeros=" << c0.zero << " above(-,+)=(" << ca.neg << "," << ca.pos << ")"
       << " expected n_N=" << nN << " n_D=" << nD << " n_ND=" << m.common;
  note_frame(diag, at);
  r.diagnostics = diag.str();
  return r;
}

CheckResult check_interval(const Lab& lab, double a, double b) {
  if (!(a < b)) throw Error(ErrorKind::invalid_argument, "interval needs a < b");
  for (double x : {a, b})
    if (is_eigenvalue(lab, x))
      throw Error(ErrorKind::invalid_argument,
                  "interval endpoint " + fmt(x) + " is an eigenvalue; try " + fmt(nudge_off_spectrum(lab, x)));
  Index n_count = 0, d_count = 0;
  for (double mu : distinct_eigenvalues(lab)) {
    if (mu <= a || mu >= b) continue;
    const Multiplicities m = mults(lab, mu);
    n_count += m.n_neumann();
    d_count += m.n_dirichlet();
  }
  const Signature sa = signature_at(lab, a), sb = signature_at(lab, b);
  CheckResult r = identity("interval", a, sb.sig.inertia.n_minus, sa.sig.inertia.n_minus + n_count - d_count);
  r.lambda.reset();
  r.interval = std::make_pair(a, b);
  std::ostringstream diag;
  diag << "dimG-(a)=" << sa.sig.inertia.n_minus << " dimG-(b)=" << sb.sig.inertia.n_minus << " #N=" << n_count
       << " #D=" << d_count;
  note_frame(diag, sa);
  note_frame(diag, sb);
  r.diagnostics = diag.str();
  return r;
}

CheckResult check_filonov(const Lab& lab, double lambda, Index n_samples, std::uint64_t seed) {
  if (!(lambda > 0)) throw Error(ErrorKind::invalid_argument, "filonov check needs lambda > 0");
  if (!lab.spectra.neumann.has_vectors() || !lab.spectra.dirichlet.has_vectors())
    throw Error(ErrorKind::invalid_argument, "filonov check needs eigenvectors");
  CheckResult r;
  r.name = "filonov";
  r.lambda = lambda;
  const Index n = lab.form.size();
  const double t = cw(lab, lambda);

  std::vector<Vec> cols;
  const auto& dir = lab.spectra.dirichlet;
  for (Index j = 0; j < dir.size(); ++j)
    if (dir.values(j) <= lambda + t) cols.push_back(dir.vectors.col(j));
  const auto nb = eigenspace_basis(lab.spectra.neumann, Problem::neumann, lambda).basis;
  for (Index j = 0; j < nb.cols(); ++j) cols.push_back(nb.col(j));
  const auto frame = glambda_frame(lab.form, lab.split, lambda, lab.tol);
  const auto pe = pencil_eigen(frame, true);
  for (Index j = 0; j < pe.nu.size(); ++j)
    if (pe.nu(j) <= lab.tol.pencil_zero) cols.push_back(pe.vectors.col(j));
  if (cols.empty()) {
    r.status = CheckStatus::skipped;
    r.reason = "empty span";
    return r;
  }
  Mat span(n, static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) span.col(static_cast<Index>(j)) = cols[j] / cols[j].norm();
  Eigen::ColPivHouseholderQR<Mat> qr(span);
  qr.setThreshold(1e-10);
  const Index rank = qr.rank();
  const Mat q = qr.householderQ() * Mat::Identity(n, rank);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  double worst = -std::numeric_limits<double>::infinity();
  for (Index s = 0; s < n_samples; ++s) {
    Vec xi(rank);
    for (Index j = 0; j < rank; ++j) xi(j) = normal(rng);
    const Vec u = q * xi;
    const double excess = u.dot(lab.form.K * u) - lambda * u.dot(lab.form.M * u);
    worst = std::max(worst, excess / (lab.k_norm * u.squaredNorm()));
  }
  r.residual = worst;
  r.tolerance = lab.tol.inequality;
  const Index n_bound = count_below_spec(lab.spectra.neumann.values, lambda, t) +
                        count_in_window(lab.spectra.neumann.values, lambda, t);
  r.lhs = rank;
  r.rhs = n_bound;
  r.status = CheckStatus::pass;
  if (worst > lab.tol.inequality) fail(r, "quadratic form exceeds lambda times the norm");
  if (rank > n_bound) fail(r, "span dimension exceeds the Neumann count up to lambda");
  std::ostringstream diag;
  diag << "span_dim=" << rank << " neumann_up_to_lambda=" << n_bound << " samples=" << n_samples;
  r.diagnostics = diag.str();
  return r;
}

CheckResult check_resolvent(const Lab& lab, double lambda) {
  const auto rd = resolvent_difference<double>(lab.form, lab.split, lambda, lab.tol);
  const CountResult nn = count_below<double>(lab.form, lab.split, Problem::neumann, lambda, lab.tol);
  const CountResult nd = count_below<double>(lab.form, lab.split, Problem::dirichlet, lambda, lab.tol);
  CheckResult r = identity("resolvent", lambda, rd.inertia.n_minus, nn.count - nd.count);
  std::ostringstream diag;
  diag << "n-(R')=" << rd.inertia.n_minus << " n+(R')=" << rd.inertia.n_plus << " rank=" << rd.rank
       << " N_N=" << nn.count << " N_D=" << nd.count;
  if (rd.rank > lab.split.n_boundary()) fail(r, "rank of the resolvent difference exceeds |boundary|");
  r.diagnostics = diag.str();
  return r;
}

CheckResult check_resolvent_jump(const Lab& lab, double lambda0, double delta) {
  const Multiplicities m = mults(lab, lambda0);
  double gap = std::numeric_limits<double>::infinity();
  for (double mu : distinct_eigenvalues(lab))
    if (std::abs(mu - lambda0) > cw(lab, lambda0)) gap = std::min(gap, std::abs(mu - lambda0));
  if (!std::isfinite(gap)) gap = std::max(1.0, std::abs(lambda0));
  const double d = delta > 0 ? std::min(delta, gap / 2) : gap / 2;
  const auto lo = resolvent_difference<double>(lab.form, lab.split, lambda0 - d, lab.tol);
  const auto hi = resolvent_difference<double>(lab.form, lab.split, lambda0 + d, lab.tol);
  CheckResult r = identity("resolvent_jump", lambda0, hi.inertia.n_minus - lo.inertia.n_minus,
                           m.n_neumann() - m.n_dirichlet());
  std::ostringstream diag;
  diag << "delta=" << fmt(d) << " n-(R')[below]=" << lo.inertia.n_minus << " n-(R')[above]=" << hi.inertia.n_minus
       << " n_N=" << m.n_neumann() << " n_D=" << m.n_dirichlet();
  r.diagnostics = diag.str();
  return r;
}

PayneReport check_payne_chain(const Lab& lab, Index k_max, bool assert_payne) {
  PayneReport out;
  CheckResult& r = out.result;
  r.name = "payne_chain";
  const Vec& dv = lab.spectra.dirichlet.values;
  const Vec& nv = lab.spectra.neumann.values;
  const bool full = lab.spectra.neumann.has_vectors() && lab.spectra.dirichlet.has_vectors();
  const Index k_top = std::min<Index>(k_max, dv.size());
  auto neumann_at = [&](Index j) -> std::optional<double> {
    if (j < 1 || j > nv.size()) return std::nullopt;
    return nv(j - 1);
  };

  long long asserted = 0, held = 0;
  std::ostringstream diag;
  double cached_lambda = std::numeric_limits<double>::quiet_NaN();
  Index cached_p = 0, cached_q = 0;
  bool cached_witness = false;
  for (Index k = 1; k <= k_top; ++k) {
    PayneRecord rec;
    rec.k = k;
    rec.lambda_d = dv(k - 1);
    const double t = cw(lab, rec.lambda_d);
    rec.k0 = count_below_spec(dv, rec.lambda_d, t) + 1;
    if (!(std::abs(rec.lambda_d - cached_lambda) <= t)) {
      cached_lambda = rec.lambda_d;
      if (full) {
        const Multiplicities m = mults(lab, rec.lambda_d);
        const Signature s = signature_at(lab, rec.lambda_d);
        cached_p = s.sig.inertia.n_minus;
        cached_q = m.n_dirichlet();
        const auto pe = pencil_eigen(s.frame, true);
        cached_witness = false;
        for (Index j = 0; j < pe.nu.size(); ++j) {
          if (pe.nu(j) > lab.tol.pencil_zero) continue;
          const Vec u = pe.vectors.col(j);
          if (u(lab.split.boundary).norm() > 1e-8 * u.norm()) cached_witness = true;
        }
      } else {
        cached_q = count_in_window(dv, rec.lambda_d, t);
        cached_p = count_below_spec(nv, rec.lambda_d, t) - (rec.k0 - 1) - cached_q;
        cached_witness = false;
      }
    }
    rec.p = cached_p;
    rec.q = cached_q;
    rec.witness = cached_witness;
    rec.lambda_n_next = neumann_at(k + 1);
    if (rec.lambda_n_next) rec.payne_margin = rec.lambda_d - *rec.lambda_n_next;
    if (auto v = neumann_at(rec.k0 + rec.q + rec.p - 1)) rec.margin_strict = rec.lambda_d - *v;
    if (auto v = neumann_at(k + rec.p)) rec.margin_weak = rec.lambda_d - *v;

    if (full) {
      if (rec.margin_strict) {
        ++asserted;
        if (*rec.margin_strict > t) ++held;
        else diag << " strict-chain fails at k=" << k << ";";
      }
      if (rec.margin_weak) {
        ++asserted;
        if (*rec.margin_weak >= -t) ++held;
        else diag << " weak-chain fails at k=" << k << ";";
      }
    }
    if (assert_payne && rec.payne_margin) {
      ++asserted;
      if (*rec.payne_margin > t) ++held;
      else diag << " payne fails at k=" << k << ";";
    }
    out.records.push_back(rec);
  }
  if (k_top < k_max) diag << " spectrum ends at k=" << k_top << ";";
  if (!full) diag << " chains from spectral counts, reported only;";
  r.lhs = held;
  r.rhs = asserted;
  if (out.records.empty() || asserted == 0) {
    r.status = out.records.empty() ? CheckStatus::skipped : CheckStatus::pass;
    if (out.records.empty()) r.reason = "no Dirichlet eigenvalues";
  } else {
    r.status = held == asserted ? CheckStatus::pass : CheckStatus::fail;
    if (held != asserted) r.reason = "index chain violated";
  }
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& rec : out.records)
    if (rec.payne_margin) worst = std::min(worst, *rec.payne_margin);
  if (std::isfinite(worst)) diag << " min_payne_margin=" << fmt(worst);
  r.diagnostics = diag.str();
  return out;
}

Vector<double> projected(const Lab& lab, const Vector<double>& v, double lambda, Problem problem) {
  const auto& K = lab.form.K;
  const auto& M = lab.form.M;
  const auto& I = lab.split.interior;
  const Vec tv = K * v - lambda * (M * v);
  if (problem == Problem::dirichlet) {
    Vec w = v;
    w(I) -= solve_shifted(lab, Problem::dirichlet, lambda, Mat(tv(I)));
    return w;
  }
  Vec rhs = -lambda * (M * v);
  rhs(I) = tv(I);
  return v - solve_shifted(lab, Problem::neumann, lambda, Mat(rhs)).col(0);
}

double monotone_closed_form(const Lab& lab, const Vector<double>& v, double lambda, Problem problem) {
  const auto& K = lab.form.K;
  const auto& M = lab.form.M;
  const auto& I = lab.split.interior;
  const Vec w = projected(lab, v, 0.0, problem);
  const Vec mw = M * w;
  const double base = w.dot(K * w);
  if (problem == Problem::neumann) {
    const Mat t = K - lambda * M;
    return base + lambda * w.dot(mw) + lambda * lambda * mw.dot(t.fullPivLu().solve(mw));
  }
  const Mat t = K(I, I) - lambda * M(I, I);
  const Vec mwi = mw(I);
  return base - lambda * w.dot(mw) - lambda * lambda * mwi.dot(t.fullPivLu().solve(mwi));
}

CheckResult check_monotone(const Lab& lab, const Vector<double>& v, std::span<const double> grid, Problem problem) {
  if (grid.size() < 2) throw Error(ErrorKind::invalid_argument, "monotone check needs at least two grid points");
  if (!std::is_sorted(grid.begin(), grid.end()))
    throw Error(ErrorKind::invalid_argument, "monotone grid must be ascending");
  const double lo = grid.front(), hi = grid.back();
  const Vec& values =
      problem == Problem::neumann ? lab.spectra.neumann.values : lab.spectra.dirichlet.values;
  for (Index j = 0; j < values.size(); ++j)
    if (values(j) >= lo - cw(lab, lo) && values(j) <= hi + cw(lab, hi))
      throw Error(ErrorKind::invalid_argument, "monotone grid touches the eigenvalue " + fmt(values(j)));

  CheckResult r;
  r.name = problem == Problem::neumann ? "monotone_neumann" : "monotone_dirichlet";
  r.interval = std::make_pair(lo, hi);
  const auto& K = lab.form.K;
  const auto& M = lab.form.M;
  std::vector<double> f(grid.size());
  double membership = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Vec w = projected(lab, v, grid[i], problem);
    const Vec tw = K * w - grid[i] * (M * w);
    f[i] = w.dot(tw);
    const double scale = lab.k_norm * std::max({w.norm(), v.norm(), std::numeric_limits<double>::min()});
    membership = std::max(membership, tw(lab.split.interior).norm() / scale);
  }
  // Rounding noise of a vanishing f is measured against a[v].
  double scale = lab.k_norm * v.squaredNorm();
  for (double x : f) scale = std::max(scale, std::abs(x));
  if (scale == 0) scale = 1;
  const double sign = problem == Problem::neumann ? 1.0 : -1.0;
  double violation = 0;
  long long strict_steps = 0;
  for (std::size_t i = 0; i + 1 < f.size(); ++i) {
    const double step = sign * (f[i + 1] - f[i]);
    violation = std::max(violation, -step);
    if (step > 0) ++strict_steps;
  }
  r.residual = violation / scale;
  r.tolerance = lab.tol.monotone;

  const double vnorm = v.norm();
  bool outside = false;
  if (vnorm > 0) {
    if (problem == Problem::neumann)
      outside = Vec(K * v)(lab.split.boundary).norm() > 1e-12 * lab.k_norm * vnorm;
    else
      outside = v(lab.split.boundary).norm() > 1e-12 * vnorm;
  }
  r.status = CheckStatus::pass;
  if (*r.residual > lab.tol.monotone) fail(r, "monotonicity violated");
  if (outside) {
    r.lhs = strict_steps;
    r.rhs = static_cast<long long>(f.size() - 1);
    if (strict_steps != *r.rhs) fail(r, "not strictly monotone outside the operator domain");
  }
  if (membership > lab.tol.projection) fail(r, "projected vector leaves G_lambda");
  std::ostringstream diag;
  diag << "points=" << grid.size() << " scale=" << fmt(scale) << " strict=" << (outside ? "required" : "not required")
       << " f_first=" << fmt(f.front()) << " f_last=" << fmt(f.back()) << " membership=" << membership;
  r.diagnostics = diag.str();
  return r;
}

CheckResult check_projection_identities(const Lab& lab, Index n_random, std::uint64_t seed) {
  const auto& K = lab.form.K;
  const auto& M = lab.form.M;
  const auto& I = lab.split.interior;
  const Index n = lab.form.size();
  CheckResult r;
  r.name = "projection_identities";

  Eigen::LLT<Mat> kii(K(I, I));
  Mat pi0 = Mat::Zero(n, n);
  pi0(I, Eigen::all) = Mat(kii.solve(Mat(K(I, Eigen::all))));
  const Mat id = Mat::Identity(n, n);
  const double pnorm = std::max(1.0, pi0.norm());
  const double idem = (pi0 * pi0 - pi0).norm() / pnorm;
  const Mat kp = K * pi0;
  const double selfadj = (kp - kp.transpose()).norm() / (lab.k_norm * pnorm);
  const Mat comp = id - pi0;
  const double onto = Mat((K * comp)(I, Eigen::all)).norm() / (lab.k_norm * pnorm);

  Eigen::ColPivHouseholderQR<Mat> qr(comp);
  qr.setThreshold(1e-10);
  r.lhs = qr.rank();
  r.rhs = lab.split.n_boundary();

  Eigen::LDLT<Mat> kfull(K);
  Eigen::LDLT<Mat> kdir(K(I, I));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  double inverse = 0;
  for (Index s = 0; s < n_random; ++s) {
    Vec fvec(n);
    for (Index j = 0; j < n; ++j) fvec(j) = normal(rng);
    const Vec mf = M * fvec;
    const Vec an = kfull.solve(mf);
    Vec ad = Vec::Zero(n);
    ad(I) = Vec(kdir.solve(Vec(mf(I))));
    inverse = std::max(inverse, (ad - pi0 * an).norm() / std::max(ad.norm(), std::numeric_limits<double>::min()));
  }
  r.residual = std::max({idem, selfadj, onto, inverse});
  r.tolerance = lab.tol.projection;
  r.status = CheckStatus::pass;
  if (*r.residual > lab.tol.projection) fail(r, "projection identity residual too large");
  if (*r.lhs != *r.rhs) fail(r, "rank of I - Pi0 differs from |boundary|");
  std::ostringstream diag;
  diag << "idempotent=" << idem << " self_adjoint=" << selfadj << " onto_G0=" << onto << " inverse=" << inverse;
  r.diagnostics = diag.str();
  return r;
}

std::vector<CheckResult> run_suite(const Lab& lab, const SuiteOptions& opt) {
  std::vector<std::function<CheckResult()>> tasks;
  auto guarded = [](std::string name, std::optional<double> lambda, std::function<CheckResult()> fn) {
    return [name = std::move(name), lambda, fn = std::move(fn)]() {
      try {
        return fn();
      } catch (const Error& e) {
        CheckResult r;
        r.name = name;
        r.lambda = lambda;
        r.status = CheckStatus::fail;
        r.reason = std::string(to_string(e.kind())) + ": " + e.what();
        return r;
      }
    };
  };

  std::vector<double> probes = opt.lambdas;
  for (double x : random_probes(lab, opt.n_random, opt.seed)) probes.push_back(x);
  for (double x : probes) {
    tasks.push_back(guarded("haynsworth", x, [&lab, x] { return check_haynsworth(lab, x); }));
    tasks.push_back(guarded("kernel_dim", x, [&lab, x] { return check_kernel_dim(lab, x); }));
    if (!is_eigenvalue(lab, x))
      tasks.push_back(guarded("resolvent", x, [&lab, x] { return check_resolvent(lab, x); }));
  }

  double limit = std::numeric_limits<double>::infinity();
  for (const Vec* vals : {&lab.spectra.neumann.values, &lab.spectra.dirichlet.values})
    if (vals->size() > 0) limit = std::min(limit, (*vals)(std::min<Index>(opt.eigen_limit, vals->size()) - 1));
  for (double mu : distinct_eigenvalues(lab)) {
    if (mu > limit + cw(lab, limit)) break;
    tasks.push_back(guarded("haynsworth", mu, [&lab, mu] { return check_haynsworth(lab, mu); }));
    tasks.push_back(guarded("kernel_dim", mu, [&lab, mu] { return check_kernel_dim(lab, mu); }));
    tasks.push_back(guarded("crossing", mu, [&lab, mu] { return check_crossing(lab, mu); }));
    tasks.push_back(guarded("resolvent_jump", mu, [&lab, mu] { return check_resolvent_jump(lab, mu); }));
  }

  const std::vector<double> ends = random_probes(lab, 2 * opt.n_intervals, opt.seed + 1);
  for (std::size_t i = 0; i < opt.n_intervals; ++i) {
    double a = ends[2 * i], b = ends[2 * i + 1];
    if (a > b) std::swap(a, b);
    if (a == b) continue;
    tasks.push_back(guarded("interval", std::nullopt, [&lab, a, b] { return check_interval(lab, a, b); }));
  }

  for (std::size_t i = 0; i < probes.size() && i < 3; ++i) {
    const double x = probes[i];
    if (x <= 0) continue;
    const std::uint64_t seed = opt.seed + 100 + i;
    const Index samples = opt.filonov_samples;
    tasks.push_back(guarded("filonov", x, [&lab, x, samples, seed] { return check_filonov(lab, x, samples, seed); }));
  }

  for (Problem problem : {Problem::neumann, Problem::dirichlet}) {
    const Vec& vals = problem == Problem::neumann ? lab.spectra.neumann.values : lab.spectra.dirichlet.values;
    double lo = 0, hi = 0;
    bool found = false;
    for (Index j = 0; j + 1 < vals.size() && !found; ++j) {
      if (vals(j + 1) - vals(j) > 100 * cw(lab, vals(j + 1))) {
        lo = vals(j);
        hi = vals(j + 1);
        found = true;
      }
    }
    if (!found) continue;
    const double inset = 0.05 * (hi - lo);
    std::vector<double> grid(static_cast<std::size_t>(opt.monotone_points));
    for (Index i = 0; i < opt.monotone_points; ++i)
      grid[i] = lo + inset + (hi - lo - 2 * inset) * double(i) / double(opt.monotone_points - 1);
    std::mt19937_64 rng(opt.seed + 7 + static_cast<std::uint64_t>(problem));
    std::normal_distribution<double> normal;
    for (std::size_t k = 0; k < opt.monotone_vectors; ++k) {
      Vec v(lab.form.size());
      for (Index j = 0; j < v.size(); ++j) v(j) = normal(rng);
      tasks.push_back(guarded(problem == Problem::neumann ? "monotone_neumann" : "monotone_dirichlet", std::nullopt,
                              [&lab, v, grid, problem] { return check_monotone(lab, v, grid, problem); }));
    }
  }

  const Index k_max = opt.payne_k_max;
  const bool assert_payne = opt.assert_payne;
  tasks.push_back(guarded("payne_chain", std::nullopt,
                          [&lab, k_max, assert_payne] { return check_payne_chain(lab, k_max, assert_payne).result; }));
  tasks.push_back(guarded("projection_identities", std::nullopt, [&lab] { return check_projection_identities(lab); }));

  std::vector<CheckResult> results(tasks.size());
  parallel_for(tasks.size(), opt.jobs, [&](std::size_t i) { results[i] = tasks[i](); });
  return results;
}

}  // namespace dtnlab
