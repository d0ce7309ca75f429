#include "dtnlab/cli.hpp"

#include "dtnlab/inertia.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <iostream>
#include <numbers>

namespace dtnlab::cli {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

FixtureSummary summarize(const Fixture& f) {
  return {f.name, f.form.size(), f.split.n_interior(), f.split.n_boundary()};
}

std::vector<double> head(const Vector<double>& v, Index count) {
  std::vector<double> out;
  for (Index j = 0; j < std::min(count, v.size()); ++j) out.push_back(v(j));
  return out;
}

Index strictly_below(const Vector<double>& v, double lambda, double t) {
  Index c = 0;
  for (Index j = 0; j < v.size(); ++j)
    if (v(j) < lambda - t) ++c;
  return c;
}

// Counting-function steps at each distinct eigenvalue up to `limit`.
std::vector<CountRow> counting_steps(const Lab& lab, double limit) {
  std::vector<CountRow> rows;
  for (double mu : distinct_eigenvalues(lab)) {
    if (mu > limit) break;
    const double t = cluster_width(mu, lab.tol);
    rows.push_back({mu, strictly_below(lab.spectra.neumann.values, mu, t) + multiplicity(lab.spectra.neumann, mu),
                    strictly_below(lab.spectra.dirichlet.values, mu, t) + multiplicity(lab.spectra.dirichlet, mu)});
  }
  return rows;
}

CheckResult integer_check(std::string name, double lambda, long long lhs, long long rhs, std::string diag) {
  CheckResult r;
  r.name = std::move(name);
  r.lambda = lambda;
  r.lhs = lhs;
  r.rhs = rhs;
  r.status = lhs == rhs ? CheckStatus::pass : CheckStatus::fail;
  if (lhs != rhs) r.reason = "integer sides differ";
  r.diagnostics = std::move(diag);
  return r;
}

CheckResult bound_check(std::string name, double residual, double tolerance, std::string diag) {
  CheckResult r;
  r.name = std::move(name);
  r.residual = residual;
  r.tolerance = tolerance;
  r.status = residual <= tolerance ? CheckStatus::pass : CheckStatus::fail;
  if (!(residual <= tolerance)) r.reason = "residual above tolerance";
  r.diagnostics = std::move(diag);
  return r;
}

void run_spectrum(const ScenarioConfig& cfg, Report& rep) {
  auto t0 = Clock::now();
  const Fixture fx = build_fixture(cfg);
  rep.fixture = summarize(fx);
  rep.timing["fixture"] = seconds_since(t0);
  t0 = Clock::now();
  const Lab lab = make_lab(fx.form, fx.split, cfg.tol, false);
  rep.timing["spectra"] = seconds_since(t0);
  rep.neumann_excerpt = head(lab.spectra.neumann.values, cfg.run.count);
  rep.dirichlet_excerpt = head(lab.spectra.dirichlet.values, cfg.run.count);

  t0 = Clock::now();
  double limit = 0;
  for (const auto* v : {&rep.neumann_excerpt, &rep.dirichlet_excerpt})
    if (!v->empty()) limit = std::max(limit, v->back());
  rep.counting = counting_steps(lab, limit);
  // Sylvester counts against eigensolver counts at each step and midway between steps.
  std::vector<double> probes;
  for (std::size_t i = 0; i < rep.counting.size(); ++i) {
    probes.push_back(rep.counting[i].lambda);
    if (i + 1 < rep.counting.size()) probes.push_back((rep.counting[i].lambda + rep.counting[i + 1].lambda) / 2);
  }
  for (double x : probes) {
    for (Problem p : {Problem::neumann, Problem::dirichlet}) {
      const auto& spec = p == Problem::neumann ? lab.spectra.neumann : lab.spectra.dirichlet;
      const CountResult c = count_below<double>(fx.form, fx.split, p, x, cfg.tol);
      const Index eig = counting(spec, x);
      rep.checks.push_back(integer_check(std::string("count_") + to_string(p), x, c.count, eig,
                                         "inertia n_at=" + std::to_string(c.n_at) +
                                             " eigensolve multiplicity=" + std::to_string(multiplicity(spec, x))));
    }
  }
  rep.timing["checks"] = seconds_since(t0);
}

void run_sweep(const ScenarioConfig& cfg, Report& rep) {
  auto t0 = Clock::now();
  const Fixture fx = build_fixture(cfg);
  rep.fixture = summarize(fx);
  rep.timing["fixture"] = seconds_since(t0);
  t0 = Clock::now();
  const Lab lab = make_lab(fx.form, fx.split, cfg.tol);
  rep.timing["spectra"] = seconds_since(t0);
  const double from = cfg.run.mu_from, to = cfg.run.mu_to;
  for (const auto& [spec, out] : {std::pair{&lab.spectra.neumann, &rep.neumann_excerpt},
                                  std::pair{&lab.spectra.dirichlet, &rep.dirichlet_excerpt}})
    for (Index j = 0; j < spec->size(); ++j)
      if (spec->values(j) >= from && spec->values(j) <= to) out->push_back(spec->values(j));

  t0 = Clock::now();
  BranchOptions bo;
  bo.jobs = cfg.jobs;
  const auto trace = blambda_branches<double>(fx.form, fx.split, from, to, cfg.run.steps, cfg.tol, bo);
  rep.timing["trace"] = seconds_since(t0);
  for (std::size_t k = 0; k < trace.mu.size(); ++k)
    for (Index j = 0; j < trace.nu[k].size(); ++j)
      rep.trace.push_back({trace.mu[k], j, trace.nu[k](j), to_string(trace.flags[k])});
  rep.crossings = crossing_events(trace, cfg.tol);

  t0 = Clock::now();
  std::vector<double> grid(static_cast<std::size_t>(cfg.run.steps + 1));
  for (std::size_t k = 0; k < grid.size(); ++k)
    grid[k] = k + 1 == grid.size() ? to : from + (to - from) * double(k) / double(cfg.run.steps);
  const auto nn = inertia_sweep<double>(fx.form, fx.split, Problem::neumann, grid, cfg.tol, cfg.jobs);
  const auto nd = inertia_sweep<double>(fx.form, fx.split, Problem::dirichlet, grid, cfg.tol, cfg.jobs);
  for (std::size_t k = 0; k < grid.size(); ++k) rep.counting.push_back({grid[k], nn[k].count, nd[k].count});
  rep.timing["counting"] = seconds_since(t0);

  // Inventory: every eigenvalue inside the window contributes n_N downward
  // and n_D upward sign changes.
  Index expect_down = 0, expect_up = 0;
  for (double mu : distinct_eigenvalues(lab)) {
    if (mu <= from || mu >= to) continue;
    const Multiplicities m = multiplicities(fx.form, lab.spectra, mu, cfg.tol);
    expect_down += m.n_neumann();
    expect_up += m.n_dirichlet();
  }
  Index down = 0, up = 0;
  for (const auto& e : rep.crossings) (e.from_sign > 0 ? down : up) += 1;
  std::size_t unresolved = 0;
  for (auto f : trace.flags)
    if (f == TraceFlag::unresolved) ++unresolved;
  CheckResult c = integer_check("sweep_crossings", (from + to) / 2, down + up, expect_down + expect_up,
                                "down=" + std::to_string(down) + "/" + std::to_string(expect_down) +
                                    " up=" + std::to_string(up) + "/" + std::to_string(expect_up) +
                                    " unresolved=" + std::to_string(unresolved));
  c.lambda.reset();
  c.interval = std::make_pair(from, to);
  if (c.passed() && (down != expect_down || up != expect_up)) {
    c.status = CheckStatus::fail;
    c.reason = "crossing directions differ";
  }
  rep.checks.push_back(c);
}

void run_verify(const ScenarioConfig& cfg, Report& rep) {
  auto t0 = Clock::now();
  const Fixture fx = build_fixture(cfg);
  rep.fixture = summarize(fx);
  rep.timing["fixture"] = seconds_since(t0);
  t0 = Clock::now();
  const Lab lab = make_lab(fx.form, fx.split, cfg.tol);
  rep.timing["spectra"] = seconds_since(t0);
  rep.neumann_excerpt = head(lab.spectra.neumann.values, cfg.run.count);
  rep.dirichlet_excerpt = head(lab.spectra.dirichlet.values, cfg.run.count);
  double limit = 0;
  for (const auto* v : {&rep.neumann_excerpt, &rep.dirichlet_excerpt})
    if (!v->empty()) limit = std::max(limit, v->back());
  rep.counting = counting_steps(lab, limit);

  t0 = Clock::now();
  SuiteOptions opt;
  opt.lambdas = cfg.run.lambdas;
  opt.n_random = cfg.run.n_random;
  opt.eigen_limit = cfg.run.eigen_limit;
  opt.n_intervals = cfg.run.intervals;
  opt.filonov_samples = cfg.run.n_samples;
  opt.monotone_vectors = cfg.run.monotone_vectors;
  opt.monotone_points = cfg.run.monotone_points;
  opt.payne_k_max = cfg.run.k_max;
  opt.assert_payne = cfg.run.assert_payne;
  opt.seed = cfg.run.seed;
  opt.jobs = cfg.jobs;
  rep.checks = run_suite(lab, opt);
  rep.payne = check_payne_chain(lab, cfg.run.k_max, cfg.run.assert_payne).records;
  rep.timing["checks"] = seconds_since(t0);
}

void run_converge(const ScenarioConfig& cfg, Report& rep) {
  constexpr double pi2 = std::numbers::pi * std::numbers::pi;
  const double c = cfg.form.shift;
  const std::vector<double> d_factor{2, 5, 5, 8, 10}, n_factor{0, 1, 1, 2, 4};
  const auto modes = static_cast<std::size_t>(cfg.run.modes);
  ConvergenceSummary s;
  for (std::size_t i = 0; i < modes; ++i) {
    s.dirichlet_target.push_back(pi2 * d_factor[i] + c);
    s.neumann_target.push_back(pi2 * n_factor[i] + c);
  }

  std::vector<Index> ladder = cfg.run.ladder;
  std::sort(ladder.begin(), ladder.end());
  std::optional<Fixture> finest;
  std::optional<SpectralPair<double>> finest_spectra;
  for (Index inv : ladder) {
    auto t0 = Clock::now();
    Fixture fx = unit_square_fixture(1.0 / static_cast<double>(inv), c, cfg.mass_mode());
    const Lab lab = make_lab(fx.form, fx.split, cfg.tol, false);
    ConvergenceLevel level;
    level.inverse_h = inv;
    level.dirichlet = head(lab.spectra.dirichlet.values, static_cast<Index>(modes));
    level.neumann = head(lab.spectra.neumann.values, static_cast<Index>(modes));
    for (std::size_t i = 0; i < modes && i < level.dirichlet.size(); ++i)
      level.dirichlet_error.push_back(std::abs(level.dirichlet[i] - s.dirichlet_target[i]) / s.dirichlet_target[i]);
    for (std::size_t i = 0; i < modes && i < level.neumann.size(); ++i)
      level.neumann_error.push_back(std::abs(level.neumann[i] - s.neumann_target[i]) / s.neumann_target[i]);
    s.levels.push_back(std::move(level));
    rep.timing["level_" + std::to_string(inv)] = seconds_since(t0);
    if (inv == ladder.back()) {
      finest_spectra = lab.spectra;
      finest = std::move(fx);
    }
  }

  std::vector<double> hs;
  std::vector<std::vector<double>> de(modes), ne(modes);
  for (const auto& l : s.levels) {
    hs.push_back(1.0 / static_cast<double>(l.inverse_h));
    for (std::size_t i = 0; i < modes; ++i) {
      de[i].push_back(i < l.dirichlet_error.size() ? l.dirichlet_error[i] : 0.0);
      ne[i].push_back(i < l.neumann_error.size() ? l.neumann_error[i] : 0.0);
    }
  }
  s.order_dirichlet = fit_order(hs, de);
  s.order_neumann = fit_order(hs, ne);

  const auto& top = s.levels.back();
  const double d_err = top.dirichlet_error.empty() ? INFINITY : *std::max_element(top.dirichlet_error.begin(), top.dirichlet_error.end());
  const double n_err = top.neumann_error.empty() ? INFINITY : *std::max_element(top.neumann_error.begin(), top.neumann_error.end());
  rep.checks.push_back(bound_check("converge_dirichlet", d_err, 0.01, "finest 1/h=" + std::to_string(top.inverse_h)));
  rep.checks.push_back(bound_check("converge_neumann", n_err, 0.03, "finest 1/h=" + std::to_string(top.inverse_h)));
  for (const auto& [name, order] : {std::pair{"converge_order_dirichlet", s.order_dirichlet},
                                    std::pair{"converge_order_neumann", s.order_neumann}}) {
    if (order) {
      rep.checks.push_back(bound_check(name, std::abs(*order - 2.0), 0.3, "order=" + std::to_string(*order)));
    } else {
      CheckResult r;
      r.name = name;
      r.status = CheckStatus::skipped;
      r.reason = "fewer than two usable levels";
      rep.checks.push_back(r);
    }
  }

  auto t0 = Clock::now();
  rep.fixture = summarize(*finest);
  const Lab lab{finest->form, finest->split, std::move(*finest_spectra), cfg.tol, finest->form.K.norm()};
  auto payne = check_payne_chain(lab, cfg.run.k_max, true);
  rep.checks.push_back(payne.result);
  rep.payne = std::move(payne.records);
  rep.neumann_excerpt = head(lab.spectra.neumann.values, cfg.run.count);
  rep.dirichlet_excerpt = head(lab.spectra.dirichlet.values, cfg.run.count);
  rep.timing["payne"] = seconds_since(t0);
  rep.convergence = std::move(s);
}

}  // namespace

std::optional<double> fit_order(const std::vector<double>& h, const std::vector<std::vector<double>>& errors) {
  double sxy = 0, sxx = 0;
  for (const auto& e : errors) {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t l = 0; l < h.size() && l < e.size(); ++l)
      if (e[l] > 1e-9) pts.emplace_back(std::log(h[l]), std::log(e[l]));
    if (pts.size() < 2) continue;
    double mx = 0, my = 0;
    for (auto [x, y] : pts) {
      mx += x;
      my += y;
    }
    mx /= double(pts.size());
    my /= double(pts.size());
    for (auto [x, y] : pts) {
      sxy += (x - mx) * (y - my);
      sxx += (x - mx) * (x - mx);
    }
  }
  if (sxx == 0) return std::nullopt;
  return sxy / sxx;
}

Report run_scenario(const ScenarioConfig& cfg) {
  Report rep;
  rep.tool_version = DTNLAB_VERSION;
  rep.command = cfg.command;
  rep.config = cfg.echo();
  const auto t0 = Clock::now();
  if (cfg.command == "spectrum") run_spectrum(cfg, rep);
  else if (cfg.command == "sweep") run_sweep(cfg, rep);
  else if (cfg.command == "verify") run_verify(cfg, rep);
  else if (cfg.command == "converge") run_converge(cfg, rep);
  else throw ConfigError("unknown command '" + cfg.command + "'");
  rep.timing["total"] = seconds_since(t0);
  return rep;
}

int run_main(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spectral comparison of Neumann and Dirichlet problems on graphs and grids"};
  app.set_version_flag("--version", DTNLAB_VERSION);
  app.require_subcommand(1);
  std::string config_path, out_path, format;
  unsigned jobs = 1;
  std::optional<std::uint64_t> seed;
  for (const char* name : {"spectrum", "sweep", "verify", "converge"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "scenario file")->required();
    sub->add_option("--jobs", jobs, "worker threads")->check(CLI::Range(1u, 256u));
    sub->add_option("--seed", seed, "random seed override");
    sub->add_option("--out", out_path, "output path (stdout when omitted)");
    sub->add_option("--format", format, "json, csv or plotdata")->check(CLI::IsMember({"json", "csv", "plotdata"}));
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_pass : exit_config_error;
  }

  ScenarioConfig cfg;
  OutputFormat fmt = OutputFormat::json;
  std::filesystem::path target;
  try {
    cfg = load_config(config_path);
    const std::string command = app.get_subcommands().front()->get_name();
    if (!cfg.command.empty() && cfg.command != command)
      throw ConfigError("config is for '" + cfg.command + "' but '" + command + "' was requested");
    cfg.command = command;
    cfg.jobs = jobs;
    if (seed) cfg.run.seed = *seed;
    fmt = !format.empty() ? parse_format(format) : cfg.output.format.value_or(OutputFormat::json);
    if (!out_path.empty()) target = out_path;
    else if (!cfg.output.path.empty()) target = cfg.base_dir / cfg.output.path;
    if (fmt == OutputFormat::plotdata && target.empty()) throw ConfigError("plotdata output needs --out");
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return exit_config_error;
  }

  Report rep;
  try {
    rep = run_scenario(cfg);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return exit_config_error;
  } catch (const Error& e) {
    err << "error: " << to_string(e.kind()) << ": " << e.what() << '\n';
    return e.kind() == ErrorKind::invalid_argument || e.kind() == ErrorKind::parse_error ? exit_config_error
                                                                                          : exit_check_failure;
  }

  try {
    if (target.empty()) {
      if (fmt == OutputFormat::json) out << to_json(rep);
      else write_csv(rep, out);
      out.flush();
    } else {
      emit(rep, fmt, target);
    }
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return exit_io_error;
  }

  if (!rep.passed()) {
    for (const auto& c : rep.checks) {
      if (!c.failed()) continue;
      err << "FAIL " << c.name;
      if (c.lambda) err << " lambda=" << *c.lambda;
      if (c.lhs && c.rhs) err << " lhs=" << *c.lhs << " rhs=" << *c.rhs;
      if (c.residual) err << " residual=" << *c.residual;
      err << " : " << c.reason << " [" << c.diagnostics << "]\n";
    }
    return exit_check_failure;
  }
  return exit_pass;
}

}  // namespace dtnlab::cli
