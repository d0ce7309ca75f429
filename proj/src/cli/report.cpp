#include "dtnlab/cli.hpp"

#include <json.hpp>

#include <charconv>
#include <fstream>
#include <iostream>

namespace dtnlab::cli {

using nlohmann::json;

namespace {

template <typename T>
json opt(const std::optional<T>& x) {
  return x ? json(*x) : json(nullptr);
}

template <typename T>
std::optional<T> get_opt(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

json check_to_json(const CheckResult& r) {
  json j;
  j["name"] = r.name;
  j["status"] = to_string(r.status);
  j["reason"] = r.reason;
  j["lhs"] = opt(r.lhs);
  j["rhs"] = opt(r.rhs);
  j["residual"] = opt(r.residual);
  j["tolerance"] = opt(r.tolerance);
  j["lambda"] = opt(r.lambda);
  j["interval"] = r.interval ? json::array({r.interval->first, r.interval->second}) : json(nullptr);
  j["diagnostics"] = r.diagnostics;
  return j;
}

CheckResult check_from_json(const json& j) {
  CheckResult r;
  r.name = j.at("name").get<std::string>();
  r.status = parse_check_status(j.at("status").get<std::string>());
  r.reason = j.at("reason").get<std::string>();
  r.lhs = get_opt<long long>(j, "lhs");
  r.rhs = get_opt<long long>(j, "rhs");
  r.residual = get_opt<double>(j, "residual");
  r.tolerance = get_opt<double>(j, "tolerance");
  r.lambda = get_opt<double>(j, "lambda");
  if (!j.at("interval").is_null()) r.interval = std::make_pair(j.at("interval")[0].get<double>(), j.at("interval")[1].get<double>());
  r.diagnostics = j.at("diagnostics").get<std::string>();
  return r;
}

json payne_to_json(const PayneRecord& p) {
  return {{"k", p.k},
          {"lambda_d", p.lambda_d},
          {"lambda_n_next", opt(p.lambda_n_next)},
          {"p", p.p},
          {"q", p.q},
          {"k0", p.k0},
          {"margin_strict", opt(p.margin_strict)},
          {"margin_weak", opt(p.margin_weak)},
          {"payne_margin", opt(p.payne_margin)},
          {"witness", p.witness}};
}

PayneRecord payne_from_json(const json& j) {
  PayneRecord p;
  p.k = j.at("k").get<Index>();
  p.lambda_d = j.at("lambda_d").get<double>();
  p.lambda_n_next = get_opt<double>(j, "lambda_n_next");
  p.p = j.at("p").get<Index>();
  p.q = j.at("q").get<Index>();
  p.k0 = j.at("k0").get<Index>();
  p.margin_strict = get_opt<double>(j, "margin_strict");
  p.margin_weak = get_opt<double>(j, "margin_weak");
  p.payne_margin = get_opt<double>(j, "payne_margin");
  p.witness = j.at("witness").get<bool>();
  return p;
}

json level_to_json(const ConvergenceLevel& l) {
  return {{"inverse_h", l.inverse_h},
          {"dirichlet", l.dirichlet},
          {"neumann", l.neumann},
          {"dirichlet_error", l.dirichlet_error},
          {"neumann_error", l.neumann_error}};
}

ConvergenceLevel level_from_json(const json& j) {
  ConvergenceLevel l;
  l.inverse_h = j.at("inverse_h").get<Index>();
  l.dirichlet = j.at("dirichlet").get<std::vector<double>>();
  l.neumann = j.at("neumann").get<std::vector<double>>();
  l.dirichlet_error = j.at("dirichlet_error").get<std::vector<double>>();
  l.neumann_error = j.at("neumann_error").get<std::vector<double>>();
  return l;
}

std::string num(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

}  // namespace

bool Report::passed() const {
  for (const auto& c : checks)
    if (c.failed()) return false;
  return true;
}

std::string to_json(const Report& r, bool with_timing) {
  json j;
  j["tool"] = {{"name", "dtnlab"}, {"version", r.tool_version}};
  j["command"] = r.command;
  j["config"] = r.config;
  j["fixture"] = {{"name", r.fixture.name},
                  {"n", r.fixture.n},
                  {"n_interior", r.fixture.n_interior},
                  {"n_boundary", r.fixture.n_boundary}};
  j["checks"] = json::array();
  for (const auto& c : r.checks) j["checks"].push_back(check_to_json(c));
  j["payne"] = json::array();
  for (const auto& p : r.payne) j["payne"].push_back(payne_to_json(p));
  j["spectra"] = {{"neumann", r.neumann_excerpt}, {"dirichlet", r.dirichlet_excerpt}};
  j["crossings"] = json::array();
  for (const auto& e : r.crossings)
    j["crossings"].push_back({{"branch", e.branch},
                              {"mu_low", e.mu_low},
                              {"mu_high", e.mu_high},
                              {"mu", e.mu},
                              {"from_sign", e.from_sign},
                              {"to_sign", e.to_sign}});
  j["counting"] = json::array();
  for (const auto& c : r.counting)
    j["counting"].push_back({{"lambda", c.lambda}, {"N_N", c.n_neumann}, {"N_D", c.n_dirichlet}});
  j["trace"] = json::array();
  for (const auto& t : r.trace)
    j["trace"].push_back({{"mu", t.mu}, {"branch", t.branch}, {"nu", t.nu}, {"flag", t.flag}});
  if (r.convergence) {
    json c;
    c["dirichlet_target"] = r.convergence->dirichlet_target;
    c["neumann_target"] = r.convergence->neumann_target;
    c["levels"] = json::array();
    for (const auto& l : r.convergence->levels) c["levels"].push_back(level_to_json(l));
    c["order_dirichlet"] = opt(r.convergence->order_dirichlet);
    c["order_neumann"] = opt(r.convergence->order_neumann);
    j["convergence"] = c;
  } else {
    j["convergence"] = nullptr;
  }
  std::size_t passed = 0, failed = 0, skipped = 0;
  for (const auto& c : r.checks) {
    if (c.passed()) ++passed;
    else if (c.failed()) ++failed;
    else ++skipped;
  }
  j["summary"] = {{"passed", passed}, {"failed", failed}, {"skipped", skipped}, {"status", r.passed() ? "pass" : "fail"}};
  if (with_timing) j["timing"] = r.timing;
  return j.dump(2) + "\n";
}

Report report_from_json(std::string_view text) {
  Report r;
  try {
    const json j = json::parse(text);
    r.tool_version = j.at("tool").at("version").get<std::string>();
    r.command = j.at("command").get<std::string>();
    r.config = j.at("config").get<std::map<std::string, std::string>>();
    const auto& f = j.at("fixture");
    r.fixture = {f.at("name").get<std::string>(), f.at("n").get<Index>(), f.at("n_interior").get<Index>(),
                 f.at("n_boundary").get<Index>()};
    for (const auto& c : j.at("checks")) r.checks.push_back(check_from_json(c));
    for (const auto& p : j.at("payne")) r.payne.push_back(payne_from_json(p));
    r.neumann_excerpt = j.at("spectra").at("neumann").get<std::vector<double>>();
    r.dirichlet_excerpt = j.at("spectra").at("dirichlet").get<std::vector<double>>();
    for (const auto& e : j.at("crossings"))
      r.crossings.push_back({e.at("branch").get<Index>(), e.at("mu_low").get<double>(), e.at("mu_high").get<double>(),
                             e.at("mu").get<double>(), e.at("from_sign").get<int>(), e.at("to_sign").get<int>()});
    for (const auto& c : j.at("counting"))
      r.counting.push_back({c.at("lambda").get<double>(), c.at("N_N").get<Index>(), c.at("N_D").get<Index>()});
    for (const auto& t : j.at("trace"))
      r.trace.push_back({t.at("mu").get<double>(), t.at("branch").get<Index>(), t.at("nu").get<double>(),
                         t.at("flag").get<std::string>()});
    if (!j.at("convergence").is_null()) {
      const auto& c = j.at("convergence");
      ConvergenceSummary s;
      s.dirichlet_target = c.at("dirichlet_target").get<std::vector<double>>();
      s.neumann_target = c.at("neumann_target").get<std::vector<double>>();
      for (const auto& l : c.at("levels")) s.levels.push_back(level_from_json(l));
      s.order_dirichlet = get_opt<double>(c, "order_dirichlet");
      s.order_neumann = get_opt<double>(c, "order_neumann");
      r.convergence = std::move(s);
    }
    if (j.contains("timing")) r.timing = j.at("timing").get<std::map<std::string, double>>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse_error, std::string("report JSON: ") + e.what());
  }
  return r;
}

void write_csv(const Report& r, std::ostream& os) {
  os << "check,lambda,status,lhs,rhs,residual\n";
  for (const auto& c : r.checks) {
    os << c.name << ',';
    if (c.lambda) os << num(*c.lambda);
    else if (c.interval) os << num(c.interval->first) << ".." << num(c.interval->second);
    os << ',' << to_string(c.status) << ',';
    if (c.lhs) os << *c.lhs;
    os << ',';
    if (c.rhs) os << *c.rhs;
    os << ',';
    if (c.residual) os << num(*c.residual);
    os << '\n';
  }
}

void write_counting(const Report& r, std::ostream& os) {
  os << "lambda,N_N,N_D\n";
  for (const auto& c : r.counting) os << num(c.lambda) << ',' << c.n_neumann << ',' << c.n_dirichlet << '\n';
}

void write_trace(const Report& r, std::ostream& os) {
  os << "mu,branch,nu,flag\n";
  for (const auto& t : r.trace) os << num(t.mu) << ',' << t.branch << ',' << num(t.nu) << ',' << t.flag << '\n';
}

std::vector<std::filesystem::path> emit(const Report& report, OutputFormat format, const std::filesystem::path& path) {
  auto write_file = [](const std::filesystem::path& p, auto&& body) {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + p.string() + " for writing");
    body(f);
    f.flush();
    if (!f) throw IoError("write failed for " + p.string());
  };
  if (format == OutputFormat::plotdata) {
    if (path.empty()) throw IoError("plotdata output needs --out");
    std::filesystem::path counting = path;
    counting.replace_filename(path.stem().string() + "_counting.csv");
    write_file(path, [&](std::ostream& os) { write_trace(report, os); });
    write_file(counting, [&](std::ostream& os) { write_counting(report, os); });
    return {path, counting};
  }
  auto body = [&](std::ostream& os) {
    if (format == OutputFormat::json) os << to_json(report);
    else write_csv(report, os);
  };
  if (path.empty()) {
    body(std::cout);
    std::cout.flush();
    if (!std::cout) throw IoError("write to stdout failed");
    return {};
  }
  write_file(path, body);
  return {path};
}

}  // namespace dtnlab::cli
