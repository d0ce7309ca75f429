#include "dtnlab/cli.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace dtnlab::cli {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::string shortest(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

double to_double(const std::string& key, const std::string& v) {
  double x = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size() || !std::isfinite(x))
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  return x;
}

long long to_integer(const std::string& key, const std::string& v) {
  long long x = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return x;
}

long long at_least(const std::string& key, long long x, long long lo) {
  if (x < lo) throw ConfigError(key + ": must be at least " + std::to_string(lo));
  return x;
}

double positive(const std::string& key, double x) {
  if (!(x > 0)) throw ConfigError(key + ": must be positive");
  return x;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T, typename F>
std::string join(const std::vector<T>& xs, F f) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + f(xs[i]);
  return out;
}

const std::set<std::string> kDomainKinds{"p3", "p3_triangle", "interval", "grid", "lshape",
                                         "unit_square", "graph", "random_graph"};
const std::set<std::string> kCommands{"spectrum", "sweep", "verify", "converge"};

using Setter = std::function<void(ScenarioConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, std::map<std::string, Setter>>& grammar() {
  static const std::map<std::string, std::map<std::string, Setter>> g{
      {"domain",
       {{"kind",
         [](ScenarioConfig& c, const std::string& k, const std::string& v) {
           if (!kDomainKinds.count(v)) throw ConfigError(k + ": unknown domain kind '" + v + "'");
           c.domain.kind = v;
         }},
        {"nodes", [](ScenarioConfig& c, const std::string& k,
                     const std::string& v) { c.domain.nodes = at_least(k, to_integer(k, v), 2); }},
        {"ends",
         [](ScenarioConfig& c, const std::string& k, const std::string& v) {
           if (v != "last" && v != "both") throw ConfigError(k + ": expected last or both");
           c.domain.ends = v;
         }},
        {"spacing", [](ScenarioConfig& c, const std::string& k,
                       const std::string& v) { c.domain.spacing = positive(k, to_double(k, v)); }},
        {"rows", [](ScenarioConfig& c, const std::string& k,
                    const std::string& v) { c.domain.rows = at_least(k, to_integer(k, v), 1); }},
        {"cols", [](ScenarioConfig& c, const std::string& k,
                    const std::string& v) { c.domain.cols = at_least(k, to_integer(k, v), 1); }},
        {"mask", [](ScenarioConfig& c, const std::string&, const std::string& v) { c.domain.mask = v; }},
        {"graph", [](ScenarioConfig& c, const std::string&, const std::string& v) { c.domain.graph = v; }},
        {"graph_seed", [](ScenarioConfig& c, const std::string& k, const std::string& v) {
           c.domain.graph_seed = static_cast<std::uint64_t>(at_least(k, to_integer(k, v), 0));
         }}}},
      {"form",
       {{"shift",
         [](ScenarioConfig& c, const std::string& k, const std::string& v) {
           const double x = to_double(k, v);
           if (x < 0) throw ConfigError(k + ": must be nonnegative");
           c.form.shift = x;
         }},
        {"mass_mode", [](ScenarioConfig& c, const std::string& k, const std::string& v) {
           if (v == "identity") c.form.mass_mode = MassMode::identity;
           else if (v == "lumped") c.form.mass_mode = MassMode::lumped;
           else throw ConfigError(k + ": expected identity or lumped");
         }}}},
      {"run",
       {{"command",
         [](ScenarioConfig& c, const std::string& k, const std::string& v) {
           if (!kCommands.count(v)) throw ConfigError(k + ": unknown command '" + v + "'");
           c.command = v;
         }},
        {"lambdas",
         [](ScenarioConfig& c, const std::string& k, const std::string& v) {
           c.run.lambdas.clear();
           for (const auto& item : split_list(v)) c.run.lambdas.push_back(to_double(k, item));
         }},
        {"n_random", [](ScenarioConfig& c, const std::string& k,
                        const std::string& v) { c.run.n_random = at_least(k, to_integer(k, v), 0); }},
        {"seed", [](ScenarioConfig& c, const std::string& k,
                    const std::string& v) { c.run.seed = static_cast<std::uint64_t>(at_least(k, to_integer(k, v), 0)); }},
        {"mu_from", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.run.mu_from = to_double(k, v); }},
        {"mu_to", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.run.mu_to = to_double(k, v); }},
        {"steps", [](ScenarioConfig& c, const std::string& k,
                     const std::string& v) { c.run.steps = at_least(k, to_integer(k, v), 2); }},
        {"k_max", [](ScenarioConfig& c, const std::string& k,
                     const std::string& v) { c.run.k_max = at_least(k, to_integer(k, v), 1); }},
        {"n_samples", [](ScenarioConfig& c, const std::string& k,
                         const std::string& v) { c.run.n_samples = at_least(k, to_integer(k, v), 1); }},
        {"eigen_limit", [](ScenarioConfig& c, const std::string& k,
                           const std::string& v) { c.run.eigen_limit = at_least(k, to_integer(k, v), 1); }},
        {"intervals", [](ScenarioConfig& c, const std::string& k,
                         const std::string& v) { c.run.intervals = at_least(k, to_integer(k, v), 0); }},
        {"monotone_vectors", [](ScenarioConfig& c, const std::string& k,
                                const std::string& v) { c.run.monotone_vectors = at_least(k, to_integer(k, v), 0); }},
        {"monotone_points", [](ScenarioConfig& c, const std::string& k,
                               const std::string& v) { c.run.monotone_points = at_least(k, to_integer(k, v), 2); }},
        {"assert_payne",
         [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.run.assert_payne = to_bool(k, v); }},
        {"count", [](ScenarioConfig& c, const std::string& k,
                     const std::string& v) { c.run.count = at_least(k, to_integer(k, v), 1); }},
        {"ladder",
         [](ScenarioConfig& c, const std::string& k, const std::string& v) {
           c.run.ladder.clear();
           for (const auto& item : split_list(v)) c.run.ladder.push_back(at_least(k, to_integer(k, item), 2));
           if (c.run.ladder.size() < 2) throw ConfigError(k + ": needs at least two levels");
         }},
        {"modes", [](ScenarioConfig& c, const std::string& k, const std::string& v) {
           const long long m = at_least(k, to_integer(k, v), 1);
           if (m > 5) throw ConfigError(k + ": at most 5 modes have continuum targets");
           c.run.modes = m;
         }}}},
      {"tolerances",
       {{"cluster_rel", [](ScenarioConfig& c, const std::string& k,
                           const std::string& v) { c.tol.cluster_rel = positive(k, to_double(k, v)); }},
        {"pencil_zero", [](ScenarioConfig& c, const std::string& k,
                           const std::string& v) { c.tol.pencil_zero = positive(k, to_double(k, v)); }},
        {"principal_angle", [](ScenarioConfig& c, const std::string& k,
                               const std::string& v) { c.tol.principal_angle = positive(k, to_double(k, v)); }},
        {"rank_factor", [](ScenarioConfig& c, const std::string& k,
                           const std::string& v) { c.tol.rank_factor = positive(k, to_double(k, v)); }},
        {"inequality", [](ScenarioConfig& c, const std::string& k,
                          const std::string& v) { c.tol.inequality = positive(k, to_double(k, v)); }},
        {"monotone", [](ScenarioConfig& c, const std::string& k,
                        const std::string& v) { c.tol.monotone = positive(k, to_double(k, v)); }},
        {"projection", [](ScenarioConfig& c, const std::string& k,
                          const std::string& v) { c.tol.projection = positive(k, to_double(k, v)); }},
        {"resolvent_rank", [](ScenarioConfig& c, const std::string& k,
                              const std::string& v) { c.tol.resolvent_rank = positive(k, to_double(k, v)); }}}},
      {"output",
       {{"path", [](ScenarioConfig& c, const std::string&, const std::string& v) { c.output.path = v; }},
        {"format", [](ScenarioConfig& c, const std::string& k, const std::string& v) {
           try {
             c.output.format = parse_format(v);
           } catch (const ConfigError&) {
             throw ConfigError(k + ": expected json, csv or plotdata");
           }
         }}}},
  };
  return g;
}

}  // namespace

const char* to_string(OutputFormat f) {
  switch (f) {
    case OutputFormat::json: return "json";
    case OutputFormat::csv: return "csv";
    case OutputFormat::plotdata: return "plotdata";
  }
  return "json";
}

OutputFormat parse_format(const std::string& s) {
  if (s == "json") return OutputFormat::json;
  if (s == "csv") return OutputFormat::csv;
  if (s == "plotdata") return OutputFormat::plotdata;
  throw ConfigError("unknown output format '" + s + "'");
}

MassMode ScenarioConfig::mass_mode() const {
  if (form.mass_mode) return *form.mass_mode;
  return command == "converge" ? MassMode::lumped : MassMode::identity;
}

std::map<std::string, std::string> ScenarioConfig::echo() const {
  std::map<std::string, std::string> e;
  e["run.command"] = command;
  e["domain.kind"] = domain.kind;
  e["domain.nodes"] = std::to_string(domain.nodes);
  e["domain.ends"] = domain.ends;
  e["domain.spacing"] = domain.spacing ? shortest(*domain.spacing) : "default";
  e["domain.rows"] = std::to_string(domain.rows);
  e["domain.cols"] = std::to_string(domain.cols);
  e["domain.mask"] = domain.mask;
  e["domain.graph"] = domain.graph;
  e["domain.graph_seed"] = std::to_string(domain.graph_seed);
  e["form.shift"] = shortest(form.shift);
  e["form.mass_mode"] = mass_mode() == MassMode::lumped ? "lumped" : "identity";
  e["run.lambdas"] = join(run.lambdas, shortest);
  e["run.n_random"] = std::to_string(run.n_random);
  e["run.seed"] = std::to_string(run.seed);
  e["run.mu_from"] = shortest(run.mu_from);
  e["run.mu_to"] = shortest(run.mu_to);
  e["run.steps"] = std::to_string(run.steps);
  e["run.k_max"] = std::to_string(run.k_max);
  e["run.n_samples"] = std::to_string(run.n_samples);
  e["run.eigen_limit"] = std::to_string(run.eigen_limit);
  e["run.intervals"] = std::to_string(run.intervals);
  e["run.monotone_vectors"] = std::to_string(run.monotone_vectors);
  e["run.monotone_points"] = std::to_string(run.monotone_points);
  e["run.assert_payne"] = run.assert_payne ? "true" : "false";
  e["run.count"] = std::to_string(run.count);
  e["run.ladder"] = join(run.ladder, [](Index x) { return std::to_string(x); });
  e["run.modes"] = std::to_string(run.modes);
  e["run.jobs"] = std::to_string(jobs);
  e["tolerances.cluster_rel"] = shortest(tol.cluster_rel);
  e["tolerances.pencil_zero"] = shortest(tol.pencil_zero);
  e["tolerances.principal_angle"] = shortest(tol.principal_angle);
  e["tolerances.rank_factor"] = shortest(tol.rank_factor);
  e["tolerances.inequality"] = shortest(tol.inequality);
  e["tolerances.monotone"] = shortest(tol.monotone);
  e["tolerances.projection"] = shortest(tol.projection);
  e["tolerances.resolvent_rank"] = shortest(tol.resolvent_rank);
  return e;
}

ScenarioConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  ScenarioConfig cfg;
  cfg.base_dir = base_dir;
  const auto& g = grammar();
  std::string section;
  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto cut = raw.find_first_of("#;");
    const std::string line = trim(cut == std::string::npos ? raw : raw.substr(0, cut));
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!g.count(section)) throw ConfigError(where + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    if (section.empty()) throw ConfigError(where + "key outside of a section");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto& keys = g.at(section);
    const auto it = keys.find(key);
    if (it == keys.end()) throw ConfigError(where + "unknown key '" + key + "' in [" + section + "]");
    const std::string full = section + "." + key;
    if (!seen.insert(full).second) throw ConfigError(where + "duplicate key " + full);
    if (value.empty()) throw ConfigError(where + full + " has no value");
    it->second(cfg, full, value);
  }
  if (!(cfg.run.mu_from < cfg.run.mu_to)) throw ConfigError("run.mu_from must be below run.mu_to");
  if (cfg.domain.kind == "grid" && !cfg.domain.mask.empty()) {
    const auto p = cfg.base_dir / cfg.domain.mask;
    if (!std::filesystem::exists(p)) throw ConfigError("domain.mask: file not found: " + p.string());
  }
  if (cfg.domain.kind == "graph") {
    if (cfg.domain.graph.empty()) throw ConfigError("domain.graph is required for kind = graph");
    const auto p = cfg.base_dir / cfg.domain.graph;
    if (!std::filesystem::exists(p)) throw ConfigError("domain.graph: file not found: " + p.string());
  }
  return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
}

Fixture build_fixture(const ScenarioConfig& cfg) {
  const auto& d = cfg.domain;
  const double shift = cfg.form.shift;
  const MassMode mode = cfg.mass_mode();
  try {
    if (d.kind == "p3")
      return make_fixture("p3", build_graph(3, {{0, 1, 1.0}, {1, 2, 1.0}}, {2}), shift, mode);
    if (d.kind == "p3_triangle")
      return make_fixture("p3+triangle",
                          build_graph(6, {{0, 1, 1.0}, {1, 2, 1.0}, {3, 4, 1.0}, {4, 5, 1.0}, {3, 5, 1.0}}, {2}),
                          shift, mode);
    if (d.kind == "interval") {
      const double h = d.spacing.value_or(1.0 / static_cast<double>(d.nodes - 1));
      return make_fixture("interval" + std::to_string(d.nodes),
                          build_interval(d.nodes, h, d.ends == "both" ? IntervalEnds::both : IntervalEnds::last),
                          shift, mode);
    }
    if (d.kind == "grid") {
      std::optional<GridMask> mask;
      if (!d.mask.empty()) mask = read_mask_file((cfg.base_dir / d.mask).string());
      const Index rows = mask ? mask->rows : d.rows;
      const Index cols = mask ? mask->cols : d.cols;
      return make_fixture("grid" + std::to_string(rows) + "x" + std::to_string(cols),
                          build_grid(rows, cols, mask, d.spacing), shift, mode);
    }
    if (d.kind == "lshape") {
      GridMask mask = GridMask::full(d.rows, d.cols);
      for (Index r = 0; r < d.rows / 2; ++r)
        for (Index c = d.cols - d.cols / 2; c < d.cols; ++c) mask.cells[static_cast<std::size_t>(r * d.cols + c)] = false;
      return make_fixture("lshape" + std::to_string(d.rows) + "x" + std::to_string(d.cols),
                          build_grid(d.rows, d.cols, mask, d.spacing), shift, mode);
    }
    if (d.kind == "unit_square") return unit_square_fixture(d.spacing.value_or(1.0 / 16), shift, mode);
    if (d.kind == "graph")
      return make_fixture("graph", read_graph_file((cfg.base_dir / d.graph).string()), shift, mode);
    if (d.kind == "random_graph")
      return make_fixture("random_graph" + std::to_string(d.graph_seed), random_graph(d.graph_seed, d.nodes), shift,
                          mode);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::parse_error || e.kind() == ErrorKind::invalid_domain ||
        e.kind() == ErrorKind::invalid_argument || e.kind() == ErrorKind::assembly_failure)
      throw ConfigError(std::string(to_string(e.kind())) + ": " + e.what());
    throw;
  }
  throw ConfigError("unknown domain kind '" + d.kind + "'");
}

}  // namespace dtnlab::cli
