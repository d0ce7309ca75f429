#pragma once

#include "dtnlab/core.hpp"
#include "dtnlab/dtn.hpp"
#include "dtnlab/fixtures.hpp"
#include "dtnlab/mesh.hpp"
#include "dtnlab/verify.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dtnlab::cli {

enum ExitCode : int { exit_pass = 0, exit_check_failure = 1, exit_config_error = 2, exit_io_error = 3 };

/// Raised for anything wrong with a scenario file or flags (exit 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised when a report cannot be written (exit 3).
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class OutputFormat { json, csv, plotdata };
const char* to_string(OutputFormat f);
OutputFormat parse_format(const std::string& s);

struct DomainConfig {
  std::string kind = "p3";  ///< p3 | p3_triangle | interval | grid | lshape | unit_square | graph | random_graph
  Index nodes = 10;         ///< interval node count, random_graph upper bound
  std::string ends = "both";
  std::optional<double> spacing;
  Index rows = 8;
  Index cols = 8;
  std::string mask;   ///< grid mask file, resolved against the config directory
  std::string graph;  ///< graph file, resolved against the config directory
  std::uint64_t graph_seed = 1;
};

struct FormConfig {
  double shift = 1.0;
  std::optional<MassMode> mass_mode;  ///< identity by default, lumped for converge
};

struct RunConfig {
  std::vector<double> lambdas;
  std::size_t n_random = 10;
  std::uint64_t seed = 1;
  double mu_from = 0.5;
  double mu_to = 4.5;
  Index steps = 200;
  Index k_max = 10;
  Index n_samples = 100;
  Index eigen_limit = 10;
  std::size_t intervals = 5;
  std::size_t monotone_vectors = 4;
  Index monotone_points = 50;
  bool assert_payne = false;
  Index count = 10;                      ///< eigenvalues listed by `spectrum`
  std::vector<Index> ladder{16, 32, 64};  ///< 1/h values for `converge`
  Index modes = 5;
};

struct OutputConfig {
  std::string path;
  std::optional<OutputFormat> format;
};

struct ScenarioConfig {
  std::string command;  ///< spectrum | sweep | verify | converge
  DomainConfig domain;
  FormConfig form;
  RunConfig run;
  Tolerances tol;
  OutputConfig output;
  unsigned jobs = 1;
  std::filesystem::path base_dir = ".";

  MassMode mass_mode() const;
  /// Effective settings as "section.key" → text, defaults included.
  std::map<std::string, std::string> echo() const;
};

/// Sectioned "key = value" text: sections [domain] [form] [run] [tolerances]
/// [output]; '#' and ';' start comments; lists are comma separated. Unknown
/// sections or keys and out-of-range values raise ConfigError.
ScenarioConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = ".");
ScenarioConfig load_config(const std::filesystem::path& path);

/// Builds the fixture described by the domain and form sections.
Fixture build_fixture(const ScenarioConfig& cfg);

struct FixtureSummary {
  std::string name;
  Index n = 0;
  Index n_interior = 0;
  Index n_boundary = 0;
  friend bool operator==(const FixtureSummary&, const FixtureSummary&) = default;
};

struct CountRow {
  double lambda = 0;
  Index n_neumann = 0;
  Index n_dirichlet = 0;
  friend bool operator==(const CountRow&, const CountRow&) = default;
};

struct ConvergenceLevel {
  Index inverse_h = 0;
  std::vector<double> dirichlet;
  std::vector<double> neumann;
  std::vector<double> dirichlet_error;  ///< relative to the continuum targets
  std::vector<double> neumann_error;
  friend bool operator==(const ConvergenceLevel&, const ConvergenceLevel&) = default;
};

struct ConvergenceSummary {
  std::vector<double> dirichlet_target;
  std::vector<double> neumann_target;
  std::vector<ConvergenceLevel> levels;
  std::optional<double> order_dirichlet;
  std::optional<double> order_neumann;
  friend bool operator==(const ConvergenceSummary&, const ConvergenceSummary&) = default;
};

struct TraceRow {
  double mu = 0;
  Index branch = 0;
  double nu = 0;
  std::string flag;
  friend bool operator==(const TraceRow&, const TraceRow&) = default;
};

struct Report {
  std::string tool_version;
  std::string command;
  std::map<std::string, std::string> config;
  FixtureSummary fixture;
  std::vector<CheckResult> checks;
  std::vector<PayneRecord> payne;
  std::vector<double> neumann_excerpt;
  std::vector<double> dirichlet_excerpt;
  std::vector<CrossingEvent> crossings;
  std::vector<CountRow> counting;
  std::vector<TraceRow> trace;
  std::optional<ConvergenceSummary> convergence;
  std::map<std::string, double> timing;  ///< seconds per phase; not part of the deterministic content

  /// No asserted check failed.
  bool passed() const;
  friend bool operator==(const Report&, const Report&) = default;
};

/// Key-sorted JSON text (two-space indent). `with_timing` false drops the
/// timing block.
std::string to_json(const Report& report, bool with_timing = true);
Report report_from_json(std::string_view text);

/// "check,lambda,status,lhs,rhs,residual"
void write_csv(const Report& report, std::ostream& os);
/// "lambda,N_N,N_D"
void write_counting(const Report& report, std::ostream& os);
/// "mu,branch,nu,flag"
void write_trace(const Report& report, std::ostream& os);

/// Writes the report. plotdata writes the trace to `path` and the counting
/// data next to it as <stem>_counting.csv. An empty path means stdout
/// (not allowed for plotdata). Throws IoError.
std::vector<std::filesystem::path> emit(const Report& report, OutputFormat format, const std::filesystem::path& path);

Report run_scenario(const ScenarioConfig& cfg);

/// Least-squares slope of log(error) against log(h), one intercept per mode;
/// errors below 1e-9 are ignored. Empty if fewer than two usable levels.
std::optional<double> fit_order(const std::vector<double>& h, const std::vector<std::vector<double>>& errors);

/// Full command line front end; returns the process exit code.
int run_main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace dtnlab::cli
