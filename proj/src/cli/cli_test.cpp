#include "dtnlab/cli.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace dtnlab;
using namespace dtnlab::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  const fs::path d = fs::temp_directory_path() / "dtnlab_cli_test";
  fs::create_directories(d);
  return d;
}

fs::path write_text(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
  return p;
}

std::string read_text(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

int run(std::vector<std::string> args, std::string* out_text = nullptr, std::string* err_text = nullptr) {
  args.insert(args.begin(), "dtnlab");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = run_main(static_cast<int>(argv.size()), argv.data(), out, err);
  if (out_text) *out_text = out.str();
  if (err_text) *err_text = err.str();
  return code;
}

const char* kP3Verify = R"(
[run]
command = verify      # integer identities on the path
lambdas = 0.5, 3
n_random = 3
seed = 7
)";

bool config_error(std::string_view text) {
  try {
    parse_config(text);
  } catch (const ConfigError&) {
    return true;
  }
  return false;
}

}  // namespace

TEST_CASE("config parsing and defaults") {
  const auto cfg = parse_config(kP3Verify);
  CHECK(cfg.command == "verify");
  CHECK(cfg.domain.kind == "p3");
  CHECK(cfg.run.lambdas == std::vector<double>{0.5, 3.0});
  CHECK(cfg.run.n_random == 3);
  CHECK(cfg.run.seed == 7);
  CHECK(cfg.mass_mode() == MassMode::identity);
  CHECK(cfg.form.shift == 1.0);

  auto conv = parse_config("[run]\ncommand = converge\nladder = 8, 16\n");
  CHECK(conv.mass_mode() == MassMode::lumped);
  CHECK(conv.run.ladder == std::vector<Index>{8, 16});

  const auto echo = cfg.echo();
  CHECK(echo.at("run.command") == "verify");
  CHECK(echo.at("domain.kind") == "p3");
  CHECK(echo.count("tolerances.cluster_rel") == 1);

  const auto grid = parse_config("; comment\n[domain]\nkind = grid\nrows = 6\ncols = 7\n[form]\nshift = 0.5\nmass_mode = lumped\n");
  CHECK(grid.domain.rows == 6);
  CHECK(grid.domain.cols == 7);
  CHECK(grid.form.shift == 0.5);
  CHECK(grid.mass_mode() == MassMode::lumped);
}

TEST_CASE("config errors") {
  CHECK(config_error("[nowhere]\n"));
  CHECK(config_error("[run]\nbogus = 1\n"));
  CHECK(config_error("[run]\nseed = 1\nseed = 2\n"));
  CHECK(config_error("[run]\nseed =\n"));
  CHECK(config_error("seed = 1\n"));
  CHECK(config_error("[run]\nseed\n"));
  CHECK(config_error("[run\n"));
  CHECK(config_error("[run]\nsteps = many\n"));
  CHECK(config_error("[run]\nsteps = 1\n"));
  CHECK(config_error("[run]\nmu_from = 3\nmu_to = 1\n"));
  CHECK(config_error("[run]\ncommand = dance\n"));
  CHECK(config_error("[run]\nmodes = 6\n"));
  CHECK(config_error("[run]\nladder = 16\n"));
  CHECK(config_error("[form]\nshift = -1\n"));
  CHECK(config_error("[form]\nmass_mode = heavy\n"));
  CHECK(config_error("[domain]\nkind = torus\n"));
  CHECK(config_error("[domain]\nkind = interval\nends = middle\n"));
  CHECK(config_error("[domain]\nkind = grid\nmask = /nonexistent/mask.txt\n"));
  CHECK(config_error("[domain]\nkind = graph\n"));
  CHECK(config_error("[output]\nformat = xml\n"));
  CHECK(config_error("[tolerances]\ncluster_rel = 0\n"));
  CHECK_THROWS_AS(load_config("/nonexistent/scenario.ini"), ConfigError);
}

TEST_CASE("fixtures from config") {
  const auto dir = scratch_dir();
  write_text(dir / "ring.mask", "###\n#.#\n###\n");
  write_text(dir / "path.graph", "nodes 3 boundary 2\n0 1 1\n1 2 1\n");

  auto fx = [&](const std::string& text) { return build_fixture(parse_config(text, dir)); };
  CHECK(fx("").form.size() == 3);
  CHECK(fx("[domain]\nkind = p3_triangle\n").form.size() == 6);
  CHECK(fx("[domain]\nkind = interval\nnodes = 12\n").split.n_boundary() == 2);
  CHECK(fx("[domain]\nkind = interval\nnodes = 12\nends = last\n").split.n_boundary() == 1);
  CHECK(fx("[domain]\nkind = grid\nrows = 5\ncols = 5\n").split.n_interior() == 9);
  CHECK(fx("[domain]\nkind = lshape\nrows = 10\ncols = 10\n").form.size() == 75);
  CHECK(fx("[domain]\nkind = unit_square\nspacing = 0.125\n").form.size() == 81);
  CHECK(fx("[domain]\nkind = graph\ngraph = path.graph\n").form.K(1, 1) == 3.0);
  CHECK(fx("[domain]\nkind = random_graph\ngraph_seed = 4\n").form.size() ==
        fx("[domain]\nkind = random_graph\ngraph_seed = 4\n").form.size());
  CHECK_THROWS_AS(fx("[domain]\nkind = grid\nmask = ring.mask\nrows = 3\ncols = 3\n"), ConfigError);
  CHECK_THROWS_AS(fx("[domain]\nkind = grid\nrows = 2\ncols = 2\n"), ConfigError);
  CHECK_THROWS_AS(fx("[form]\nshift = 0\n"), ConfigError);
}

TEST_CASE("verify report round-trips through JSON") {
  const auto cfg = parse_config(kP3Verify);
  const Report r = run_scenario(cfg);
  CHECK(r.passed());
  CHECK(r.command == "verify");
  CHECK(r.fixture.n == 3);
  CHECK(!r.checks.empty());
  CHECK(!r.payne.empty());

  const std::string text = to_json(r);
  const Report back = report_from_json(text);
  CHECK(back == r);
  CHECK(to_json(back) == text);

  // Everything except timing is reproducible.
  const Report again = run_scenario(cfg);
  CHECK(to_json(again, false) == to_json(r, false));
  CHECK(to_json(r, false).find("\"timing\"") == std::string::npos);

  CHECK_THROWS_AS(report_from_json("{\"tool\": 1}"), Error);
}

TEST_CASE("CSV and plot data layouts") {
  const Report verify = run_scenario(parse_config(kP3Verify));
  std::ostringstream csv;
  write_csv(verify, csv);
  std::istringstream lines(csv.str());
  std::string line;
  std::getline(lines, line);
  CHECK(line == "check,lambda,status,lhs,rhs,residual");
  std::size_t rows = 0;
  while (std::getline(lines, line)) {
    ++rows;
    CHECK(std::count(line.begin(), line.end(), ',') == 5);
  }
  CHECK(rows == verify.checks.size());

  const Report sweep = run_scenario(parse_config("[run]\ncommand = sweep\nsteps = 200\n"));
  CHECK(sweep.crossings.size() == 5);
  CHECK(!sweep.trace.empty());
  CHECK(!sweep.counting.empty());
  const auto dir = scratch_dir();
  const auto files = emit(sweep, OutputFormat::plotdata, dir / "p3.csv");
  REQUIRE(files.size() == 2);
  CHECK(files[1] == dir / "p3_counting.csv");
  CHECK(read_text(files[0]).rfind("mu,branch,nu,flag\n", 0) == 0);
  CHECK(read_text(files[1]).rfind("lambda,N_N,N_D\n", 0) == 0);
  CHECK_THROWS_AS(emit(sweep, OutputFormat::plotdata, ""), IoError);
  CHECK_THROWS_AS(emit(sweep, OutputFormat::json, "/nonexistent/dir/x.json"), IoError);
}

TEST_CASE("spectrum scenario lists both spectra") {
  const Report r = run_scenario(parse_config("[run]\ncommand = spectrum\ncount = 3\n"));
  REQUIRE(r.neumann_excerpt.size() == 3);
  CHECK(std::abs(r.neumann_excerpt[0] - 1) < 1e-12);
  CHECK(std::abs(r.neumann_excerpt[1] - 2) < 1e-12);
  CHECK(std::abs(r.neumann_excerpt[2] - 4) < 1e-12);
  CHECK(r.dirichlet_excerpt.size() == 2);
  CHECK(r.passed());
}

TEST_CASE("order fit") {
  const std::vector<double> h{1.0 / 16, 1.0 / 32, 1.0 / 64};
  std::vector<std::vector<double>> e;
  for (double c : {0.3, 2.0, 7.0}) e.push_back({c * h[0] * h[0], c * h[1] * h[1], c * h[2] * h[2]});
  const auto p = fit_order(h, e);
  REQUIRE(p);
  CHECK(std::abs(*p - 2) < 1e-12);

  // A mode that is exact up to rounding does not enter the fit.
  e.push_back({1e-13, 3e-12, 2e-12});
  CHECK(std::abs(*fit_order(h, e) - 2) < 1e-12);
  CHECK_FALSE(fit_order({0.1}, {{0.01}}).has_value());
}

TEST_CASE("command line exit codes") {
  const auto dir = scratch_dir();
  const auto verify = write_text(dir / "verify.ini", kP3Verify);
  const auto payne = write_text(dir / "payne.ini", std::string(kP3Verify) + "assert_payne = true\n");
  const auto broken = write_text(dir / "broken.ini", "[run]\ncommand = verify\nsteps = lots\n");

  std::string out, err;
  CHECK(run({"verify", "--config", verify.string(), "--out", (dir / "v.json").string()}) == exit_pass);
  CHECK(report_from_json(read_text(dir / "v.json")).passed());
  CHECK(run({"verify", "--config", verify.string(), "--format", "csv"}, &out) == exit_pass);
  CHECK(out.rfind("check,lambda,status,lhs,rhs,residual\n", 0) == 0);

  CHECK(run({"verify", "--config", payne.string()}, &out, &err) == exit_check_failure);
  CHECK(err.find("payne_chain") != std::string::npos);

  CHECK(run({"verify", "--config", broken.string()}, &out, &err) == exit_config_error);
  CHECK(run({"sweep", "--config", verify.string()}, &out, &err) == exit_config_error);
  CHECK(run({"verify", "--config", (dir / "missing.ini").string()}, &out, &err) == exit_config_error);
  CHECK(run({"verify", "--config", verify.string(), "--format", "plotdata"}, &out, &err) == exit_config_error);
  CHECK(run({"verify", "--config", verify.string(), "--jobs", "0"}, &out, &err) == exit_config_error);
  CHECK(run({"verify"}, &out, &err) == exit_config_error);
  CHECK(run({"verify", "--config", verify.string(), "--out", "/nonexistent/dir/x.json"}, &out, &err) ==
        exit_io_error);

  // --seed overrides the file and changes the random probes.
  CHECK(run({"verify", "--config", verify.string(), "--seed", "8", "--out", (dir / "s8.json").string()}) == exit_pass);
  CHECK(report_from_json(read_text(dir / "s8.json")).config.at("run.seed") == "8");

  // Same scenario, different thread counts: identical content.
  CHECK(run({"verify", "--config", verify.string(), "--jobs", "2", "--out", (dir / "j2.json").string()}) == exit_pass);
  auto j2 = report_from_json(read_text(dir / "j2.json"));
  auto j1 = report_from_json(read_text(dir / "v.json"));
  CHECK(j2.config.at("run.jobs") == "2");
  j2.config.erase("run.jobs");
  j1.config.erase("run.jobs");
  CHECK(to_json(j2, false) == to_json(j1, false));
}
