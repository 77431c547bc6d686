// Command-line driver: run one verification experiment, list statements, or
// print the function catalog.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>

#include "sublevel/field.hpp"
#include "sublevel/numfmt.hpp"
#include "sublevel/runner.hpp"

namespace {

constexpr const char* kFooter =
    "Config precedence: command line > SUBLEVEL_<KEY> environment variables > --config file > defaults.\n"
    "Config files hold one 'key = value' per line; '#' starts a comment.\n"
    "Every statement writes <statement>-seed<N>.report.json, .rows.csv and .manifest.json to --out.\n"
    "rows.csv columns: series,parameter,lhs,rhs,ratio,tolerance,pass (pass is 0 or 1).\n"
    "Exit status: 0 pass, 1 verification failure, 2 invalid configuration.";

void print_row(const sublevel::experiments::ReportRow& row) {
  using sublevel::format_number;
  std::cout << "first failing row: series=" << row.series << " parameter=" << format_number(row.parameter)
            << " lhs=" << format_number(row.lhs) << " rhs=" << format_number(row.rhs)
            << " ratio=" << format_number(row.ratio) << " tolerance=" << format_number(row.tolerance) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  namespace rn = sublevel::runner;
  CLI::App app{"Sublevel-set estimate verification harness"};
  app.footer(kFooter);
  app.set_version_flag("--version", rn::version());
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run one experiment");
  std::string statement, config, out, function, grid;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> resolution, paths;
  std::optional<unsigned> threads;
  std::optional<double> dt;
  std::vector<std::string> sets;
  run->add_option("statement", statement, "Statement id (see 'list')");
  run->add_option("--config", config, "Flat key = value config file");
  run->add_option("--seed", seed, "Master seed");
  run->add_option("--resolution", resolution, "Grid cells per axis");
  run->add_option("--out", out, "Output directory");
  run->add_option("--paths", paths, "Monte Carlo paths");
  run->add_option("--dt", dt, "Walk time step");
  run->add_option("--threads", threads, "Worker threads (0 = all)");
  run->add_option("--function", function, "Function spec or ';'-separated family");
  run->add_option("--grid", grid, "Parameter grid: comma list or geom:LO:HI:N");
  run->add_option("--set", sets, "Extra key=value (repeatable)");

  auto* list = app.add_subcommand("list", "List statement ids with citations");
  auto* catalog = app.add_subcommand("catalog", "Print the analytic function catalog");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (*list) {
    for (const auto& s : rn::list_statements()) std::printf("%-13s %s\n", s.id.c_str(), s.citation.c_str());
    return 0;
  }
  if (*catalog) {
    for (const auto& [name, what] : sublevel::field::catalog_families())
      std::printf("%-26s %s\n", name.c_str(), what.c_str());
    return 0;
  }

  rn::ExperimentConfig cfg;
  try {
    rn::Settings cli;
    auto put = [&](const std::string& k, const std::string& v) { cli[k] = {v, "command line --" + k}; };
    if (!statement.empty()) put("statement", statement);
    if (!out.empty()) put("out", out);
    if (!function.empty()) put("function", function);
    if (!grid.empty()) put("grid", grid);
    if (seed) put("seed", std::to_string(*seed));
    if (resolution) put("resolution", std::to_string(*resolution));
    if (paths) put("paths", std::to_string(*paths));
    if (threads) put("threads", std::to_string(*threads));
    if (dt) put("dt", sublevel::format_number(*dt));
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos || eq == 0) throw rn::ConfigError("command line --set: expected key=value, got '" + s + "'");
      cli[s.substr(0, eq)] = {s.substr(eq + 1), "command line --set"};
    }
    const rn::Settings file = config.empty() ? rn::Settings{} : rn::parse_config_file(config);
    cfg = rn::resolve(file, rn::settings_from_env(), cli);
  } catch (const rn::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    const auto outcome = rn::run(cfg);
    std::cout << cfg.statement << ": " << (outcome.report.pass ? "PASS" : "FAIL") << " (" << outcome.report.rows.size()
              << " rows, " << sublevel::format_number(outcome.wall_seconds) << " s)\n";
    for (const auto& [k, v] : outcome.report.metrics) std::cout << "  " << k << " = " << sublevel::format_number(v) << "\n";
    std::cout << "  wrote " << outcome.report_path.string() << "\n";
    if (const auto* row = outcome.report.first_failure()) print_row(*row);
    return outcome.status;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
