#pragma once

// Batch experiment driver: config resolution, statement dispatch and the
// report / rows / manifest files of one run.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sublevel/experiments.hpp"

namespace sublevel::runner {

/// Invalid configuration; what() carries a "source:line: message" anchor.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raw key=value assignments tagged with where they came from.
struct Setting {
  std::string value;
  std::string origin;  // "default", "file:LINE", "env:NAME" or "cli"
};
using Settings = std::map<std::string, Setting>;

struct ExperimentConfig {
  std::string statement;
  /// Function spec for single-function statements, or a ';'-separated list
  /// (family) for thm3, lemma5, lemma6 and fk-check. "catalog" selects the
  /// 2-D catalog.
  std::string function;
  /// Comma list of values, or "geom:LO:HI:N" for N geometric points.
  std::string grid;
  std::size_t resolution = 0;
  double dt = 0.0;
  std::size_t paths = 0;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  std::filesystem::path out = ".";
  /// Statement-specific keys (k, alpha, a, lambdas, y, counts, eps, ...).
  std::map<std::string, std::string> extra;
  /// Every resolved key with its origin, for the manifest.
  Settings resolved;
};

struct StatementInfo {
  std::string id;
  std::string citation;
};

/// The twelve statement ids in a fixed order.
const std::vector<StatementInfo>& list_statements();

/// Parses a flat "key = value" file ('#' comments, blank lines ignored).
/// Errors name the file and line.
Settings parse_config_text(const std::string& text, const std::string& source);
Settings parse_config_file(const std::filesystem::path& path);

/// SUBLEVEL_<KEY> variables (key upper-cased, '-' as '_') for every known key.
Settings settings_from_env();

/// Defaults < file < environment < CLI. Throws ConfigError on unknown keys,
/// unknown statements or malformed values.
ExperimentConfig resolve(const Settings& file, const Settings& env, const Settings& cli);

/// Keys understood by resolve().
const std::vector<std::string>& known_keys();

/// Parses a grid spec (see ExperimentConfig::grid).
std::vector<double> parse_grid(const std::string& spec);

/// Runs the harness; no files written.
experiments::VerificationReport execute(const ExperimentConfig& cfg);

struct RunOutcome {
  int status = 0;  // 0 pass, 1 verification failure
  experiments::VerificationReport report;
  std::filesystem::path report_path, rows_path, manifest_path;
  double wall_seconds = 0.0;
};

/// execute() plus `<statement>-seed<N>.{report.json,rows.csv,manifest.json}`
/// in cfg.out, each written atomically.
RunOutcome run(const ExperimentConfig& cfg);

/// Artifact version string.
const char* version();

}  // namespace sublevel::runner
