#include "sublevel/runner.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <sstream>

#include <json.hpp>

#include "sublevel/numfmt.hpp"
#include "sublevel/report.hpp"

#ifndef SUBLEVEL_VERSION
#define SUBLEVEL_VERSION "0.0.0"
#endif

namespace sublevel::runner {

using experiments::VerificationReport;
using field::AnalyticTestFunction;

namespace {

const std::vector<std::string> kCommonKeys = {"statement", "function", "grid", "resolution", "dt",
                                              "paths",     "seed",     "threads", "out"};

// Statement-specific keys and their defaults.
struct StatementDefaults {
  std::map<std::string, std::string> values;
};

const std::map<std::string, StatementDefaults>& defaults_table() {
  static const std::map<std::string, StatementDefaults> table = {
      {"vdcorput", {{{"grid", "geom:1e-5:1e-2:25"}, {"resolution", "2097152"}, {"k", "2,3,4"}}}},
      {"carbery",
       {{{"grid", "geom:1e-3:1e-1:17"}, {"resolution", "512"}, {"a", "0.5,0.5"}, {"lambdas", "0.1,10"}}}},
      {"prop2", {{{"function", "radial_extremal:n=2"}, {"grid", "0.25,0.5,1"}, {"resolution", "512"}}}},
      {"prop4",
       {{{"function", "radial_extremal:n=2"}, {"grid", "0.5,1"}, {"resolution", "512"}, {"y", "0,0;0.1,0.2;-0.3,0.1"}}}},
      {"thm2",
       {{{"function", "radial_extremal:n=2"},
         {"grid", "geom:1e-4:1e-2:9"},
         {"resolution", "512"},
         {"dt", "1e-6"},
         {"paths", "2000"},
         {"alpha", "1"},
         {"lemma7_band", "0,2"}}}},
      {"thm3",
       {{{"function", "radial_extremal:n=2;harmonic_probe:A=0.1,m=3;harmonic_probe:A=1,m=3;harmonic_probe:A=10,m=3"},
         {"grid", "0.01,0.05,0.1,0.2"},
         {"resolution", "256"}}}},
      {"lemma5", {{{"function", "catalog"}, {"dt", "1e-4"}, {"paths", "2000"}}}},
      {"lemma6", {{{"function", "catalog"}, {"dt", "1e-4"}, {"paths", "2000"}}}},
      {"lemma7",
       {{{"grid", "1e-4,4e-4"}, {"resolution", "512"}, {"paths", "1000000"}, {"counts", "0,25,50,100,200"}}}},
      {"champagne",
       {{{"grid", "4e-4"},
         {"resolution", "256"},
         {"dt", "1e-3"},
         {"paths", "500"},
         {"counts", "0,25,50,100,200"},
         {"bubble_radius", "0.02"}}}},
      {"coarea-check",
       {{{"function", "sum_sq;harmonic_probe:A=0.1,m=3"}, {"resolution", "512"}, {"box", "-1,1"}, {"n_levels", "4000"}}}},
      {"fk-check",
       {{{"function", "catalog;constant:value=1.5,n=2;coordinate:n=2,axis=0"},
         {"resolution", "64"},
         {"dt", "2e-3"},
         {"paths", "10000"},
         {"exit_dt", "8e-3"},
         {"exit_paths", "100000"}}}},
  };
  return table;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad(const Setting& s, const std::string& key, const std::string& what) {
  throw ConfigError(s.origin + ": " + key + ": " + what + " (got '" + s.value + "')");
}

double to_double(const Setting& s, const std::string& key) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s.value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (s.value.empty() || used != s.value.size() || !std::isfinite(v)) bad(s, key, "expected a number");
  return v;
}

std::uint64_t to_uint(const Setting& s, const std::string& key) {
  if (s.value.empty() || !std::all_of(s.value.begin(), s.value.end(), [](unsigned char c) { return std::isdigit(c); }))
    bad(s, key, "expected a nonnegative integer");
  try {
    return std::stoull(s.value);
  } catch (const std::exception&) {
    bad(s, key, "integer out of range");
  }
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

std::vector<double> number_list(const std::string& s) {
  std::vector<double> out;
  for (const auto& item : split(s, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (item.empty() || used != item.size()) throw std::invalid_argument("bad number '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument("empty list");
  return out;
}

std::vector<AnalyticTestFunction> function_list(const std::string& spec) {
  std::vector<AnalyticTestFunction> out;
  for (const auto& item : split(spec, ';')) {
    if (item == "catalog") {
      for (auto& f : field::builtin_catalog())
        if (f.dim() == 2) out.push_back(std::move(f));
    } else {
      out.push_back(field::parse_function(item));
    }
  }
  if (out.empty()) throw std::invalid_argument("empty function list");
  return out;
}

std::vector<experiments::Vec2> point_list(const std::string& s) {
  std::vector<experiments::Vec2> out;
  for (const auto& item : split(s, ';')) {
    const auto v = number_list(item);
    if (v.size() != 2) throw std::invalid_argument("point '" + item + "' needs two coordinates");
    out.push_back({v[0], v[1]});
  }
  return out;
}

std::string extra(const ExperimentConfig& cfg, const std::string& key) {
  const auto it = cfg.extra.find(key);
  if (it == cfg.extra.end()) throw std::logic_error("runner: missing resolved key " + key);
  return it->second;
}

// Rows, fits and notes concatenated; metrics prefixed with `prefixes[i]`.
VerificationReport merge(const std::string& statement, const std::vector<VerificationReport>& parts,
                         const std::vector<std::string>& prefixes) {
  VerificationReport r;
  r.statement = statement;
  r.pass = !parts.empty();
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto& p = parts[i];
    r.rows.insert(r.rows.end(), p.rows.begin(), p.rows.end());
    r.fits.insert(r.fits.end(), p.fits.begin(), p.fits.end());
    for (const auto& [k, v] : p.metrics) r.metrics[prefixes[i] + k] = v;
    for (const auto& n : p.notes) r.notes.push_back(prefixes[i] + n);
    r.pass = r.pass && p.pass;
  }
  return r;
}

stochastic::WalkConfig walk_of(const ExperimentConfig& cfg) {
  stochastic::WalkConfig w;
  w.dt = cfg.dt;
  w.n_paths = cfg.paths;
  w.seed = cfg.seed;
  w.threads = cfg.threads;
  return w;
}

experiments::ChampagneOptions champagne_options(const ExperimentConfig& cfg) {
  experiments::ChampagneOptions o;
  o.counts.clear();
  for (double c : number_list(extra(cfg, "counts"))) o.counts.push_back(static_cast<int>(c));
  o.eps = parse_grid(cfg.grid);
  o.resolution = cfg.resolution;
  o.walk.n_paths = 0;
  o.walk.seed = cfg.seed;
  o.walk.threads = cfg.threads;
  return o;
}

}  // namespace

const char* version() { return SUBLEVEL_VERSION; }

const std::vector<StatementInfo>& list_statements() {
  static const std::vector<StatementInfo> list = {
      {"vdcorput", "van der Corput lemma: |{|u| <= t}| <~_k t^{1/k} in one dimension"},
      {"carbery", "Theorem 1: |{u <= s}| <~_n s^{n/2} for convex u with det D^2 u >= 1"},
      {"prop2", "Proposition 2: osc over a radius-r ball >= r^2/(2n) when Delta u >= 1"},
      {"prop4", "Proposition 4: max over the sphere >= (r^2 - |y|^2)/(2n) + u(y)"},
      {"thm2", "Theorem 2: |{|u| <= eps}| <~_c sqrt(eps) + (2 eps)^{alpha-1/2} int |grad u|/|u|^alpha"},
      {"thm3", "Theorem 3: |{|u| >= c_n}| sup|u| >= c_n when Delta u >= 1"},
      {"lemma5", "Lemma 5: depth of a small component bounded by its boundary length squared"},
      {"lemma6", "Lemma 6: expected exit time bounded by the oscillation of u"},
      {"lemma7", "Lemma 7: heat content <~ sqrt(eps) |boundary|, with the reflection principle"},
      {"champagne", "Champagne domains: uniform exit-time bound with many small holes"},
      {"coarea-check", "Coarea formula: int of level-set length equals int |grad u|"},
      {"fk-check", "Feynman-Kac representation of u and of the mean exit time"},
  };
  return list;
}

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k = kCommonKeys;
    for (const auto& [id, d] : defaults_table())
      for (const auto& [key, v] : d.values)
        if (std::find(k.begin(), k.end(), key) == k.end()) k.push_back(key);
    return k;
  }();
  return keys;
}

Settings parse_config_text(const std::string& text, const std::string& source) {
  Settings out;
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    const std::string anchor = source + ":" + std::to_string(n);
    const auto hash = line.find('#');
    const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError(anchor + ": expected 'key = value'");
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (key.empty()) throw ConfigError(anchor + ": empty key");
    if (std::find(known_keys().begin(), known_keys().end(), key) == known_keys().end())
      throw ConfigError(anchor + ": unknown key '" + key + "'");
    if (out.count(key)) throw ConfigError(anchor + ": duplicate key '" + key + "' (first at " + out[key].origin + ")");
    out[key] = {value, anchor};
  }
  return out;
}

Settings parse_config_file(const std::filesystem::path& path) {
  std::string text;
  try {
    text = report::read_file(path);
  } catch (const std::exception& e) {
    throw ConfigError(path.string() + ":0: " + e.what());
  }
  return parse_config_text(text, path.string());
}

Settings settings_from_env() {
  Settings out;
  for (const auto& key : known_keys()) {
    std::string name = "SUBLEVEL_";
    for (char c : key) name += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (const char* v = std::getenv(name.c_str())) out[key] = {v, "env " + name};
  }
  return out;
}

std::vector<double> parse_grid(const std::string& spec) {
  if (spec.rfind("geom:", 0) == 0) {
    const auto parts = split(spec.substr(5), ':');
    if (parts.size() != 3) throw std::invalid_argument("geometric grid needs geom:LO:HI:N");
    const auto lo = number_list(parts[0]), hi = number_list(parts[1]), n = number_list(parts[2]);
    if (n[0] < 1 || n[0] != std::floor(n[0])) throw std::invalid_argument("grid point count must be a positive integer");
    return experiments::geometric_points(lo[0], hi[0], static_cast<int>(n[0]));
  }
  return number_list(spec);
}

ExperimentConfig resolve(const Settings& file, const Settings& env, const Settings& cli) {
  Settings merged = file;
  for (const auto& layer : {&env, &cli})
    for (const auto& [k, v] : *layer) merged[k] = v;
  for (const auto& [k, v] : merged)
    if (std::find(known_keys().begin(), known_keys().end(), k) == known_keys().end())
      throw ConfigError(v.origin + ": unknown key '" + k + "'");

  const auto st = merged.find("statement");
  if (st == merged.end() || st->second.value.empty()) throw ConfigError("config: statement is required");
  const auto table = defaults_table().find(st->second.value);
  if (table == defaults_table().end()) bad(st->second, "statement", "unknown statement id");

  ExperimentConfig cfg;
  cfg.statement = st->second.value;
  Settings all;
  all["seed"] = {"1", "default"};
  all["threads"] = {"0", "default"};
  all["out"] = {".", "default"};
  for (const auto& [k, v] : table->second.values) all[k] = {v, "default"};
  for (const auto& [k, v] : merged) {
    const bool common = std::find(kCommonKeys.begin(), kCommonKeys.end(), k) != kCommonKeys.end();
    if (!common && !table->second.values.count(k)) bad(v, k, "key does not apply to statement " + cfg.statement);
    all[k] = v;
  }
  cfg.resolved = all;

  for (const auto& [k, s] : all) {
    try {
      if (k == "statement") {
      } else if (k == "function") {
        function_list(s.value);
        cfg.function = s.value;
      } else if (k == "grid") {
        parse_grid(s.value);
        cfg.grid = s.value;
      } else if (k == "resolution") {
        cfg.resolution = to_uint(s, k);
        if (cfg.resolution < 8) bad(s, k, "must be at least 8");
      } else if (k == "dt") {
        cfg.dt = to_double(s, k);
        if (!(cfg.dt > 0.0)) bad(s, k, "must be positive");
      } else if (k == "paths") {
        cfg.paths = to_uint(s, k);
      } else if (k == "seed") {
        cfg.seed = to_uint(s, k);
      } else if (k == "threads") {
        cfg.threads = static_cast<unsigned>(to_uint(s, k));
      } else if (k == "out") {
        if (s.value.empty()) bad(s, k, "empty path");
        cfg.out = s.value;
      } else if (k == "y") {
        point_list(s.value);
        cfg.extra[k] = s.value;
      } else if (k == "alpha" || k == "bubble_radius" || k == "exit_dt") {
        if (!(to_double(s, k) > 0.0)) bad(s, k, "must be positive");
        cfg.extra[k] = s.value;
      } else if (k == "exit_paths" || k == "n_levels") {
        to_uint(s, k);
        cfg.extra[k] = s.value;
      } else {
        const auto v = number_list(s.value);
        if ((k == "lemma7_band" || k == "box") && (v.size() != 2 || !(v[0] < v[1]))) bad(s, k, "expected LO,HI");
        cfg.extra[k] = s.value;
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      bad(s, k, e.what());
    }
  }
  return cfg;
}

VerificationReport execute(const ExperimentConfig& cfg) {
  namespace ex = experiments;
  const std::string& id = cfg.statement;
  const auto walk = walk_of(cfg);

  if (id == "vdcorput") {
    std::vector<VerificationReport> parts;
    std::vector<std::string> prefixes;
    for (double k : number_list(extra(cfg, "k"))) {
      parts.push_back(ex::verify_vdcorput(static_cast<int>(k), parse_grid(cfg.grid), cfg.resolution));
      prefixes.push_back("k=" + format_number(k) + ".");
    }
    return merge(id, parts, prefixes);
  }
  if (id == "carbery") {
    ex::CarberyOptions o;
    o.resolution = cfg.resolution;
    o.lambdas = number_list(extra(cfg, "lambdas"));
    return ex::verify_carbery(number_list(extra(cfg, "a")), parse_grid(cfg.grid), o);
  }
  if (id == "prop2" || id == "prop4") {
    const auto f = field::parse_function(cfg.function);
    const std::vector<ex::Vec2> ys = id == "prop4" ? point_list(extra(cfg, "y")) : std::vector<ex::Vec2>{};
    auto r = ex::verify_prop2_prop4(f, parse_grid(cfg.grid), ys, cfg.resolution);
    r.statement = id;
    return r;
  }
  if (id == "thm2") {
    ex::Thm2Options o;
    o.alpha = std::stod(extra(cfg, "alpha"));
    o.resolution = cfg.resolution;
    o.walk = walk;
    const auto band = number_list(extra(cfg, "lemma7_band"));
    o.lemma7_lo = band[0];
    o.lemma7_hi = band[1];
    return ex::verify_thm2(field::parse_function(cfg.function), parse_grid(cfg.grid), o).report;
  }
  if (id == "thm3") {
    ex::Thm3Options o;
    o.resolution = cfg.resolution;
    return ex::verify_thm3(function_list(cfg.function), parse_grid(cfg.grid), o);
  }
  if (id == "lemma5") return ex::verify_lemma5(function_list(cfg.function), walk);
  if (id == "lemma6") return ex::verify_lemma6(function_list(cfg.function), walk);
  if (id == "lemma7") {
    ex::ChampagneSpec spec;
    spec.seed = cfg.seed;
    return merge(id,
                 {ex::verify_reflection(cfg.paths, cfg.seed, cfg.threads),
                  ex::verify_champagne(spec, champagne_options(cfg))},
                 {"reflection.", "heat."});
  }
  if (id == "champagne") {
    ex::ChampagneSpec spec;
    spec.seed = cfg.seed;
    spec.bubble_radius = std::stod(extra(cfg, "bubble_radius"));
    auto o = champagne_options(cfg);
    o.walk = walk;
    o.walk_resolution = cfg.resolution;
    return ex::verify_champagne(spec, o);
  }
  if (id == "coarea-check") {
    const auto box = number_list(extra(cfg, "box"));
    const int levels = std::stoi(extra(cfg, "n_levels"));
    std::vector<VerificationReport> parts;
    std::vector<std::string> prefixes;
    for (const auto& f : function_list(cfg.function)) {
      parts.push_back(ex::verify_coarea(f, {box[0], box[1]}, {box[0], box[1]}, cfg.resolution, levels));
      prefixes.push_back(f.id() + ".");
    }
    return merge(id, parts, prefixes);
  }
  if (id == "fk-check") {
    auto exit_walk = walk;
    exit_walk.dt = std::stod(extra(cfg, "exit_dt"));
    exit_walk.n_paths = std::stoull(extra(cfg, "exit_paths"));
    return merge(id,
                 {ex::verify_fk(function_list(cfg.function), ex::standard_fk_cases(cfg.resolution), walk),
                  ex::verify_exit_time(exit_walk)},
                 {"", "exit."});
  }
  throw std::logic_error("runner: no harness for " + id);
}

RunOutcome run(const ExperimentConfig& cfg) {
  using json = nlohmann::ordered_json;
  RunOutcome out;
  const auto t0 = std::chrono::steady_clock::now();
  out.report = execute(cfg);
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.status = out.report.pass ? 0 : 1;

  std::filesystem::create_directories(cfg.out);
  const std::string stem = cfg.statement + "-seed" + std::to_string(cfg.seed);
  out.report_path = cfg.out / (stem + ".report.json");
  out.rows_path = cfg.out / (stem + ".rows.csv");
  out.manifest_path = cfg.out / (stem + ".manifest.json");
  report::write_atomic(out.report_path, report::to_json(out.report));
  report::write_atomic(out.rows_path, report::to_csv(out.report));

  json m;
  m["artifact"] = "sublevel";
  m["version"] = version();
  m["statement"] = cfg.statement;
  json resolved = json::object();
  json origins = json::object();
  for (const auto& [k, s] : cfg.resolved) {
    resolved[k] = s.value;
    origins[k] = s.origin;
  }
  m["config"] = std::move(resolved);
  m["origins"] = std::move(origins);
  m["pass"] = out.report.pass;
  m["status"] = out.status;
  m["wall_seconds"] = out.wall_seconds;
  m["files"] = {out.report_path.filename().string(), out.rows_path.filename().string()};
  report::write_atomic(out.manifest_path, m.dump(2) + "\n");
  return out;
}

}  // namespace sublevel::runner
