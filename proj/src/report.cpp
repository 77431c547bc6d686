#include "sublevel/report.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "sublevel/numfmt.hpp"

namespace sublevel::report {

using json = nlohmann::ordered_json;

namespace {

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double number_or_nan(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        out.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else {
      out.back() += c;
    }
  }
  if (quoted) throw std::invalid_argument("csv line " + std::to_string(line_no) + ": unterminated quote");
  return out;
}

double parse_double(const std::string& s, std::size_t line_no) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (s.empty() || used != s.size())
    throw std::invalid_argument("csv line " + std::to_string(line_no) + ": bad number '" + s + "'");
  return v;
}

}  // namespace

std::string to_json(const VerificationReport& r) {
  json j;
  j["statement"] = r.statement;
  j["pass"] = r.pass;
  json rows = json::array();
  for (const auto& row : r.rows) {
    json o;
    o["series"] = row.series;
    o["parameter"] = number(row.parameter);
    o["lhs"] = number(row.lhs);
    o["rhs"] = number(row.rhs);
    o["ratio"] = number(row.ratio);
    o["tolerance"] = number(row.tolerance);
    o["pass"] = row.pass;
    rows.push_back(std::move(o));
  }
  j["rows"] = std::move(rows);
  json fits = json::array();
  for (const auto& f : r.fits) {
    json o;
    o["series"] = f.series;
    o["exponent"] = number(f.fit.exponent);
    o["log_intercept"] = number(f.fit.log_intercept);
    o["r_squared"] = number(f.fit.r_squared);
    o["n_points"] = f.fit.n_points;
    fits.push_back(std::move(o));
  }
  j["fits"] = std::move(fits);
  json metrics = json::object();
  for (const auto& [k, v] : r.metrics) metrics[k] = number(v);
  j["metrics"] = std::move(metrics);
  j["notes"] = r.notes;
  return j.dump(2) + "\n";
}

VerificationReport from_json(const std::string& text) {
  const json j = json::parse(text);
  VerificationReport r;
  r.statement = j.at("statement").get<std::string>();
  r.pass = j.at("pass").get<bool>();
  for (const auto& o : j.at("rows")) {
    r.rows.push_back({o.at("series").get<std::string>(), number_or_nan(o.at("parameter")), number_or_nan(o.at("lhs")),
                      number_or_nan(o.at("rhs")), number_or_nan(o.at("ratio")), number_or_nan(o.at("tolerance")),
                      o.at("pass").get<bool>()});
  }
  for (const auto& o : j.at("fits")) {
    experiments::ScalingFit f;
    f.exponent = number_or_nan(o.at("exponent"));
    f.log_intercept = number_or_nan(o.at("log_intercept"));
    f.r_squared = number_or_nan(o.at("r_squared"));
    f.n_points = o.at("n_points").get<std::size_t>();
    r.fits.push_back({o.at("series").get<std::string>(), f});
  }
  for (const auto& [k, v] : j.at("metrics").items()) r.metrics[k] = number_or_nan(v);
  r.notes = j.at("notes").get<std::vector<std::string>>();
  return r;
}

std::string to_csv(const VerificationReport& r) {
  std::string out = kCsvHeader;
  out += '\n';
  for (const auto& row : r.rows) {
    out += csv_field(row.series);
    for (double v : {row.parameter, row.lhs, row.rhs, row.ratio, row.tolerance}) {
      out += ',';
      out += format_number(v);
    }
    out += row.pass ? ",1\n" : ",0\n";
  }
  return out;
}

VerificationReport from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw std::invalid_argument("csv line 1: unexpected header");
  VerificationReport r;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv_line(line, line_no);
    if (f.size() != 7) throw std::invalid_argument("csv line " + std::to_string(line_no) + ": expected 7 fields");
    if (f[6] != "0" && f[6] != "1")
      throw std::invalid_argument("csv line " + std::to_string(line_no) + ": pass must be 0 or 1");
    r.rows.push_back({f[0], parse_double(f[1], line_no), parse_double(f[2], line_no), parse_double(f[3], line_no),
                      parse_double(f[4], line_no), parse_double(f[5], line_no), f[6] == "1"});
  }
  return r;
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace sublevel::report
