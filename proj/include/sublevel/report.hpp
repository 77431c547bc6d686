#pragma once

// Report serialization: JSON with a fixed key order, CSV with one row per
// parameter, and the parse-back functions used by round-trip tests.

#include <filesystem>
#include <string>

#include "sublevel/experiments.hpp"

namespace sublevel::report {

using experiments::VerificationReport;

inline constexpr const char* kCsvHeader = "series,parameter,lhs,rhs,ratio,tolerance,pass";

/// Keys: statement, pass, rows, fits, metrics, notes. Non-finite numbers
/// are written as null.
std::string to_json(const VerificationReport& r);
VerificationReport from_json(const std::string& text);

/// Header row plus one LF-terminated line per report row; shortest
/// round-trip decimals; series quoted when it holds a comma or quote.
std::string to_csv(const VerificationReport& r);
/// Rows only; the statement and global flag are not part of the CSV.
VerificationReport from_csv(const std::string& text);

/// Writes to `path.tmp` and renames over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

}  // namespace sublevel::report
