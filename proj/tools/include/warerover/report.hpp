#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace warerover {

struct ReportRow {
  std::string env;
  std::string method;  // e.g. "TA + A*"
  double sr = 0.0;
  double ct = 0.0;
  double tp = 0.0;
  int runs = 0;
};

// Groups results-CSV rows by environment and method and averages SR/CT/TP.
// Rows come out Ho, He, FT (then any other environment by name), RD before
// TA, A* before CBS. Throws SchemaError naming a missing column, ParseError on
// a malformed row.
std::vector<ReportRow> summarize_results(std::istream& csv);

// Fixed-width table with columns Env, Method, SR, CT, TP, Runs.
std::string format_report(const std::vector<ReportRow>& rows);

inline std::string emit_report(std::istream& csv) { return format_report(summarize_results(csv)); }

}  // namespace warerover
