#include "warerover/report.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <istream>
#include <map>
#include <sstream>
#include <tuple>

#include "warerover/engine.hpp"
#include "warerover/errors.hpp"

namespace warerover {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

int rank(const std::string& value, std::initializer_list<const char*> order) {
  int i = 0;
  for (const char* o : order) {
    if (value == o) return i;
    ++i;
  }
  return i;
}

std::string upper(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return s;
}

std::string planner_label(const std::string& p) {
  if (p == "astar") return "A*";
  return upper(p);
}

double to_double(const std::string& text, int line, const std::string& column) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw ParseError("results line " + std::to_string(line) + ": column '" + column + "' is not a number");
  return v;
}

struct Key {
  int env_rank;
  std::string env;
  int sched_rank;
  std::string scheduler;
  int planner_rank;
  std::string planner;
  std::string pattern;

  auto tie() const { return std::tie(env_rank, env, sched_rank, scheduler, planner_rank, planner, pattern); }
  bool operator<(const Key& o) const { return tie() < o.tie(); }
};

struct Sum {
  double sr = 0.0;
  double ct = 0.0;
  double tp = 0.0;
  int n = 0;
};

}  // namespace

std::vector<ReportRow> summarize_results(std::istream& csv) {
  std::string line;
  if (!std::getline(csv, line)) return {};
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const auto& name : split(kResultsHeader)) {
    if (!col.contains(name)) throw SchemaError("results CSV is missing column '" + name + "'");
  }

  std::map<Key, Sum> groups;
  int line_no = 1;
  while (std::getline(csv, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto f = split(line);
    if (f.size() != header.size())
      throw ParseError("results line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                       " fields, got " + std::to_string(f.size()));
    const auto& env = f[col["env"]];
    const auto& sched = f[col["scheduler"]];
    const auto& planner = f[col["planner"]];
    Key key{rank(env, {"Ho", "He", "FT"}), env,     rank(sched, {"rd", "ta"}), sched,
            rank(planner, {"astar", "cbs"}), planner, f[col["pattern"]]};
    Sum& s = groups[key];
    s.sr += to_double(f[col["sr"]], line_no, "sr");
    s.ct += to_double(f[col["ct_ms"]], line_no, "ct_ms");
    s.tp += to_double(f[col["tp"]], line_no, "tp");
    ++s.n;
  }

  std::vector<ReportRow> rows;
  for (const auto& [key, s] : groups) {
    std::string method = upper(key.scheduler) + " + " + planner_label(key.planner);
    if (key.pattern != "os") method += " (" + key.pattern + ")";
    rows.push_back({key.env, method, s.sr / s.n, s.ct / s.n, s.tp / s.n, s.n});
  }
  return rows;
}

std::string format_report(const std::vector<ReportRow>& rows) {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-6s %-20s %8s %12s %8s %6s\n", "Env", "Method", "SR", "CT", "TP", "Runs");
  out += buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-6s %-20s %8.1f %12.2f %8.3f %6d\n", r.env.c_str(), r.method.c_str(), r.sr, r.ct,
                  r.tp, r.runs);
    out += buf;
  }
  return out;
}

}  // namespace warerover
