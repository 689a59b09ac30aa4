#include "sellf/harness/metrics_io.h"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace sellf::harness {

namespace {

constexpr const char* kLeading[] = {
    "run_id", "kind", "index", "seed", "reward_cumulative", "resource",
    "delta_true", "delta_observed", "delta_accepted"};
constexpr const char* kPerGroup[] = {"r", "eps_hat", "eps_bar", "d2",
                                     "phi_tilde"};
constexpr const char* kTrailing[] = {"renyi", "max_weight", "min_cum_accept",
                                     "floor_events", "disparity_ok",
                                     "bias_ok", "wall_clock"};

std::vector<std::string> Columns(int group_count) {
  std::vector<std::string> cols(std::begin(kLeading), std::end(kLeading));
  for (int g = 0; g < group_count; ++g) {
    for (const char* c : kPerGroup) cols.push_back(std::string(c) + "_" + std::to_string(g));
  }
  cols.insert(cols.end(), std::begin(kTrailing), std::end(kTrailing));
  return cols;
}

std::vector<std::string> Split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream s(line);
  while (std::getline(s, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double ParseDouble(const std::string& s, std::size_t line) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw LoadError("metrics line " + std::to_string(line) + ": bad number '" + s + "'");
  }
  return v;
}

std::int64_t ParseInt(const std::string& s, std::size_t line) {
  std::int64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw LoadError("metrics line " + std::to_string(line) + ": bad integer '" + s + "'");
  }
  return v;
}

void CheckText(const std::string& s) {
  if (s.find_first_of(",\n\r") != std::string::npos) {
    throw ConfigError("metrics text field contains a separator: " + s);
  }
}

}  // namespace

std::string FormatDouble(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

MetricsRow FromIteration(const std::string& run_id, std::int64_t seed,
                         const learn::IterationMetrics& m,
                         double reward_cumulative, double wall_clock) {
  MetricsRow row;
  row.run_id = run_id;
  row.kind = "train";
  row.index = m.iteration;
  row.seed = seed;
  row.reward_cumulative = reward_cumulative;
  row.resource = m.resource;
  row.delta_true = m.delta_true;
  row.delta_observed = m.delta_observed;
  row.delta_accepted = m.delta_accepted;
  for (const auto& g : m.groups) {
    row.groups.push_back({g.r, g.eps_hat, g.eps_bar, g.d2, g.phi_tilde});
  }
  row.renyi = m.renyi;
  row.max_weight = m.max_weight;
  row.min_cum_accept = m.min_cum_accept;
  row.floor_events = m.floor_events;
  row.disparity_ok = m.disparity_ok ? 1 : 0;
  row.bias_ok = m.bias_ok ? 1 : 0;
  row.wall_clock = wall_clock;
  return row;
}

void WriteMetricsHeader(std::ostream& out, int group_count) {
  out << kMetricsVersion << ",groups=" << group_count << "\n";
  const auto cols = Columns(group_count);
  for (std::size_t i = 0; i < cols.size(); ++i) {
    out << (i ? "," : "") << cols[i];
  }
  out << "\n";
}

void WriteMetricsRow(std::ostream& out, const MetricsRow& row) {
  CheckText(row.run_id);
  CheckText(row.kind);
  out << row.run_id << ',' << row.kind << ',' << row.index << ',' << row.seed
      << ',' << FormatDouble(row.reward_cumulative) << ','
      << FormatDouble(row.resource) << ','
      << (row.delta_true ? FormatDouble(*row.delta_true) : std::string()) << ','
      << FormatDouble(row.delta_observed) << ','
      << FormatDouble(row.delta_accepted);
  for (const auto& g : row.groups) {
    out << ',' << FormatDouble(g.r) << ',' << FormatDouble(g.eps_hat) << ','
        << FormatDouble(g.eps_bar) << ',' << FormatDouble(g.d2) << ','
        << FormatDouble(g.phi_tilde);
  }
  out << ',' << FormatDouble(row.renyi) << ',' << FormatDouble(row.max_weight)
      << ',' << FormatDouble(row.min_cum_accept) << ',' << row.floor_events
      << ',' << row.disparity_ok << ',' << row.bias_ok << ','
      << FormatDouble(row.wall_clock) << '\n';
}

void WriteMetrics(std::ostream& out, const std::vector<MetricsRow>& rows,
                  int group_count) {
  WriteMetricsHeader(out, group_count);
  for (const auto& row : rows) {
    if (static_cast<int>(row.groups.size()) != group_count) {
      throw ConfigError("metrics row has the wrong number of groups");
    }
    WriteMetricsRow(out, row);
  }
}

std::vector<MetricsRow> ReadMetrics(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw LoadError("empty metrics file");
  const std::string prefix = std::string(kMetricsVersion) + ",groups=";
  if (line.rfind(prefix, 0) != 0) {
    throw LoadError("not a sellf metrics file (version line '" + line + "')");
  }
  const int groups = static_cast<int>(ParseInt(line.substr(prefix.size()), 1));
  if (groups < 1) throw LoadError("metrics file declares no groups");
  const auto cols = Columns(groups);
  if (!std::getline(in, line)) throw LoadError("metrics file lacks a header");
  if (Split(line) != cols) throw LoadError("metrics header does not match v1");

  std::vector<MetricsRow> rows;
  std::size_t lineno = 2;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = Split(line);
    if (f.size() != cols.size()) {
      throw LoadError("metrics line " + std::to_string(lineno) +
                      " has " + std::to_string(f.size()) + " fields, expected " +
                      std::to_string(cols.size()));
    }
    MetricsRow r;
    std::size_t k = 0;
    r.run_id = f[k++];
    r.kind = f[k++];
    r.index = ParseInt(f[k++], lineno);
    r.seed = ParseInt(f[k++], lineno);
    r.reward_cumulative = ParseDouble(f[k++], lineno);
    r.resource = ParseDouble(f[k++], lineno);
    if (!f[k].empty()) r.delta_true = ParseDouble(f[k], lineno);
    ++k;
    r.delta_observed = ParseDouble(f[k++], lineno);
    r.delta_accepted = ParseDouble(f[k++], lineno);
    for (int g = 0; g < groups; ++g) {
      GroupColumns c;
      c.r = ParseDouble(f[k++], lineno);
      c.eps_hat = ParseDouble(f[k++], lineno);
      c.eps_bar = ParseDouble(f[k++], lineno);
      c.d2 = ParseDouble(f[k++], lineno);
      c.phi_tilde = ParseDouble(f[k++], lineno);
      r.groups.push_back(c);
    }
    r.renyi = ParseDouble(f[k++], lineno);
    r.max_weight = ParseDouble(f[k++], lineno);
    r.min_cum_accept = ParseDouble(f[k++], lineno);
    r.floor_events = ParseInt(f[k++], lineno);
    r.disparity_ok = static_cast<int>(ParseInt(f[k++], lineno));
    r.bias_ok = static_cast<int>(ParseInt(f[k++], lineno));
    r.wall_clock = ParseDouble(f[k++], lineno);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<MetricsRow> ReadMetricsFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open metrics file " + path);
  return ReadMetrics(in);
}

}  // namespace sellf::harness
