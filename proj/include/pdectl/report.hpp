#pragma once

// Run reports (JSON, fixed field order) and CSV artifacts. Doubles are written
// in their shortest round-trip decimal form. Timing lives under "timing" only,
// so two runs with the same seed and configuration agree everywhere else.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "pdectl/errors.hpp"
#include "pdectl/format.hpp"
#include "pdectl/grid.hpp"

namespace pdectl {

using Json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "1.0.0";

struct Check {
  std::string name;
  double value = 0.0;
  std::string relation = "<=";  // value <relation> threshold
  double threshold = 0.0;
  bool pass = false;

  static bool holds(double v, const std::string& rel, double t) {
    if (std::isnan(v) || std::isnan(t)) return false;
    if (rel == "<=") return v <= t;
    if (rel == ">=") return v >= t;
    if (rel == "<") return v < t;
    if (rel == ">") return v > t;
    if (rel == "==") return v == t;
    throw ArgumentError("unknown check relation '" + rel + "'");
  }
  bool consistent() const { return pass == holds(value, relation, threshold); }
};

inline Json number(double v) {
  if (std::isfinite(v)) return v;
  return shortest(v);  // "nan", "inf", "-inf"
}

inline double number_from(const Json& j) {
  if (j.is_number()) return j.get<double>();
  const std::string s = j.get<std::string>();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  throw ArgumentError("report: '" + s + "' is not a number");
}

struct RunReport {
  std::string experiment;
  std::string version = kVersion;
  std::uint64_t seed = 0;
  Json config = Json::object();
  Json results = Json::object();
  std::vector<Check> checks;
  std::vector<std::string> artifacts;
  double wall_seconds = 0.0;

  bool pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }

  const Check& check(const std::string& name, double value, const std::string& relation, double threshold) {
    checks.push_back({name, value, relation, threshold, Check::holds(value, relation, threshold)});
    return checks.back();
  }

  Json to_json() const {
    Json j;
    j["tool"] = "pdectl";
    j["version"] = version;
    j["experiment"] = experiment;
    j["seed"] = seed;
    j["config"] = config;
    j["results"] = results;
    Json cs = Json::array();
    for (const auto& c : checks)
      cs.push_back(Json{{"name", c.name},
                        {"value", number(c.value)},
                        {"relation", c.relation},
                        {"threshold", number(c.threshold)},
                        {"pass", c.pass}});
    j["checks"] = cs;
    j["pass"] = pass();
    j["artifacts"] = artifacts;
    j["timing"] = Json{{"wall_seconds", wall_seconds}};
    return j;
  }

  static RunReport from_json(const Json& j) {
    RunReport r;
    r.version = j.at("version").get<std::string>();
    r.experiment = j.at("experiment").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.config = j.at("config");
    r.results = j.at("results");
    for (const auto& c : j.at("checks"))
      r.checks.push_back({c.at("name").get<std::string>(), number_from(c.at("value")),
                          c.at("relation").get<std::string>(), number_from(c.at("threshold")),
                          c.at("pass").get<bool>()});
    r.artifacts = j.at("artifacts").get<std::vector<std::string>>();
    r.wall_seconds = j.at("timing").at("wall_seconds").get<double>();
    return r;
  }
};

inline std::string emit_json(const RunReport& r) { return r.to_json().dump(2) + "\n"; }

inline RunReport parse_report(const std::string& text) {
  try {
    return RunReport::from_json(Json::parse(text));
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(std::string("report: ") + e.what());
  }
}

/// Report without its timing fields, for determinism comparisons.
inline std::string emit_json_untimed(const RunReport& r) {
  Json j = r.to_json();
  j.erase("timing");
  return j.dump(2) + "\n";
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << content;
  out.flush();
  if (!out) throw IoError("write to '" + path + "' failed");
}

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  void row(const std::vector<double>& values) {
    if (values.size() != columns_.size()) throw ArgumentError("csv: row width does not match the header");
    rows_.push_back(values);
  }

  std::size_t size() const { return rows_.size(); }

  std::string str() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < columns_.size(); ++i) os << (i ? "," : "") << columns_[i];
    os << "\n";
    for (const auto& r : rows_) {
      for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << shortest(r[i]);
      os << "\n";
    }
    return os.str();
  }

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<double>> rows_;
};

/// Report checks as CSV: name,value,relation,threshold,pass.
inline std::string emit_checks_csv(const RunReport& r) {
  std::ostringstream os;
  os << "name,value,relation,threshold,pass\n";
  for (const auto& c : r.checks)
    os << c.name << "," << shortest(c.value) << "," << c.relation << "," << shortest(c.threshold) << ","
       << (c.pass ? 1 : 0) << "\n";
  return os.str();
}

/// Long-format trajectory CSV: step,time,node,x[,y],value for every K-th snapshot.
inline std::string trajectory_csv(const Grid& g, const std::vector<Vec>& snaps, int every) {
  require(every >= 1, "trajectory export: dump_every must be >= 1");
  std::ostringstream os;
  os << (g.dim == 1 ? "step,time,node,x,value\n" : "step,time,node,x,y,value\n");
  for (std::size_t k = 0; k < snaps.size(); ++k) {
    if (k % every != 0 && k + 1 != snaps.size()) continue;
    const Vec& s = snaps[k];
    for (int i = 0; i < g.size(); ++i) {
      os << k << "," << shortest(k * g.dt) << "," << i << "," << shortest(g.x(i)) << ",";
      if (g.dim == 2) os << shortest(g.y(i)) << ",";
      os << shortest(i < s.size() ? s[i] : 0.0) << "\n";
    }
  }
  return os.str();
}

/// Binary snapshots: int32 dims, int32 n0, int32 n1, float64 dt, int32 steps,
/// int32 count, then per snapshot int32 step and N float64 values (native
/// byte order, row-major node order).
inline std::string snapshot_binary(const Grid& g, const std::vector<Vec>& snaps, int every) {
  require(every >= 1, "snapshot export: dump_every must be >= 1");
  std::vector<int> keep;
  for (std::size_t k = 0; k < snaps.size(); ++k)
    if (k % every == 0 || k + 1 == snaps.size()) keep.push_back(static_cast<int>(k));
  std::string out;
  auto put = [&out](const auto& v) { out.append(reinterpret_cast<const char*>(&v), sizeof(v)); };
  put(static_cast<std::int32_t>(g.dim));
  put(static_cast<std::int32_t>(g.n[0]));
  put(static_cast<std::int32_t>(g.dim == 2 ? g.n[1] : 1));
  put(g.dt);
  put(static_cast<std::int32_t>(g.steps));
  put(static_cast<std::int32_t>(keep.size()));
  for (int k : keep) {
    put(static_cast<std::int32_t>(k));
    for (int i = 0; i < g.size(); ++i) put(static_cast<double>(snaps[k][i]));
  }
  return out;
}

}  // namespace pdectl
