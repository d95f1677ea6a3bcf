#pragma once

// Experiment configuration: a typed key schema per experiment kind, loaded
// from an INI file (sections of key = value) and overridden from the command
// line. Every key has a default; unknown keys and malformed values are usage
// errors that name the key and, for files, the line.

#include <algorithm>
#include <array>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pdectl/errors.hpp"
#include "json.hpp"

namespace pdectl {

enum class KeyType { Integer, Number, Boolean, Text, Pair, NumberOrAuto, IntegerOrAuto, Choice };

struct ConfigKey {
  std::string name;  // section.key
  KeyType type = KeyType::Text;
  std::string def;
  std::string help;
  std::vector<std::string> choices;
};

inline const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds{
      "verify-identity", "stoch-identity", "null-control", "exact-control", "semilinear-control", "observability",
      "lr-constant",     "stabilize",      "stoch-heat",   "geometry",      "kalman"};
  return kinds;
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline std::optional<double> parse_double(const std::string& s) {
  const std::string t = trim(s);
  double v = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) return std::nullopt;
  return v;
}

inline std::optional<long long> parse_int(const std::string& s) {
  const std::string t = trim(s);
  long long v = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) return std::nullopt;
  return v;
}

inline std::optional<bool> parse_bool(const std::string& s) {
  const std::string t = trim(s);
  if (t == "true" || t == "yes" || t == "on" || t == "1") return true;
  if (t == "false" || t == "no" || t == "off" || t == "0") return false;
  return std::nullopt;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

inline void add_keys(std::vector<ConfigKey>& v, std::initializer_list<ConfigKey> keys) { v.insert(v.end(), keys); }

inline void grid_keys(std::vector<ConfigKey>& v, const std::string& n, const std::string& T, const std::string& steps,
                      bool two_d, KeyType t_type = KeyType::Number, KeyType s_type = KeyType::Integer) {
  if (two_d) add_keys(v, {{"grid.dim", KeyType::Integer, "1", "space dimension (1 or 2)"}});
  add_keys(v, {{"grid.n", KeyType::Integer, n, "interior points along x"}});
  if (two_d) add_keys(v, {{"grid.ny", KeyType::Integer, "0", "interior points along y (0: same as grid.n)"}});
  add_keys(v, {{"grid.T", t_type, T, "time horizon"},
               {"grid.steps", s_type, steps, "number of time steps"},
               {"grid.lx", KeyType::Number, "1", "domain length along x"}});
  if (two_d) add_keys(v, {{"grid.ly", KeyType::Number, "1", "domain length along y"}});
}

inline void data_keys(std::vector<ConfigKey>& v, const std::string& amplitude = "1",
                      KeyType amp_type = KeyType::Number) {
  add_keys(v, {{"data.y0", KeyType::Choice, "mode", "initial state shape", {"mode", "pulse", "zero"}},
               {"data.mode", KeyType::Integer, "1", "sine mode index for data.y0 = mode"},
               {"data.amplitude", amp_type, amplitude, "amplitude of the initial state"}});
}

}  // namespace detail

/// Schema for one experiment kind, in report order.
inline std::vector<ConfigKey> config_schema(const std::string& kind) {
  using detail::add_keys;
  std::vector<ConfigKey> v;
  add_keys(v, {{"run.seed", KeyType::Integer, "0", "global 64-bit seed"},
               {"output.json", KeyType::Text, "", "JSON report path ('-' for stdout, empty: none)"},
               {"output.csv", KeyType::Text, "", "CSV artifact path (empty: none)"},
               {"output.dump_every", KeyType::Integer, "0", "write every K-th trajectory snapshot (0: off)"},
               {"output.trajectory", KeyType::Text, "trajectory.csv", "trajectory CSV path"},
               {"output.snapshot", KeyType::Text, "", "binary snapshot path (empty: none)"}});
  const auto power = [&v] {
    add_keys(v, {{"power.rel_tol", KeyType::Number, "1e-6", "power iteration eigenvalue tolerance"},
                 {"power.delta_rel", KeyType::Number, "1e-12", "observation Gram regularization / (trace/dim)"},
                 {"power.max_iter", KeyType::Integer, "100000", "power iteration limit"}});
  };
  if (kind == "verify-identity") {
    add_keys(v, {{"identity.kind", KeyType::Choice, "ode", "identity family",
                  {"ode", "multiplier", "deterministic", "stoch_parabolic_drift", "stoch_hyperbolic_drift"}},
                 {"identity.instances", KeyType::Integer, "10", "random instances"},
                 {"identity.points", KeyType::Integer, "100", "sample points per instance"},
                 {"identity.tol", KeyType::Number, "1e-10", "relative residual tolerance"},
                 {"identity.stoch_steps", KeyType::Integer, "512", "time steps of stochastic instances"},
                 {"output.dump_instance", KeyType::Text, "", "write the first instance as polynomial text"}});
  } else if (kind == "stoch-identity") {
    add_keys(v, {{"identity.equation", KeyType::Choice, "parabolic", "stochastic identity", {"parabolic", "hyperbolic"}},
                 {"identity.noisy", KeyType::Boolean, "false", "noise shape x(1-x) instead of drift only"},
                 {"identity.paths", KeyType::Integer, "256", "Brownian paths (noisy mode)"},
                 {"identity.coarse_steps", KeyType::Integer, "64", "time steps on the coarsest grid"},
                 {"identity.halvings", KeyType::Integer, "3", "number of dt halvings"},
                 {"identity.x", KeyType::Number, "0.4", "spatial sample point"},
                 {"checks.min_slope", KeyType::NumberOrAuto, "auto",
                  "required log2 slope (auto: 0.9 per halving drift-only, 0.4 fitted when noisy)"}});
  } else if (kind == "null-control") {
    detail::grid_keys(v, "100", "0.5", "100", true);
    add_keys(v, {{"coef.p", KeyType::Number, "1", "principal coefficient p (constant)"},
                 {"coef.a", KeyType::Number, "0", "potential"},
                 {"control.omega", KeyType::Pair, "0.3,0.6", "control interval along x"},
                 {"control.omega_y", KeyType::Pair, "0,1", "control interval along y (2D)"}});
    detail::data_keys(v);
    add_keys(v, {{"solver.epsilon", KeyType::Number, "1e-8", "penalization"},
                 {"solver.cg_tol", KeyType::Number, "1e-8", "CG relative tolerance"},
                 {"solver.max_iter", KeyType::Integer, "500", "CG iteration limit"},
                 {"checks.max_relative_residual", KeyType::Number, "1e-3", "bound on |y(T)| / |y0|"}});
  } else if (kind == "exact-control") {
    detail::grid_keys(v, "100", "2.5", "500", false);
    add_keys(v, {{"coef.p", KeyType::Number, "1", "principal coefficient p (constant)"},
                 {"geometry.x0", KeyType::Number, "-0.1", "multiplier centre"},
                 {"geometry.eps", KeyType::Number, "0.15", "collar width around the observed boundary"}});
    detail::data_keys(v);
    add_keys(v, {{"data.y1", KeyType::Choice, "zero", "initial velocity shape", {"mode", "pulse", "zero"}},
                 {"solver.cg_tol", KeyType::Number, "1e-3", "CG relative tolerance"},
                 {"solver.max_iter", KeyType::Integer, "500", "CG iteration limit"},
                 {"checks.max_relative_residual", KeyType::Number, "1e-2", "bound on the energy-norm miss"}});
  } else if (kind == "semilinear-control") {
    detail::grid_keys(v, "100", "0.4", "400", false);
    add_keys(v, {{"coef.p", KeyType::Number, "1", "principal coefficient p (constant)"},
                 {"coef.a", KeyType::Number, "0", "potential"},
                 {"nonlinearity.r", KeyType::Number, "1.2", "log exponent r in f(s) = sign s ln^r(1+|s|)"},
                 {"nonlinearity.sign", KeyType::Integer, "-1", "sign of f (-1: blow-up capable)"},
                 {"control.omega", KeyType::Pair, "0.3,0.6", "control interval"}});
    detail::data_keys(v, "auto", KeyType::NumberOrAuto);
    v.back().help = "amplitude of the initial state (auto: threshold_factor times the bisected blow-up threshold)";
    add_keys(v, {{"data.threshold_factor", KeyType::Number, "1.05", "amplitude / blow-up threshold when auto"},
                 {"data.search_lo", KeyType::Number, "1e3", "threshold bracket, low end"},
                 {"data.search_hi", KeyType::Number, "1e8", "threshold bracket, high end"},
                 {"solver.epsilon", KeyType::Number, "1e-8", "penalization"},
                 {"solver.cg_tol", KeyType::Number, "1e-8", "CG relative tolerance"},
                 {"solver.max_iter", KeyType::Integer, "500", "CG iteration limit"},
                 {"solver.outer_tol", KeyType::Number, "1e-6", "fixed-point tolerance"},
                 {"solver.max_outer", KeyType::Integer, "20", "fixed-point iteration limit"},
                 {"checks.max_relative_residual", KeyType::Number, "1e-2", "bound on |y(T)| / |y0|"},
                 {"checks.require_blowup", KeyType::Boolean, "true", "uncontrolled run must blow up"}});
  } else if (kind == "observability") {
    detail::grid_keys(v, "50", "auto", "auto", true, KeyType::NumberOrAuto, KeyType::IntegerOrAuto);
    for (auto& k : v) {
      if (k.name == "grid.T") k.help = "time horizon (auto: 0.5 heat, 3 wave)";
      if (k.name == "grid.steps") k.help = "number of time steps (auto: ceil(10 sqrt(T) / h) heat, ceil(T / h) wave)";
    }
    add_keys(v, {{"coef.p", KeyType::Number, "1", "principal coefficient p (constant)"},
                 {"coef.a", KeyType::Number, "0", "potential"},
                 {"observability.equation", KeyType::Choice, "heat", "equation", {"heat", "wave"}},
                 {"observability.mode", KeyType::Choice, "auto", "heat: terminal|initial, wave: interior|boundary (auto: terminal, interior)",
                  {"auto", "terminal", "initial", "interior", "boundary"}},
                 {"observability.filter", KeyType::Number, "0.5", "wave: keep frequencies <= filter * max"},
                 {"observability.sweep", KeyType::Text, "", "key=v1,v2,... one CSV row per value; separate with ';' for pair keys"},
                 {"control.omega", KeyType::Pair, "0.3,0.6", "heat observation interval along x"},
                 {"control.omega_y", KeyType::Pair, "0,1", "heat observation interval along y (2D)"},
                 {"geometry.x0", KeyType::Number, "-0.1", "wave: multiplier centre"},
                 {"geometry.eps", KeyType::Number, "0.15", "wave: collar width"}});
    power();
  } else if (kind == "lr-constant") {
    add_keys(v, {{"lr.omega", KeyType::Pair, "0.2,0.4", "observation interval"},
                 {"lr.modes", KeyType::Integer, "40", "largest mode count"},
                 {"lr.min_modes", KeyType::Integer, "2", "smallest mode count in the sweep"},
                 {"checks.min_r_squared", KeyType::Number, "0.95", "fit quality of log C against sqrt(r)"}});
  } else if (kind == "stabilize") {
    detail::grid_keys(v, "99", "10", "1000", false);
    add_keys(v, {{"coef.p", KeyType::Number, "1", "principal coefficient p (constant)"},
                 {"stabilization.damping", KeyType::Choice, "boundary", "damping type", {"boundary", "local"}},
                 {"stabilization.gain", KeyType::Number, "1", "boundary gain a at x = L"},
                 {"stabilization.b", KeyType::Pair, "0.6,1", "local damping support (indicator)"},
                 {"stabilization.c0", KeyType::Number, "1", "local damping strength"},
                 {"stabilization.q", KeyType::Number, "0", "nonlinearity |u|^(q-1) u (0: linear)"}});
    detail::data_keys(v);
    add_keys(v, {{"checks.min_r_squared", KeyType::Number, "0.95", "local damping: exponential fit quality"},
                 {"checks.extinction_after", KeyType::NumberOrAuto, "auto",
                  "time after which E <= extinction_level E(0) is required (auto: not checked)"},
                 {"checks.extinction_level", KeyType::Number, "1e-6", "relative energy level"}});
  } else if (kind == "stoch-heat") {
    detail::grid_keys(v, "99", "0.5", "500", false);
    add_keys(v, {{"coef.p", KeyType::Number, "1", "principal coefficient p (constant)"},
                 {"coef.a", KeyType::Number, "0", "potential"},
                 {"coef.c", KeyType::Number, "0.5", "multiplicative noise gain"}});
    detail::data_keys(v);
    add_keys(v, {{"stoch.paths", KeyType::Integer, "1024", "Monte Carlo paths"},
                 {"stoch.record_every", KeyType::Integer, "50", "moment series sampling (steps)"},
                 {"checks.max_moment_error", KeyType::Number, "0.05", "relative error of E|z(T)|^2 vs modal law"}});
  } else if (kind == "geometry") {
    add_keys(v, {{"geometry.dim", KeyType::Integer, "1", "space dimension"},
                 {"geometry.lo", KeyType::Text, "0", "lower corner (comma list)"},
                 {"geometry.hi", KeyType::Text, "1", "upper corner (comma list)"},
                 {"geometry.x0", KeyType::Text, "-0.1", "multiplier centre (comma list)"},
                 {"geometry.eps", KeyType::Number, "0.15", "collar width"},
                 {"geometry.T", KeyType::Number, "2.5", "time horizon"},
                 {"geometry.p", KeyType::Number, "1", "isotropic principal coefficient for the multiplier conditions"}});
  } else if (kind == "kalman") {
    add_keys(v, {{"kalman.systems", KeyType::Integer, "100", "random systems"},
                 {"kalman.max_n", KeyType::Integer, "5", "largest state dimension"},
                 {"kalman.T", KeyType::Number, "1", "Gramian horizon"},
                 {"kalman.steps", KeyType::Integer, "2000", "RK4 steps for the Gramian"},
                 {"kalman.threshold", KeyType::Number, "1e-8", "lambda_min(W) threshold"}});
  } else {
    throw UsageError("unknown experiment kind '" + kind + "'");
  }
  // Keep each section contiguous, in order of first appearance.
  std::vector<std::string> order;
  for (const auto& k : v) {
    const std::string sec = k.name.substr(0, k.name.find('.'));
    if (std::find(order.begin(), order.end(), sec) == order.end()) order.push_back(sec);
  }
  auto rank = [&order](const ConfigKey& k) {
    return std::find(order.begin(), order.end(), k.name.substr(0, k.name.find('.'))) - order.begin();
  };
  std::stable_sort(v.begin(), v.end(), [&](const ConfigKey& a, const ConfigKey& b) { return rank(a) < rank(b); });
  return v;
}

class Config {
 public:
  explicit Config(std::string kind) : kind_(std::move(kind)), schema_(config_schema(kind_)) {
    for (const auto& k : schema_) values_[k.name] = {k.def, "default"};
  }

  const std::string& kind() const { return kind_; }
  const std::vector<ConfigKey>& schema() const { return schema_; }

  void set(const std::string& name, const std::string& value, const std::string& origin = "command line") {
    const ConfigKey* key = find(name);
    if (!key) throw UsageError(origin + ": unknown key '" + name + "' for experiment '" + kind_ + "'");
    check_value(*key, detail::trim(value), origin);
    values_[name] = {detail::trim(value), origin};
  }

  /// `section.key=value`.
  void set_assignment(const std::string& text, const std::string& origin = "command line") {
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw UsageError(origin + ": expected key=value, got '" + text + "'");
    set(detail::trim(text.substr(0, eq)), text.substr(eq + 1), origin);
  }

  void load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    load_text(buf.str(), path);
  }

  void load_text(const std::string& text, const std::string& origin = "config") {
    boost::property_tree::ptree pt;
    std::istringstream is(text);
    try {
      boost::property_tree::read_ini(is, pt);
    } catch (const boost::property_tree::ini_parser_error& e) {
      throw UsageError(origin + ":" + std::to_string(e.line()) + ": " + e.message());
    }
    for (const auto& [section, body] : pt) {
      if (body.empty()) {
        if (body.data().empty()) continue;  // empty [section]
        throw UsageError(origin + ":" + std::to_string(line_of(text, "", section)) + ": key '" + section +
                         "' must be inside a [section]");
      }
      for (const auto& [key, val] : body) {
        const std::string where = origin + ":" + std::to_string(line_of(text, section, key));
        if (section == "run" && key == "kind") {
          if (detail::trim(val.data()) != kind_)
            throw UsageError(where + ": config is for experiment '" + detail::trim(val.data()) + "', not '" +
                             kind_ + "'");
          continue;
        }
        set(section + "." + key, val.data(), where);
      }
    }
  }

  bool has(const std::string& name) const { return find(name) != nullptr; }

  std::string text(const std::string& name) const { return at(name).value; }

  double number(const std::string& name) const { return *detail::parse_double(at(name).value); }

  long long integer(const std::string& name) const { return *detail::parse_int(at(name).value); }

  bool boolean(const std::string& name) const { return *detail::parse_bool(at(name).value); }

  std::uint64_t seed() const { return static_cast<std::uint64_t>(integer("run.seed")); }

  bool is_auto(const std::string& name) const { return at(name).value == "auto"; }

  std::array<double, 2> pair(const std::string& name) const {
    const auto parts = detail::split(at(name).value, ',');
    return {*detail::parse_double(parts[0]), *detail::parse_double(parts[1])};
  }

  std::vector<double> numbers(const std::string& name) const {
    std::vector<double> out;
    for (const auto& p : detail::split(at(name).value, ',')) {
      const auto v = detail::parse_double(p);
      if (!v) throw UsageError("key '" + name + "': '" + p + "' is not a number");
      out.push_back(*v);
    }
    return out;
  }

  /// Effective configuration grouped by section, in schema order.
  nlohmann::ordered_json echo() const {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& k : schema_) {
      const auto dot = k.name.find('.');
      j[k.name.substr(0, dot)][k.name.substr(dot + 1)] = values_.at(k.name).value;
    }
    return j;
  }

  /// INI text of the effective configuration, with key documentation.
  std::string to_ini() const {
    std::ostringstream os;
    os << "; pdectl " << kind_ << "\n[run]\nkind = " << kind_ << "\n";
    std::string section = "run";
    for (const auto& k : schema_) {
      const auto dot = k.name.find('.');
      const std::string sec = k.name.substr(0, dot);
      if (sec != section) os << "\n[" << sec << "]\n";
      section = sec;
      os << "; " << k.help;
      if (!k.choices.empty()) {
        os << " (";
        for (std::size_t i = 0; i < k.choices.size(); ++i) os << (i ? "|" : "") << k.choices[i];
        os << ")";
      }
      os << "\n" << k.name.substr(dot + 1) << " = " << values_.at(k.name).value << "\n";
    }
    return os.str();
  }

 private:
  struct Entry {
    std::string value;
    std::string origin;
  };

  const ConfigKey* find(const std::string& name) const {
    for (const auto& k : schema_)
      if (k.name == name) return &k;
    return nullptr;
  }

  const Entry& at(const std::string& name) const {
    const auto it = values_.find(name);
    if (it == values_.end()) throw UsageError("internal: key '" + name + "' not in schema for '" + kind_ + "'");
    return it->second;
  }

  static void check_value(const ConfigKey& k, const std::string& v, const std::string& origin) {
    auto bad = [&](const std::string& what) {
      throw UsageError(origin + ": key '" + k.name + "': " + what + ", got '" + v + "'");
    };
    switch (k.type) {
      case KeyType::Integer:
        if (!detail::parse_int(v)) bad("expected an integer");
        break;
      case KeyType::Number:
        if (!detail::parse_double(v)) bad("expected a number");
        break;
      case KeyType::NumberOrAuto:
        if (v != "auto" && !detail::parse_double(v)) bad("expected a number or 'auto'");
        break;
      case KeyType::IntegerOrAuto:
        if (v != "auto" && !detail::parse_int(v)) bad("expected an integer or 'auto'");
        break;
      case KeyType::Boolean:
        if (!detail::parse_bool(v)) bad("expected true or false");
        break;
      case KeyType::Pair: {
        const auto parts = detail::split(v, ',');
        if (parts.size() != 2 || !detail::parse_double(parts[0]) || !detail::parse_double(parts[1]))
          bad("expected two comma-separated numbers");
        break;
      }
      case KeyType::Choice:
        if (std::find(k.choices.begin(), k.choices.end(), v) == k.choices.end()) bad("not an allowed value");
        break;
      case KeyType::Text:
        break;
    }
  }

  /// 1-based line of `key` inside [section] (section "" = before any header).
  static int line_of(const std::string& text, const std::string& section, const std::string& key) {
    std::istringstream is(text);
    std::string line, current;
    int no = 0;
    while (std::getline(is, line)) {
      ++no;
      const std::string t = detail::trim(line);
      if (t.empty() || t[0] == ';' || t[0] == '#') continue;
      if (t.front() == '[' && t.back() == ']') {
        current = detail::trim(t.substr(1, t.size() - 2));
        continue;
      }
      const auto eq = t.find('=');
      if (current == section && eq != std::string::npos && detail::trim(t.substr(0, eq)) == key) return no;
    }
    return 0;
  }

  std::string kind_;
  std::vector<ConfigKey> schema_;
  std::map<std::string, Entry> values_;
};

}  // namespace pdectl
