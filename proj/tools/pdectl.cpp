#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pdectl/runner.hpp"

namespace {

enum Exit { kPass = 0, kFail = 1, kUsage = 2, kError = 3, kIo = 4 };

struct Shortcut {
  std::string flag, key, help;
};

const std::map<std::string, std::vector<Shortcut>>& shortcuts() {
  static const std::map<std::string, std::vector<Shortcut>> m{
      {"verify-identity",
       {{"--kind", "identity.kind", "ode, multiplier, deterministic, stoch_parabolic_drift or stoch_hyperbolic_drift"},
        {"--instances", "identity.instances", "number of random instances"},
        {"--points", "identity.points", "evaluation points per instance"},
        {"--tol", "identity.tol", "relative residual tolerance"},
        {"--dump-instance", "output.dump_instance", "write the first random instance as text"}}},
      {"stoch-identity",
       {{"--equation", "identity.equation", "parabolic or hyperbolic"},
        {"--noisy", "identity.noisy", "true for the noisy mode"},
        {"--paths", "identity.paths", "Monte Carlo paths per level"},
        {"--halvings", "identity.halvings", "number of dt halvings"}}},
      {"null-control", {{"--n", "grid.n", "interior nodes per axis"}, {"--T", "grid.T", "horizon"},
                        {"--epsilon", "solver.epsilon", "penalty parameter"}}},
      {"exact-control", {{"--n", "grid.n", "interior nodes"}, {"--T", "grid.T", "horizon"}}},
      {"semilinear-control", {{"--r", "nonlinearity.r", "log exponent"},
                              {"--amplitude", "data.amplitude", "initial amplitude or auto"}}},
      {"observability",
       {{"--equation", "observability.equation", "heat or wave"},
        {"--mode", "observability.mode", "auto, terminal, initial, interior or boundary"},
        {"--sweep", "observability.sweep", "key=v1,v2,... swept one point at a time"},
        {"--n", "grid.n", "interior nodes per axis"},
        {"--T", "grid.T", "horizon or auto"}}},
      {"lr-constant", {{"--omega", "lr.omega", "observation interval lo,hi"}, {"--modes", "lr.modes", "largest mode count"}}},
      {"stabilize", {{"--damping", "stabilization.damping", "boundary or local"},
                     {"--gain", "stabilization.gain", "boundary feedback gain"}}},
      {"stoch-heat", {{"--paths", "stoch.paths", "Monte Carlo paths"}}},
      {"geometry", {{"--x0", "geometry.x0", "multiplier point, comma-separated"}, {"--T", "geometry.T", "horizon"}}},
      {"kalman", {{"--systems", "kalman.systems", "number of random systems"}}},
  };
  return m;
}

struct Invocation {
  std::string config_path;
  std::string seed, json, csv, dump_every;
  std::vector<std::string> sets;
  std::map<std::string, std::string> shortcut_values;  // key -> value
  bool print_config = false;
  bool quiet = false;
};

void print_summary(const pdectl::RunReport& r, std::ostream& os) {
  for (const auto& c : r.checks)
    os << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << pdectl::shortest(c.value) << " " << c.relation << " "
       << pdectl::shortest(c.threshold) << "\n";
  for (const auto& a : r.artifacts) os << "wrote " << a << "\n";
  os << r.experiment << ": " << (r.pass() ? "pass" : "fail") << " (" << r.checks.size() << " checks, "
     << pdectl::shortest(r.wall_seconds) << " s)\n";
}

int run(const std::string& kind, const Invocation& inv) {
  pdectl::Config cfg(kind);
  if (!inv.config_path.empty()) cfg.load_file(inv.config_path);
  for (const auto& s : inv.sets) cfg.set_assignment(s, "--set");
  for (const auto& [key, value] : inv.shortcut_values) cfg.set(key, value, "command line");
  if (!inv.seed.empty()) cfg.set("run.seed", inv.seed, "--seed");
  if (!inv.json.empty()) cfg.set("output.json", inv.json, "--json");
  if (!inv.csv.empty()) cfg.set("output.csv", inv.csv, "--csv");
  if (!inv.dump_every.empty()) cfg.set("output.dump_every", inv.dump_every, "--dump-every");
  if (inv.print_config) {
    std::cout << cfg.to_ini();
    return kPass;
  }
  const pdectl::RunReport rep = pdectl::run_experiment(cfg);
  const std::string json = cfg.text("output.json");
  if (json == "-") {
    std::cout << pdectl::emit_json(rep);
  } else {
    if (!json.empty()) pdectl::write_file(json, pdectl::emit_json(rep));
    if (!inv.quiet) print_summary(rep, std::cout);
  }
  return rep.pass() ? kPass : kFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pdectl: controllability and stabilization experiments"};
  app.set_version_flag("--version", std::string(pdectl::kVersion));
  app.require_subcommand(1);

  std::map<std::string, Invocation> invs;
  std::map<std::string, CLI::App*> subs;
  for (const auto& kind : pdectl::experiment_kinds()) {
    Invocation& inv = invs[kind];
    CLI::App* sub = app.add_subcommand(kind, "run the " + kind + " experiment");
    subs[kind] = sub;
    sub->add_option("--config", inv.config_path, "INI configuration file");
    sub->add_option("--seed", inv.seed, "global 64-bit seed");
    sub->add_option("--json", inv.json, "write the JSON report here ('-' for stdout)");
    sub->add_option("--csv", inv.csv, "write the module CSV here");
    sub->add_option("--dump-every", inv.dump_every, "export every K-th state snapshot");
    sub->add_option("--set", inv.sets, "override a key: section.key=value (repeatable)");
    sub->add_flag("--print-config", inv.print_config, "print the effective configuration and exit");
    sub->add_flag("-q,--quiet", inv.quiet, "suppress the summary");
    auto it = shortcuts().find(kind);
    if (it != shortcuts().end())
      for (const auto& s : it->second) {
        const std::string key = s.key;
        sub->add_option_function<std::string>(
            s.flag, [&inv, key](const std::string& v) { inv.shortcut_values[key] = v; }, s.help + " (" + key + ")");
      }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kUsage;
  }

  for (const auto& [kind, sub] : subs) {
    if (!sub->parsed()) continue;
    try {
      return run(kind, invs[kind]);
    } catch (const pdectl::UsageError& e) {
      std::cerr << "pdectl " << kind << ": usage error: " << e.what() << "\n";
      return kUsage;
    } catch (const pdectl::IoError& e) {
      std::cerr << "pdectl " << kind << ": I/O error: " << e.what() << "\n";
      return kIo;
    } catch (const pdectl::ArgumentError& e) {
      std::cerr << "pdectl " << kind << ": invalid argument: " << e.what() << "\n";
      return kError;
    } catch (const pdectl::NumericalError& e) {
      std::cerr << "pdectl " << kind << ": numerical failure: " << e.what() << "\n";
      return kError;
    }
  }
  return kUsage;
}
