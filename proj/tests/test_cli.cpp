#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "pdectl/runner.hpp"

using namespace pdectl;

namespace {

std::string tmp_path(const std::string& name) { return ::testing::TempDir() + name; }

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string usage_message(Config& c, const std::string& text) {
  try {
    c.load_text(text, "case.ini");
  } catch (const UsageError& e) {
    return e.what();
  }
  return "";
}

int cli(const std::string& args) {
  const std::string cmd = std::string(PDECTL_CLI) + " " + args + " >/dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

}  // namespace

TEST(Config, EveryKindHasDocumentedDefaults) {
  for (const auto& kind : experiment_kinds()) {
    Config c(kind);
    EXPECT_FALSE(c.schema().empty()) << kind;
    for (const auto& k : c.schema()) EXPECT_FALSE(k.help.empty()) << kind << " " << k.name;
    EXPECT_EQ(c.seed(), 0u);
  }
  EXPECT_THROW(Config("nope"), UsageError);
}

TEST(Config, UnknownKeyReportsLineAndKey) {
  Config c("null-control");
  const std::string msg = usage_message(c, "[grid]\nn = 20\n\n[solver]\nbogus = 1\n");
  EXPECT_NE(msg.find("case.ini:5"), std::string::npos) << msg;
  EXPECT_NE(msg.find("solver.bogus"), std::string::npos) << msg;
}

TEST(Config, MalformedValuesRejected) {
  Config c("null-control");
  EXPECT_NE(usage_message(c, "[grid]\nn = twenty\n").find("case.ini:2"), std::string::npos);
  EXPECT_NE(usage_message(c, "[data]\ny0 = square\n").find("data.y0"), std::string::npos);
  EXPECT_NE(usage_message(c, "[control]\nomega = 0.3\n").find("control.omega"), std::string::npos);
  EXPECT_NE(usage_message(c, "n = 3\n").find("[section]"), std::string::npos);
  EXPECT_NE(usage_message(c, "[run]\nkind = kalman\n").find("kalman"), std::string::npos);
  EXPECT_NE(usage_message(c, "[grid\nn = 3\n").find("case.ini:1"), std::string::npos);
  EXPECT_THROW(c.set_assignment("grid.n"), UsageError);
  EXPECT_THROW(c.load_file("/nonexistent/config.ini"), IoError);
}

TEST(Config, PrecedenceAndIniRoundTrip) {
  Config c("stabilize");
  c.load_text("[run]\nkind = stabilize\nseed = 7\n[grid]\nn = 40\nT = 2\n", "file");
  c.set_assignment("grid.n=41");
  EXPECT_EQ(c.integer("grid.n"), 41);
  EXPECT_EQ(c.number("grid.T"), 2.0);
  EXPECT_EQ(c.integer("grid.steps"), 1000);
  EXPECT_EQ(c.seed(), 7u);
  Config d("stabilize");
  d.load_text(c.to_ini(), "echo");
  EXPECT_EQ(d.echo().dump(), c.echo().dump());
  for (const auto& kind : experiment_kinds()) {
    Config e(kind);
    EXPECT_NO_THROW(e.load_text(Config(kind).to_ini(), kind)) << kind;
  }
}

TEST(Report, EmptyReportHasMetadataOnly) {
  RunReport r;
  r.experiment = "kalman";
  const Json j = Json::parse(emit_json(r));
  ASSERT_TRUE(j.is_object());
  EXPECT_EQ(j["tool"], "pdectl");
  EXPECT_EQ(j["version"], kVersion);
  EXPECT_TRUE(j["checks"].empty());
  EXPECT_TRUE(j["pass"].get<bool>());
  std::vector<std::string> keys;
  for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
  EXPECT_EQ(keys, (std::vector<std::string>{"tool", "version", "experiment", "seed", "config", "results", "checks",
                                            "pass", "artifacts", "timing"}));
}

TEST(Report, RoundTripIsExact) {
  RunReport r;
  r.experiment = "null-control";
  r.seed = 18446744073709551615ull;
  r.config = Config("null-control").echo();
  r.results = Json{{"x", 0.1 + 0.2}, {"tiny", 4.9e-324}, {"list", {1.0 / 3.0, -2.5e300}}};
  r.check("a", 1.0 / 3.0, "<=", 0.5);
  r.check("b", std::nan(""), "<=", 1.0);
  r.check("c", INFINITY, ">", 1e308);
  r.artifacts = {"out.csv"};
  r.wall_seconds = 1.25;
  const std::string text = emit_json(r);
  const RunReport back = parse_report(text);
  EXPECT_EQ(emit_json(back), text);
  EXPECT_EQ(back.results["x"].get<double>(), 0.1 + 0.2);
  EXPECT_EQ(back.checks[0].value, 1.0 / 3.0);
  EXPECT_TRUE(std::isnan(back.checks[1].value));
  EXPECT_THROW(parse_report("{\"version\": 1}"), ArgumentError);
}

TEST(Report, PassFlagsConsistentWithThresholds) {
  RunReport r;
  EXPECT_TRUE(r.check("le", 1.0, "<=", 1.0).pass);
  EXPECT_FALSE(r.check("lt", 1.0, "<", 1.0).pass);
  EXPECT_TRUE(r.check("ge", 2.0, ">=", 1.0).pass);
  EXPECT_FALSE(r.check("nan", NAN, ">=", 1.0).pass);
  EXPECT_FALSE(r.check("eq", 0.0, "==", 1.0).pass);
  for (const auto& c : r.checks) EXPECT_TRUE(c.consistent()) << c.name;
  EXPECT_FALSE(r.pass());
  EXPECT_THROW(r.check("bad", 0.0, "~", 1.0), ArgumentError);
}

TEST(Report, UnwritablePathIsIoError) {
  EXPECT_THROW(write_file("/nonexistent/dir/report.json", "{}"), IoError);
}

TEST(Report, CsvWriters) {
  CsvTable t({"a", "b"});
  t.row({1.0, 0.1});
  EXPECT_THROW(t.row({1.0}), ArgumentError);
  EXPECT_EQ(t.str(), "a,b\n1,0.1\n");

  const Grid g = Grid::line(3, 1.0, 4);
  std::vector<Vec> snaps(5, Vec::Ones(3));
  const std::string csv = trajectory_csv(g, snaps, 3);
  std::istringstream is(csv);
  std::string line;
  int rows = 0;
  std::getline(is, line);
  EXPECT_EQ(line, "step,time,node,x,value");
  while (std::getline(is, line)) ++rows;
  EXPECT_EQ(rows, 3 * 3);  // snapshots 0, 3 and the last
  const std::string bin = snapshot_binary(g, snaps, 3);
  EXPECT_EQ(bin.size(), 4 * 3 + 8 + 4 * 2 + 3 * (4 + 3 * 8));
  EXPECT_THROW(trajectory_csv(g, snaps, 0), ArgumentError);
}

TEST(Runner, VerifyIdentityDefaultsPass) {
  const RunReport r = run_experiment(Config("verify-identity"));
  EXPECT_TRUE(r.pass());
  EXPECT_EQ(r.results["instances"], 10);
  for (const auto& c : r.checks) EXPECT_TRUE(c.consistent());
}

TEST(Runner, NullControlWithZeroDataIsTrivial) {
  Config c("null-control");
  c.set("data.y0", "zero");
  const RunReport r = run_experiment(c);
  EXPECT_TRUE(r.pass());
  EXPECT_EQ(r.results["relative_residual"].get<double>(), 0.0);
  EXPECT_EQ(r.results["cg_iterations"], 0);
}

TEST(Runner, FailedCheckIsReportedNotThrown) {
  Config c("null-control");
  c.set("solver.max_iter", "1");
  const RunReport r = run_experiment(c);
  EXPECT_FALSE(r.pass());
  for (const auto& k : r.checks) EXPECT_TRUE(k.consistent());
}

TEST(Runner, ModuleErrorsPropagate) {
  Config c("geometry");
  c.set("geometry.x0", "0.5");
  EXPECT_THROW(run_experiment(c), ArgumentError);
  Config d("geometry");
  d.set("geometry.dim", "2");
  EXPECT_THROW(run_experiment(d), UsageError);
}

TEST(Runner, DeterministicModuloTiming) {
  for (const std::string kind : {"stoch-heat", "kalman", "stoch-identity"}) {
    Config c(kind);
    c.set("run.seed", "42");
    if (kind == "stoch-heat") c.set("stoch.paths", "32");
    if (kind == "stoch-identity") c.set("identity.noisy", "true"), c.set("identity.paths", "16");
    const RunReport a = run_experiment(c), b = run_experiment(c);
    EXPECT_EQ(emit_json_untimed(a), emit_json_untimed(b)) << kind;
    EXPECT_EQ(emit_json_untimed(a).find("wall_seconds"), std::string::npos);
  }
  Config c("stoch-heat");
  c.set("stoch.paths", "32");
  const RunReport s0 = run_experiment(c);
  c.set("run.seed", "1");
  EXPECT_NE(emit_json_untimed(s0), emit_json_untimed(run_experiment(c)));
}

TEST(Runner, ArtifactsWritten) {
  Config c("stabilize");
  c.set("grid.T", "1");
  c.set("grid.steps", "100");
  c.set("output.csv", tmp_path("energy.csv"));
  c.set("output.dump_every", "25");
  c.set("output.trajectory", tmp_path("traj.csv"));
  const RunReport r = run_experiment(c);
  ASSERT_EQ(r.artifacts.size(), 2u);
  const std::string energy = slurp(tmp_path("energy.csv"));
  EXPECT_EQ(energy.substr(0, energy.find('\n')), "t,E,fit_residual");
  EXPECT_EQ(std::count(energy.begin(), energy.end(), '\n'), 102);
  const std::string traj = slurp(tmp_path("traj.csv"));
  EXPECT_EQ(std::count(traj.begin(), traj.end(), '\n'), 1 + 5 * 99);

  Config k("kalman");
  k.set("kalman.systems", "3");
  k.set("output.csv", tmp_path("kalman.csv"));
  run_experiment(k);
  EXPECT_EQ(slurp(tmp_path("kalman.csv")).substr(0, 32), "index,n,m,rank,lambda_min,agree\n");

  Config g("geometry");
  g.set("output.csv", tmp_path("checks.csv"));
  run_experiment(g);
  EXPECT_EQ(slurp(tmp_path("checks.csv")), "name,value,relation,threshold,pass\n");
}

TEST(Runner, ObservabilitySweepRows) {
  Config c("observability");
  c.set("grid.n", "20");
  c.set("observability.sweep", "control.omega=0.3,0.6;0.2,0.7;0,1");
  const RunReport r = run_experiment(c);
  const auto& pts = r.results["points"];
  ASSERT_EQ(pts.size(), 3u);
  EXPECT_GE(pts[0]["constant"].get<double>(), pts[1]["constant"].get<double>());
  EXPECT_GE(pts[1]["constant"].get<double>(), pts[2]["constant"].get<double>());
  c.set("observability.sweep", "grid.bogus=1,2");
  EXPECT_THROW(run_experiment(c), UsageError);
  c.set("observability.sweep", "grid.n");
  EXPECT_THROW(run_experiment(c), UsageError);
}

TEST(StochIdentityStudy, DriftOnlySlopes) {
  for (auto eq : {StochEquation::Parabolic, StochEquation::Hyperbolic}) {
    const auto st = stoch_refinement_study(eq, stoch_reference_instance(eq, false), 64, 3, 99, 0, {0.4});
    EXPECT_EQ(st.paths, 1);
    ASSERT_EQ(st.slopes.size(), 3u);
    for (double s : st.slopes) EXPECT_GE(s, 0.9) << to_string(eq);
    for (double s : st.slopes) EXPECT_LE(s, 1.1) << to_string(eq);
  }
  EXPECT_THROW(stoch_refinement_study(StochEquation::Parabolic, stoch_reference_instance(StochEquation::Parabolic, false),
                                      0, 3, 1, 0, {0.4}),
               ArgumentError);
  EXPECT_THROW(parse_stoch_equation("elliptic"), ArgumentError);
}

TEST(InstanceDump, DeterministicAndParsable) {
  for (auto kind : {IdentityKind::Ode, IdentityKind::Multiplier, IdentityKind::Deterministic}) {
    const std::string a = dump_instance_text(kind, 5, 1), b = dump_instance_text(kind, 5, 1);
    EXPECT_EQ(a, b);
    EXPECT_NE(a, dump_instance_text(kind, 6, 1));
    std::istringstream is(a);
    std::string line, block;
    int dims = -1, blocks = 0;
    auto flush = [&] {
      if (dims >= 0) {
        EXPECT_EQ(to_text(from_text(block, dims)), block) << to_string(kind);
        ++blocks;
      }
      block.clear();
    };
    while (std::getline(is, line)) {
      const auto pos = line.find(" dims ");
      if (line.rfind("# ", 0) == 0 && pos != std::string::npos) {
        flush();
        dims = std::stoi(line.substr(pos + 6));
      } else if (line.rfind("#", 0) != 0 && line.find(" : ") != std::string::npos) {
        block += line + "\n";
      }
    }
    flush();
    EXPECT_GE(blocks, 1) << to_string(kind);
  }
}

TEST(Cli, ExitCodes) {
  const std::string ini = tmp_path("bad.ini");
  write_file(ini, "[grid]\nbogus = 1\n");
  EXPECT_EQ(cli("null-control --help"), 0);
  EXPECT_EQ(cli("verify-identity --instances 2"), 0);
  EXPECT_EQ(cli("null-control --config " + ini), 2);
  EXPECT_EQ(cli("null-control --set grid.n=abc"), 2);
  EXPECT_EQ(cli("no-such-kind"), 2);
  EXPECT_EQ(cli("null-control --set solver.max_iter=1"), 1);
  EXPECT_EQ(cli("geometry --x0 0.5"), 3);
  EXPECT_EQ(cli("kalman --systems 1 --json /nonexistent/dir/r.json"), 4);
  EXPECT_EQ(cli("kalman --config /nonexistent/x.ini"), 4);
}

TEST(Cli, JsonFileMatchesLibraryRun) {
  const std::string out = tmp_path("kalman.json");
  ASSERT_EQ(cli("kalman --systems 5 --seed 3 -q --json " + out), 0);
  Config c("kalman");
  c.set("kalman.systems", "5");
  c.set("run.seed", "3");
  c.set("output.json", out);
  EXPECT_EQ(emit_json_untimed(parse_report(slurp(out))), emit_json_untimed(run_experiment(c)));
}
