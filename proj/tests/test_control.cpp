#include <gtest/gtest.h>

#include <cmath>

#include "oracles/exact_rank.hpp"
#include "pdectl/control.hpp"
#include "pdectl/kalman.hpp"

using namespace pdectl;

namespace {

Vec random_vec(int n, std::uint64_t seed) {
  Rng rng(seed);
  Vec v(n);
  for (auto& x : v) x = rng.uniform(-1, 1);
  return v;
}

ControlGeometry line_geometry(const Grid& g, double x0 = -0.1, double eps = 0.15) {
  return make_control_geometry(Domain::of(g), {x0, 0.0}, eps, g.T());
}

double slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i], sy += y[i], sxx += x[i] * x[i], sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST(Kalman, DoubleIntegrator) {
  LinearODE sys{Mat(2, 2), Mat(2, 1)};
  sys.A << 0, 1, 0, 0;
  sys.B << 0, 1;
  EXPECT_EQ(kalman_rank(sys), 2);
}

TEST(Kalman, ZeroInput) {
  LinearODE sys{Mat::Random(3, 3), Mat::Zero(3, 2)};
  EXPECT_EQ(kalman_rank(sys), 0);
}

TEST(Kalman, InconsistentShapes) {
  LinearODE sys{Mat::Zero(3, 2), Mat::Zero(3, 1)};
  EXPECT_THROW(kalman_rank(sys), ArgumentError);
}

TEST(Kalman, MatchesExactRankOracle) {
  int deficient = 0;
  for (int s = 0; s < 100; ++s) {
    const LinearODE sys = random_linear_ode(1000 + s, 6);
    const auto C = oracle::to_int(controllability_matrix(sys));
    const int r = kalman_rank(sys);
    EXPECT_EQ(r, oracle::bareiss_rank(C)) << "seed " << s;
    if (sys.n() <= 4) EXPECT_EQ(r, oracle::gram_minor_rank(C)) << "seed " << s;
    deficient += r < sys.n();
  }
  EXPECT_GT(deficient, 10);
  EXPECT_LT(deficient, 90);
}

TEST(Kalman, OraclesAgreeOnKnownRanks) {
  oracle::IntMat M = {{1, 2, 3}, {2, 4, 6}, {0, 0, 1}};
  EXPECT_EQ(oracle::bareiss_rank(M), 2);
  EXPECT_EQ(oracle::gram_minor_rank(M), 2);
  EXPECT_EQ(oracle::determinant({{2, 1}, {1, 3}}), 5);
}

TEST(Gramian, ZeroInput) {
  LinearODE sys{Mat::Random(3, 3), Mat::Zero(3, 1)};
  EXPECT_EQ(controllability_gramian(sys, 1.0).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Gramian, ConstantIntegrand) {
  LinearODE sys{Mat::Zero(4, 4), Mat::Identity(4, 4)};
  const Mat W = controllability_gramian(sys, 1.7);
  EXPECT_LE((W - 1.7 * Mat::Identity(4, 4)).norm() / 1.7, 1e-8);
}

TEST(Gramian, ScalarClosedForm) {
  LinearODE sys{Mat::Constant(1, 1, -0.7), Mat::Constant(1, 1, 2.0)};
  const double exact = 4.0 * (1.0 - std::exp(-1.4 * 2.0)) / 1.4;
  EXPECT_NEAR(controllability_gramian(sys, 2.0)(0, 0), exact, 1e-10 * exact);
}

TEST(Gramian, SymmetricAndKalmanEquivalent) {
  for (int s = 0; s < 100; ++s) {
    const LinearODE sys = random_linear_ode(s);
    const Mat W = controllability_gramian(sys, 1.0);
    EXPECT_LE((W - W.transpose()).cwiseAbs().maxCoeff(), 1e-12 * std::max(1.0, W.cwiseAbs().maxCoeff()));
    EXPECT_EQ(kalman_rank(sys) == sys.n(), min_eigenvalue(W) > 1e-8) << "seed " << s;
  }
}

// ---------------------------------------------------------------------------

TEST(Geometry, Interval) {
  const auto g = make_control_geometry(Domain::interval(0, 1), {-0.1, 0}, 0.15, 2.5);
  ASSERT_EQ(g.gamma0.size(), 1u);
  EXPECT_EQ(g.gamma0[0].name(), "right");
  EXPECT_NEAR(g.T_star, 2.2, 1e-14);
  const auto w = g.omega();
  EXPECT_EQ(w(0.9, 0), 1.0);
  EXPECT_EQ(w(0.8, 0), 0.0);
}

TEST(Geometry, Square) {
  const auto g = make_control_geometry(Domain::rectangle(0, 1, 0, 1), {-0.1, -0.1}, 0.1, 4.0);
  ASSERT_EQ(g.gamma0.size(), 2u);
  EXPECT_EQ(g.gamma0[0].name(), "right");
  EXPECT_EQ(g.gamma0[1].name(), "top");
  EXPECT_NEAR(g.T_star, 2 * std::sqrt(2 * 1.21), 1e-14);
  EXPECT_NEAR(g.T_star, 3.1113, 1e-4);
  EXPECT_EQ(g.omega()(0.5, 0.95), 1.0);
  EXPECT_EQ(g.omega()(0.95, 0.5), 1.0);
  EXPECT_EQ(g.omega()(0.05, 0.05), 0.0);
}

TEST(Geometry, WideCollarCoversDomain) {
  const auto g = make_control_geometry(Domain::rectangle(0, 1, 0, 1), {2.0, 0.5}, 1.5, 1.0);
  const Grid grid = Grid::rect(9, 9, 1.0, 1);
  EXPECT_EQ(mask_vector(grid, g.omega()).sum(), grid.size());
}

TEST(Geometry, InteriorPointRejected) {
  EXPECT_THROW(make_control_geometry(Domain::interval(0, 1), {0.5, 0}, 0.1, 1.0), ArgumentError);
  EXPECT_THROW(make_control_geometry(Domain::interval(0, 1), {1.0, 0}, 0.1, 1.0), ArgumentError);
}

TEST(AssumptionD, Margins) {
  struct Case {
    double lo, hi, x0, margin;
  };
  const Case cases[] = {{0, 1, -2, 4 - 9},        {0, 1, -0.1, 0.01 - 1.21}, {0, 1, -1.5, 2.25 - 6.25},
                        {0, 1, -10, 100 - 121},   {9, 10, 0, 81 - 100},      {99, 100, 0, 9801 - 10000}};
  for (const auto& c : cases) {
    const auto r = check_assumption_d(Domain::interval(c.lo, c.hi), {c.x0, 0});
    EXPECT_NEAR(r.condition_iii_margin, c.margin, 1e-9 * std::abs(c.margin));
    EXPECT_FALSE(r.condition_iii_ok);
    EXPECT_TRUE(r.mu0_ok);
    EXPECT_TRUE(r.no_critical_point);
    EXPECT_TRUE(r.rescale_possible);
  }
  const auto r = check_assumption_d(Domain::interval(0, 1), {-2, 0});
  EXPECT_DOUBLE_EQ(r.min_grad, 4.0);
  EXPECT_DOUBLE_EQ(r.max_d, 9.0);
  EXPECT_DOUBLE_EQ(r.rescale_factor, 9.0 / 4.0);
}

TEST(AssumptionD, BruteForceMargins) {
  for (int s = 0; s < 20; ++s) {
    Rng rng(derive_seed(4, "d", s));
    const Domain d = Domain::rectangle(0, 1 + rng.uniform(), 0, 1 + rng.uniform());
    const std::array<double, 2> x0{-0.05 - 3 * rng.uniform(), rng.uniform(-1, 3)};
    double mn = 1e300, mx = 0;
    const int m = 400;
    for (int i = 0; i <= m; ++i)
      for (int j = 0; j <= m; ++j) {
        const std::array<double, 2> x{d.hi[0] * i / m, d.hi[1] * j / m};
        const double q = distance_sq(x, x0, 2);
        mn = std::min(mn, q), mx = std::max(mx, q);
      }
    const auto r = check_assumption_d(d, x0);
    EXPECT_LE(r.condition_iii_margin, mn - mx + 1e-12);
    EXPECT_NEAR(r.condition_iii_margin, mn - mx, 2e-2 * std::max(1.0, mx));
  }
}

// ---------------------------------------------------------------------------

TEST(HeatControl, ZeroDataZeroControl) {
  const Grid g = Grid::line(40, 0.5, 100);
  const auto geo = line_geometry(g).with_region(box_indicator(0.3, 0.6));
  const auto r = hum_null_control_heat(CoefficientField{}, g, geo, Vec::Zero(40));
  EXPECT_EQ(r.cg_iterations, 0);
  EXPECT_EQ(r.terminal_residual, 0.0);
  EXPECT_EQ(r.cost, 0.0);
}

TEST(HeatControl, NonPositiveEpsilonRejected) {
  const Grid g = Grid::line(20, 0.5, 50);
  const auto geo = line_geometry(g).with_region(box_indicator(0.3, 0.6));
  EXPECT_THROW(hum_null_control_heat(CoefficientField{}, g, geo, sine_mode(g, 1), 0.0), ArgumentError);
}

TEST(HeatControl, DrivesFirstModeToZero) {
  const Grid g = Grid::line(100, 0.5, 500);
  const auto geo = line_geometry(g).with_region(box_indicator(0.3, 0.6));
  const Vec y0 = sine_mode(g, 1);
  const auto r = hum_null_control_heat(CoefficientField{}, g, geo, y0, 1e-8);
  EXPECT_LE(r.relative_residual, 1e-3);
  EXPECT_NEAR(r.terminal_residual, 1e-8 * norm(g, r.adjoint_terminal), 1e-6 * r.terminal_residual + 1e-12);
  // the control lives in omega
  const Vec chi = sample(g, box_indicator(0.3, 0.6));
  for (const auto& u : r.control) EXPECT_EQ(u.cwiseProduct(Vec::Ones(100) - chi).cwiseAbs().maxCoeff(), 0.0);
}

TEST(HeatControl, NormalEquationsHold) {
  const Grid g = Grid::line(50, 0.3, 150);
  CoefficientField c;
  c.mask = box_indicator(0.2, 0.5);
  const HeatModel model(c, g);
  const double eps = 1e-6;
  const Vec y0 = random_vec(50, 3);
  CgOptions cg;
  cg.tol = 1e-10;
  const auto r = hum_heat(model, y0, eps, cg);
  const HeatGramian G(model);
  const Vec lhs = G.apply(r.adjoint_terminal) + eps * r.adjoint_terminal + model.terminal(y0, {});
  EXPECT_LE(norm(g, lhs), 1e-10 * norm(g, model.terminal(y0, {})) * 1.0001);
}

TEST(HeatControl, LagrangianStationarity) {
  // u minimizes |u|^2/2 + |y(T)|^2/(2 eps): u + chi phi[y(T)]/eps = 0.
  const Grid g = Grid::line(50, 0.3, 150);
  CoefficientField c;
  c.mask = box_indicator(0.2, 0.5);
  const HeatModel model(c, g);
  const double eps = 1e-4;
  CgOptions cg;
  cg.tol = 1e-12;
  const auto r = hum_heat(model, random_vec(50, 4), eps, cg);
  const auto dual = HeatGramian(model).control_from(r.state.y.back() / eps);
  double num = 0, den = 0;
  for (int k = 0; k < g.steps; ++k) {
    num += (r.control[k] + dual[k]).squaredNorm();
    den += r.control[k].squaredNorm();
  }
  EXPECT_LE(std::sqrt(num / den), 1e-6);
}

TEST(HeatControl, PerturbationsCostMore) {
  const Grid g = Grid::line(40, 0.3, 120);
  CoefficientField c;
  c.mask = box_indicator(0.2, 0.5);
  const HeatModel model(c, g);
  const double eps = 1e-4;
  CgOptions cg;
  cg.tol = 1e-12;
  const Vec y0 = sine_mode(g, 1);
  const auto r = hum_heat(model, y0, eps, cg);
  auto J = [&](const ControlSeries& u) {
    const Vec yT = model.terminal(y0, u);
    return 0.5 * std::pow(control_cost(g, u), 2) + dot(g, yT, yT) / (2 * eps);
  };
  const double J0 = J(r.control);
  for (int s = 0; s < 20; ++s) {
    ControlSeries u = r.control;
    const Vec chi = model.chi();
    for (int k = 0; k < g.steps; ++k) u[k] += 1e-3 * chi.cwiseProduct(random_vec(40, derive_seed(s, "du", k)));
    EXPECT_GT(J(u), J0);
  }
}

TEST(HeatControl, GramianSymmetric) {
  CoefficientField c;
  c.mask = box_indicator(0.3, 0.6);
  c.a1x = [](double x, double) { return 0.5 - x; };
  c.a = [](double t, double x, double) { return 2 * std::sin(t + 3 * x); };
  c.a_time_dependent = true;
  const Grid g = Grid::line(40, 0.4, 80);
  const HeatModel model(c, g);
  const HeatGramian G(model);
  for (int s = 0; s < 20; ++s) {
    const Vec a = random_vec(40, derive_seed(5, "a", s)), b = random_vec(40, derive_seed(5, "b", s));
    const double d = dot(g, G.apply(a), b) - dot(g, a, G.apply(b));
    EXPECT_LE(std::abs(d), 1e-10 * norm(g, a) * norm(g, b));
    EXPECT_GE(dot(g, G.apply(a), a), 0.0);
  }
}

TEST(HeatControl, EpsilonScaling) {
  const Grid g = Grid::line(100, 0.5, 500);
  CoefficientField c;
  c.mask = box_indicator(0.3, 0.6);
  const HeatModel model(c, g);
  std::vector<double> le, lr;
  for (double eps : {1e-4, 1e-6, 1e-8}) {
    const auto r = hum_heat(model, sine_mode(g, 1), eps);
    le.push_back(std::log(eps));
    lr.push_back(std::log(r.terminal_residual));
  }
  const double s = slope(le, lr);
  EXPECT_GE(s, 0.4);
  EXPECT_LE(s, 0.6);
}

TEST(HeatControl, ShorterHorizonCostsMore) {
  double prev_cost = 0.0;
  for (double T : {0.5, 0.25, 0.1}) {
    const Grid g = Grid::line(100, T, static_cast<int>(T * 1000));
    const auto geo = line_geometry(g).with_region(box_indicator(0.3, 0.6));
    const auto r = hum_null_control_heat(CoefficientField{}, g, geo, sine_mode(g, 1), 1e-8);
    EXPECT_LE(r.relative_residual, 1e-3);
    EXPECT_GT(r.cost, prev_cost);
    prev_cost = r.cost;
  }
}

// ---------------------------------------------------------------------------

TEST(WaveControl, ZeroDataZeroControl) {
  const Grid g = Grid::line(30, 2.5, 200);
  const Vec z = Vec::Zero(30);
  const auto r = hum_exact_control_wave(CoefficientField{}, g, line_geometry(g), z, z, z, z);
  EXPECT_EQ(r.cg_iterations, 0);
  EXPECT_EQ(r.cost, 0.0);
}

TEST(WaveControl, BeyondCriticalTime) {
  const Grid g = Grid::line(100, 2.5, 500);
  const auto geo = line_geometry(g);
  const Vec z = Vec::Zero(100);
  CgOptions cg;
  cg.tol = 1e-3;
  const auto r = hum_exact_control_wave(CoefficientField{}, g, geo, sine_mode(g, 1), z, z, z, cg);
  EXPECT_TRUE(r.warnings.empty());
  EXPECT_LE(r.relative_residual, 1e-2);
}

TEST(WaveControl, ReachesNonzeroTarget) {
  const Grid g = Grid::line(60, 2.5, 300);
  const auto geo = line_geometry(g);
  CgOptions cg;
  cg.tol = 1e-4;
  const auto r = hum_exact_control_wave(CoefficientField{}, g, geo, Vec::Zero(60), Vec::Zero(60),
                                        sine_mode(g, 2), sine_mode(g, 1), cg);
  EXPECT_LE(r.relative_residual, 1e-3);
}

TEST(WaveControl, BelowCriticalTimePlateaus) {
  const Grid g = Grid::line(100, 1.0, 200);
  const auto geo = line_geometry(g);
  const Vec z = Vec::Zero(100);
  CgOptions cg;
  cg.tol = 1e-3;
  cg.throw_on_failure = false;
  const auto r = hum_exact_control_wave(CoefficientField{}, g, geo, sine_mode(g, 1), z, z, z, cg);
  EXPECT_FALSE(r.warnings.empty());
  EXPECT_FALSE(r.converged);
  EXPECT_GT(r.relative_residual, 1e-1);
  cg.throw_on_failure = true;
  EXPECT_THROW(hum_exact_control_wave(CoefficientField{}, g, geo, sine_mode(g, 1), z, z, z, cg), NumericalError);
}

TEST(WaveControl, GramianSymmetric) {
  const Grid g = Grid::line(40, 1.5, 150);
  CoefficientField c;
  c.mask = box_indicator(0.7, 1.0);
  c.damping = box_indicator(0.1, 0.3);
  WaveOptions opt;
  opt.damping = DampingMode::Interior;
  const WaveModel model(c, g, opt);
  const WaveGramian G(model);
  for (int s = 0; s < 20; ++s) {
    const Vec a = random_vec(80, derive_seed(6, "a", s)), b = random_vec(80, derive_seed(6, "b", s));
    const double na = std::sqrt(G.ip(a, a)), nb = std::sqrt(G.ip(b, b));
    EXPECT_LE(std::abs(G.ip(G.apply(a), b) - G.ip(a, G.apply(b))), 1e-10 * na * nb);
    EXPECT_GE(G.ip(G.apply(a), a), -1e-12 * na * na);
  }
}

// ---------------------------------------------------------------------------

TEST(SemilinearControl, ZeroData) {
  const Grid g = Grid::line(30, 0.4, 80);
  const auto geo = line_geometry(g).with_region(box_indicator(0.3, 0.6));
  const auto r = semilinear_null_control(CoefficientField{}, g, geo, Vec::Zero(30), LogNonlinearity{1.2, -1});
  EXPECT_EQ(r.outer_iterations, 1);
  EXPECT_EQ(r.cost, 0.0);
}

TEST(SemilinearControl, LinearCaseMatchesHum) {
  const Grid g = Grid::line(60, 0.4, 200);
  const auto geo = line_geometry(g).with_region(box_indicator(0.3, 0.6));
  const Vec y0 = sine_mode(g, 1) + 0.3 * sine_mode(g, 3);
  for (int sign : {-1, 1}) {
    const auto r = semilinear_null_control(CoefficientField{}, g, geo, y0, LogNonlinearity{0.0, sign});
    CoefficientField c;
    c.a = constant_tfn(-sign);
    const auto h = hum_null_control_heat(c, g, geo, y0);
    double num = 0, den = 0;
    for (int k = 0; k < g.steps; ++k) {
      num += (r.control[k] - h.control[k]).squaredNorm();
      den += h.control[k].squaredNorm();
    }
    EXPECT_LE(std::sqrt(num / den), 1e-6);
    EXPECT_LE(r.outer_iterations, 2);
  }
}

TEST(SemilinearControl, AvoidsBlowUp) {
  const Grid g = Grid::line(50, 0.4, 200);
  const LogNonlinearity nl{1.2, -1};
  const Vec shape = sine_mode(g, 1);
  const auto A = blowup_threshold(CoefficientField{}, g, shape, nl, 1.0, 1e8, 1e-2);
  ASSERT_TRUE(A.has_value());
  const Vec y0 = 1.05 * *A * shape;
  const auto geo = line_geometry(g).with_region(box_indicator(0.3, 0.6));
  EXPECT_TRUE(solve_semilinear_heat(CoefficientField{}, g, y0, {}, nl).blew_up);
  const auto r = semilinear_null_control(CoefficientField{}, g, geo, y0, nl);
  EXPECT_FALSE(r.blew_up);
  EXPECT_LE(r.outer_iterations, 20);
  EXPECT_LE(r.relative_residual, 1e-2);
  for (std::size_t i = 1; i + 3 < r.outer_history.size(); ++i) EXPECT_LT(r.outer_history[i], r.outer_history[i - 1]);
}

TEST(SemilinearControl, OutsideGrowthRegimeWarns) {
  const Grid g = Grid::line(30, 0.2, 60);
  const auto geo = line_geometry(g).with_region(box_indicator(0.3, 0.6));
  const auto r = semilinear_null_control(CoefficientField{}, g, geo, sine_mode(g, 1), LogNonlinearity{1.6, -1});
  EXPECT_FALSE(r.warnings.empty());
}

TEST(SemilinearControl, NonConvergenceCarriesHistory) {
  const Grid g = Grid::line(30, 0.4, 80);
  const auto geo = line_geometry(g).with_region(box_indicator(0.3, 0.6));
  OuterOptions outer;
  outer.max_outer = 2;
  try {
    semilinear_null_control(CoefficientField{}, g, geo, 100.0 * sine_mode(g, 1), LogNonlinearity{1.2, -1}, 1e-8, {},
                            outer);
    FAIL() << "expected non-convergence";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("history"), std::string::npos);
  }
}
