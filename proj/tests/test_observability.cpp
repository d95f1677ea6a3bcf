#include <gtest/gtest.h>

#include <cmath>

#include "pdectl/observability.hpp"

using namespace pdectl;

namespace {

ControlGeometry region_geometry(const Grid& g, double lo, double hi) {
  return make_control_geometry(Domain::of(g), {-0.1, 0.0}, 0.0, g.T()).with_region(box_indicator(lo, hi));
}

}  // namespace

TEST(GeneralizedMax, MatchesDenseEigensolver) {
  Rng rng(11);
  const int m = 12;
  Mat A(m, m), B(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) A(i, j) = rng.normal(), B(i, j) = rng.normal();
  const Mat Out = A * A.transpose(), Obs = B * B.transpose() + 0.1 * Mat::Identity(m, m);
  const auto gm = generalized_max(Out, Obs);
  Mat G = Obs;
  G.diagonal().array() += gm.delta;
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(Out, G);
  EXPECT_NEAR(gm.lambda, es.eigenvalues().maxCoeff(), 1e-9 * gm.lambda);
  EXPECT_NEAR(gm.x.dot(G * gm.x), 1.0, 1e-9);
}

TEST(HeatObservability, MonotoneInRegion) {
  const Grid g = Grid::line(40, 0.3, 120);
  for (auto mode : {HeatObsMode::Terminal, HeatObsMode::Initial}) {
    for (int s = 0; s < 10; ++s) {
      const double c = 0.2 + 0.06 * s, w1 = 0.05 + 0.01 * s, w2 = w1 + 0.08;
      const auto small = obs_constant_heat(CoefficientField{}, g, region_geometry(g, c - w1, c + w1), mode);
      const auto large = obs_constant_heat(CoefficientField{}, g, region_geometry(g, c - w2, c + w2), mode);
      EXPECT_GE(small.constant, large.constant) << "pair " << s;
    }
  }
}

TEST(HeatObservability, FullRegionIsSmallest) {
  const Grid g = Grid::line(40, 0.3, 120);
  const auto full = obs_constant_heat(CoefficientField{}, g, region_geometry(g, 0.0, 1.0), HeatObsMode::Initial);
  for (double w : {0.1, 0.3, 0.45}) {
    const auto part = obs_constant_heat(CoefficientField{}, g, region_geometry(g, 0.5 - w, 0.5 + w), HeatObsMode::Initial);
    EXPECT_LE(full.constant, part.constant);
  }
  EXPECT_LE(full.constant, 1.0 / std::sqrt(g.T()));
}

TEST(HeatObservability, MaximizerNormalizedAndStationary) {
  const Grid g = Grid::line(40, 0.3, 120);
  CoefficientField c;
  c.mask = box_indicator(0.2, 0.4);
  const HeatModel model(c, g);
  for (auto mode : {HeatObsMode::Terminal, HeatObsMode::Initial}) {
    const auto e = obs_constant_heat(CoefficientField{}, g, region_geometry(g, 0.2, 0.4), mode);
    EXPECT_NEAR(norm(g, e.maximizer), 1.0, 1e-12);
    const auto M = heat_observation_matrices(model, mode);
    Mat G = M.Obs;
    G.diagonal().array() += e.regularization;
    const double lambda = e.constant * e.constant;
    const Vec Gv = G * e.maximizer;
    EXPECT_LE((M.Out * e.maximizer - lambda * Gv).norm(), 1e-5 * lambda * Gv.norm());
    EXPECT_LE(e.eigen_residual, 1e-5);
  }
}

TEST(HeatObservability, ZeroRegionRejected) {
  const Grid g = Grid::line(20, 0.3, 60);
  EXPECT_THROW(obs_constant_heat(CoefficientField{}, g, region_geometry(g, 2.0, 3.0), HeatObsMode::Initial),
               ArgumentError);
}

TEST(HeatObservability, PotentialSweepReportsFit) {
  const Grid g = Grid::line(30, 0.3, 90);
  const auto s = obs_potential_sweep(CoefficientField{}, g, region_geometry(g, 0.3, 0.6), {0, 5, 10, 20, 40},
                                     HeatObsMode::Initial);
  ASSERT_EQ(s.points.size(), 5u);
  for (const auto& p : s.points) EXPECT_GT(p.estimate.constant, 0.0);
  EXPECT_GE(s.fit.r_squared, 0.0);
  EXPECT_LE(s.fit.r_squared, 1.0);
}

// ---------------------------------------------------------------------------

TEST(WaveObservability, StableAboveCriticalTime) {
  std::vector<double> C;
  for (int n : {100, 200}) {
    const Grid g = Grid::line(n, 3.0, 3 * (n + 1));
    const auto geo = make_control_geometry(Domain::of(g), {-0.1, 0}, 0.15, g.T());
    C.push_back(obs_constant_wave(CoefficientField{}, g, geo).constant);
  }
  EXPECT_LE(C[1], 1.5 * C[0]);
}

TEST(WaveObservability, DivergesBelowCriticalTime) {
  std::vector<double> C;
  for (int n : {50, 200}) {
    const Grid g = Grid::line(n, 1.5, static_cast<int>(std::ceil(1.5 * (n + 1))));
    const auto geo = make_control_geometry(Domain::of(g), {-0.1, 0}, 0.15, g.T());
    const auto e = obs_constant_wave(CoefficientField{}, g, geo);
    EXPECT_NE(e.note.find("T <= T*"), std::string::npos);
    C.push_back(e.constant);
  }
  EXPECT_GT(C[1], 5.0 * C[0]);
}

TEST(WaveObservability, TimeReversal) {
  const Grid g = Grid::line(60, 2.5, 150);
  const auto geo = make_control_geometry(Domain::of(g), {-0.1, 0}, 0.2, g.T());
  WaveObsOptions fwd, bwd;
  bwd.reverse = true;
  const double a = obs_constant_wave(CoefficientField{}, g, geo, fwd).constant;
  const double b = obs_constant_wave(CoefficientField{}, g, geo, bwd).constant;
  EXPECT_LE(std::abs(a - b), 1e-6 * a);
}

TEST(WaveObservability, FullRegionFinite) {
  const Grid g = Grid::line(40, 2.5, 100);
  const auto geo = make_control_geometry(Domain::of(g), {-0.1, 0}, 2.0, g.T());
  const auto e = obs_constant_wave(CoefficientField{}, g, geo);
  EXPECT_TRUE(std::isfinite(e.constant));
  EXPECT_GT(e.constant, 0.0);
  EXPECT_EQ(e.maximizer.size(), 80);
  EXPECT_LT(e.constant, 10.0);
}

TEST(WaveObservability, BoundaryTrace) {
  std::vector<double> C;
  for (int n : {50, 100}) {
    const Grid g = Grid::line(n, 3.0, 3 * (n + 1));
    const auto geo = make_control_geometry(Domain::of(g), {-0.1, 0}, 0.15, g.T());
    WaveObsOptions o;
    o.observation = WaveObservation::BoundaryTrace;
    C.push_back(obs_constant_wave(CoefficientField{}, g, geo, o).constant);
  }
  EXPECT_TRUE(std::isfinite(C[0]));
  EXPECT_LE(C[1], 1.5 * C[0]);
}

TEST(WaveObservability, TwoDimensional) {
  const Grid g = Grid::rect(9, 9, 4.0, 60);
  const auto geo = make_control_geometry(Domain::of(g), {-0.1, -0.1}, 0.3, g.T());
  const auto e = obs_constant_wave(CoefficientField{}, g, geo);
  EXPECT_TRUE(std::isfinite(e.constant));
  EXPECT_GT(e.constant, 0.0);
}

// ---------------------------------------------------------------------------

TEST(LRSpectrum, FullIntervalIsIdentity) {
  const auto s = lr_gram_constant(8, {0.0, 1.0});
  EXPECT_LE((s.gram - Mat::Identity(8, 8)).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_NEAR(s.constant, 1.0, 1e-14);
}

TEST(LRSpectrum, TwoModesClosedForm) {
  const auto s = lr_gram_constant(2, {0.0, 0.5});
  EXPECT_NEAR(s.gram(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(s.gram(1, 1), 0.5, 1e-15);
  EXPECT_NEAR(s.gram(0, 1), 4.0 / (3.0 * M_PI), 1e-15);
  EXPECT_NEAR(s.lambda_min, 0.5 - 4.0 / (3.0 * M_PI), 1e-12);
}

TEST(LRSpectrum, HighPrecisionReferenceValues) {
  const std::pair<int, double> ref[] = {{2, 9.3613408320629696e-3},
                                        {10, 4.648685368058629e-19},
                                        {20, 1.8559861865132688e-40},
                                        {30, 4.7227818368320162e-62},
                                        {40, 1.0025605324569899e-83}};
  for (const auto& [k, v] : ref) EXPECT_NEAR(lr_gram_constant(k, {0.2, 0.4}).lambda_min, v, 1e-12 * v) << k;
}

TEST(LRSpectrum, StrictlyDecreasingInModes) {
  double prev = INFINITY;
  for (int k = 1; k <= 30; ++k) {
    const double l = lr_gram_constant(k, {0.2, 0.4}).lambda_min;
    EXPECT_GT(l, 0.0);
    EXPECT_LT(l, prev);
    prev = l;
  }
}

TEST(LRSpectrum, EmptyRegionRejected) {
  EXPECT_THROW(lr_gram_constant(3, {0.4, 0.4}), ArgumentError);
  EXPECT_THROW(lr_gram_constant(3, {0.5, 1.2}), ArgumentError);
}

TEST(LRSpectrum, TensorProductGram) {
  const auto s = lr_gram_constant_2d(2 * M_PI * M_PI * 4 + 1, {0.0, 1.0}, {0.0, 1.0});
  EXPECT_EQ(s.modes.size(), 4u);  // (1,1), (1,2), (2,1), (2,2)
  EXPECT_NEAR(s.constant, 1.0, 1e-14);
}

TEST(LRGrowth, FullIntervalFlat) {
  const auto f = lr_growth_fit_counts({1, 2, 3, 4, 5}, {0.0, 1.0});
  EXPECT_NEAR(f.fit.slope, 0.0, 1e-12);
  for (double c : f.constants) EXPECT_NEAR(c, 1.0, 1e-14);
}

TEST(LRGrowth, TooFewPoints) { EXPECT_THROW(lr_growth_fit_counts({1, 2, 3}, {0.2, 0.4}), ArgumentError); }

TEST(LRGrowth, SqrtLawTwoDimensional) {
  std::vector<double> r;
  for (double v = 100; v <= 800; v += 100) r.push_back(v);
  const auto f = lr_growth_fit_2d(r, {0.2, 0.4}, {0.2, 0.4});
  EXPECT_GT(f.fit.slope, 0.0);
  EXPECT_GE(f.fit.r_squared, 0.9);
}

// ---------------------------------------------------------------------------

TEST(StochObservability, NoiseOffMatchesDeterministic) {
  const Grid g = Grid::line(30, 0.2, 60);
  const auto geo = region_geometry(g, 0.3, 0.6);
  StochObsOptions o;
  o.n_candidates = 3;
  o.n_paths = 256;
  o.seed = 5;
  const auto e = stoch_obs_lower_bound(CoefficientField{}, g, geo, o);
  const double det = heat_candidate_constant(CoefficientField{}, g, geo, obs_candidates(g, 3, 5));
  EXPECT_NEAR(e.constant, det, 1e-6 * det);
  EXPECT_LE(e.half_width, 1e-10 * det);
}

TEST(StochObservability, ShorterHorizonLargerBound) {
  CoefficientField c;
  c.noise = constant_fn(0.8);
  StochObsOptions o;
  o.n_candidates = 2;
  o.n_paths = 256;
  const Grid g1 = Grid::line(30, 0.2, 60), g2 = Grid::line(30, 0.1, 30);
  const double a = stoch_obs_lower_bound(c, g1, region_geometry(g1, 0.3, 0.6), o).constant;
  const double b = stoch_obs_lower_bound(c, g2, region_geometry(g2, 0.3, 0.6), o).constant;
  EXPECT_GT(b, a);
}

TEST(StochObservability, ReproducibleAcrossSeeds) {
  CoefficientField c;
  c.noise = constant_fn(0.8);
  const Grid g = Grid::line(30, 0.2, 60);
  StochObsOptions o;
  o.n_candidates = 1;
  o.n_paths = 512;
  o.seed = 1;
  const auto a = stoch_obs_lower_bound(c, g, region_geometry(g, 0.3, 0.6), o);
  o.seed = 2;
  const auto b = stoch_obs_lower_bound(c, g, region_geometry(g, 0.3, 0.6), o);
  EXPECT_GT(a.half_width, 0.0);
  EXPECT_LE(std::abs(a.constant - b.constant), 3.0 * (a.half_width + b.half_width));
}

TEST(StochObservability, TooFewPaths) {
  const Grid g = Grid::line(10, 0.2, 10);
  StochObsOptions o;
  o.n_paths = 100;
  EXPECT_THROW(stoch_obs_lower_bound(CoefficientField{}, g, region_geometry(g, 0.3, 0.6), o), ArgumentError);
}
