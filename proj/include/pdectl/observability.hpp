#pragma once

// Discrete observability constants.
//
// Every constant here is C^2 = max_x (x.Out x) / (x.Obs x) over data x, where
// Obs is the observation Gram (the time integral of the observed solution
// squared) and Out the norm of the quantity to be recovered. Both are
// assembled densely by propagating a basis through the solvers, Obs is
// regularized by delta = 1e-12 trace/dim, and the largest eigenvalue of
// L^{-1} Out L^{-T} (Obs + delta = L L^T) is found by power iteration.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <boost/math/constants/constants.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <array>
#include <charconv>
#include <limits>
#include <cmath>
#include <string>
#include <vector>

#include "pdectl/geometry.hpp"
#include "pdectl/heat.hpp"
#include "pdectl/kalman.hpp"
#include "pdectl/rng.hpp"
#include "pdectl/stats.hpp"
#include "pdectl/wave.hpp"

namespace pdectl {

struct ObsEstimate {
  double constant = 0.0;
  Vec maximizer;
  int iterations = 0;
  double regularization = 0.0;
  double eigen_residual = 0.0;  // |M v - lambda v| / (lambda |v|), M = (Obs + delta)^{-1} Out
  double half_width = 0.0;      // Monte Carlo estimates only
  std::string note;
};

struct PowerOptions {
  double delta_rel = 1e-12;
  double rel_tol = 1e-6;
  int max_iter = 100000;
  int squarings = 8;  // warm start from (S / |S|)^(2^squarings) applied to a fixed vector
};

struct GeneralizedMax {
  double lambda = 0.0;
  Vec x;  // maximizer in data coordinates, scaled so x.Out x = lambda x.(Obs + delta) x = lambda
  int iterations = 0;
  double delta = 0.0;
  double residual = 0.0;
};

inline GeneralizedMax generalized_max(const Mat& Out, const Mat& Obs, const PowerOptions& opt = {}) {
  const int m = static_cast<int>(Obs.rows());
  require(m > 0 && Out.rows() == m, "observability: empty or inconsistent matrices");
  GeneralizedMax res;
  res.delta = opt.delta_rel * Obs.trace() / m;
  if (!(res.delta > 0.0)) throw NumericalError("observability: observation Gram vanishes (empty region?)");
  Mat G = 0.5 * (Obs + Obs.transpose());
  G.diagonal().array() += res.delta;
  const Eigen::LLT<Mat> llt(G);
  if (llt.info() != Eigen::Success) throw NumericalError("observability: regularized Gram is not positive definite");
  const Mat Linv_Out = llt.matrixL().solve(Mat(0.5 * (Out + Out.transpose())));
  Mat S = llt.matrixL().solve(Mat(Linv_Out.transpose()));
  S = 0.5 * (S + S.transpose()).eval();

  Vec w = Vec::Ones(m);
  for (int i = 0; i < m; ++i) w[i] += 1e-3 * std::sin(1.0 + i);
  Mat P = S / std::max(S.norm(), 1e-300);
  for (int s = 0; s < opt.squarings; ++s) {
    P = (P * P).eval();
    P /= std::max(P.norm(), 1e-300);
  }
  const Vec pw = P * w;
  if (pw.norm() > 0.0) w = pw;
  w.normalize();
  double lambda = w.dot(S * w), prev = lambda;
  int it = 0;
  double resid = INFINITY;
  const auto LT = llt.matrixL().transpose();
  while (it < opt.max_iter) {
    Vec Sw = S * w;
    ++it;
    lambda = w.dot(Sw);
    // residual of M = (Obs + delta)^{-1} Out at v = L^{-T} w
    const Vec v = LT.solve(w);
    resid = lambda > 0.0 ? LT.solve(Vec(Sw - lambda * w)).norm() / (lambda * v.norm()) : 0.0;
    const double nrm = Sw.norm();
    if (nrm == 0.0) break;
    w = Sw / nrm;
    if (std::abs(lambda - prev) <= opt.rel_tol * std::abs(lambda) && resid <= 1e-6) break;
    prev = lambda;
  }
  if (it >= opt.max_iter)
    throw NumericalError("observability: power iteration stagnated (eigenvalue change " +
                         std::to_string(std::abs(lambda - prev) / std::abs(lambda)) + ", residual " +
                         std::to_string(resid) + ")");
  res.lambda = lambda;
  res.iterations = it;
  res.residual = resid;
  res.x = llt.matrixL().transpose().solve(w);
  return res;
}

// ---------------------------------------------------------------------------
// Heat

enum class HeatObsMode { Terminal, Initial };

struct HeatObsMatrices {
  Mat Out, Obs;
};

/// Terminal: forward y from y0, Out = |y(T)|^2, Obs = trapezoid dt sum |chi y_k|^2.
/// Initial: adjoint psi from psi_T, Out = |psi(0)|^2, Obs = dt sum |chi phi_k|^2
/// (the HUM Gramian). Matrices are in grid-weighted coordinates.
inline HeatObsMatrices heat_observation_matrices(const HeatModel& model, HeatObsMode mode) {
  const Grid& g = model.grid();
  const int n = g.size();
  const Vec wchi = g.cell() * model.chi();
  HeatObsMatrices M;
  M.Obs = Mat::Zero(n, n);
  Mat Y = Mat::Identity(n, n);
  auto observe = [&](const Mat& Z, double weight) { M.Obs += weight * Z.transpose() * wchi.asDiagonal() * Z; };
  if (mode == HeatObsMode::Terminal) {
    observe(Y, 0.5 * g.dt);
    for (int k = 0; k < g.steps; ++k) {
      for (int c = 0; c < n; ++c) Y.col(c) = model.step(k, Y.col(c), nullptr);
      observe(Y, k + 1 == g.steps ? 0.5 * g.dt : g.dt);
    }
  } else {
    Vec mid;
    for (int k = g.steps - 1; k >= 0; --k) {
      Mat Phi(n, n);
      for (int c = 0; c < n; ++c) {
        Y.col(c) = model.adjoint_step(k, Y.col(c), &mid);
        Phi.col(c) = mid;
      }
      observe(Phi, g.dt);
    }
  }
  M.Out = g.cell() * Y.transpose() * Y;
  return M;
}

inline ObsEstimate obs_from(const GeneralizedMax& gm, double data_norm) {
  ObsEstimate e;
  e.constant = std::sqrt(std::max(gm.lambda, 0.0));
  e.maximizer = gm.x / data_norm;
  e.iterations = gm.iterations;
  e.regularization = gm.delta;
  e.eigen_residual = gm.residual;
  return e;
}

inline ObsEstimate obs_constant_heat(const CoefficientField& coef, const Grid& grid, const ControlGeometry& geo,
                                     HeatObsMode mode, const PowerOptions& opt = {}) {
  CoefficientField c = coef;
  c.mask = geo.omega();
  const HeatModel model(c, grid);
  require(model.chi().sum() > 0.0, "observability: observation region is empty");
  const auto M = heat_observation_matrices(model, mode);
  const auto gm = generalized_max(M.Out, M.Obs, opt);
  ObsEstimate e = obs_from(gm, norm(grid, gm.x));
  e.note = mode == HeatObsMode::Terminal ? "heat, terminal state from interior observation"
                                         : "heat adjoint, initial state from interior observation";
  return e;
}

/// Deterministic ratio sqrt(x.Out x / x.Obs x) maximized over a candidate set.
inline double heat_candidate_constant(const CoefficientField& coef, const Grid& grid, const ControlGeometry& geo,
                                      const std::vector<Vec>& candidates) {
  CoefficientField c = coef;
  c.mask = geo.omega();
  const HeatModel model(c, grid);
  const auto M = heat_observation_matrices(model, HeatObsMode::Terminal);
  double best = 0.0;
  for (const Vec& x : candidates) best = std::max(best, x.dot(M.Out * x) / x.dot(M.Obs * x));
  return std::sqrt(best);
}

struct SweepPoint {
  double param = 0.0;
  ObsEstimate estimate;
};

struct PotentialSweep {
  std::vector<SweepPoint> points;
  LineFit fit;  // log C against kappa^(2/3)
};

/// Constants for the constant potentials a = kappa; the envelope
/// log C ~ c0 + c1 kappa^(2/3) is fitted and reported.
inline PotentialSweep obs_potential_sweep(const CoefficientField& coef, const Grid& grid, const ControlGeometry& geo,
                                          const std::vector<double>& kappas, HeatObsMode mode,
                                          const PowerOptions& opt = {}) {
  PotentialSweep s;
  std::vector<double> x, y;
  for (double k : kappas) {
    CoefficientField c = coef;
    c.a = constant_tfn(k);
    c.a_time_dependent = false;
    SweepPoint p{k, obs_constant_heat(c, grid, geo, mode, opt)};
    x.push_back(std::pow(std::abs(k), 2.0 / 3.0));
    y.push_back(std::log(p.estimate.constant));
    s.points.push_back(std::move(p));
  }
  if (kappas.size() >= 2) s.fit = linear_fit(x, y);
  return s;
}

// ---------------------------------------------------------------------------
// Wave

enum class WaveObservation { Interior, BoundaryTrace };

struct WaveObsOptions {
  WaveObservation observation = WaveObservation::Interior;
  double filter = 0.5;   // keep modes with frequency <= filter * highest frequency
  bool reverse = false;  // parameterize by terminal data and solve backward
  PowerOptions power;
};

struct WaveModes {
  Mat Phi;  // Mass-orthonormal eigenvectors of K, columns
  Vec freq;
};

inline WaveModes wave_modes(const WaveModel& model, double filter) {
  require(filter > 0.0 && filter <= 1.0, "observability: filter must be in (0, 1]");
  const Mat K = Mat(model.stiffness_matrix());
  const Mat M = model.mass().asDiagonal();
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(K, M);
  if (es.info() != Eigen::Success) throw NumericalError("observability: modal decomposition failed");
  const Vec lam = es.eigenvalues();
  require(lam.minCoeff() > 0.0, "observability: stiffness must be positive definite");
  const double top = std::sqrt(lam.maxCoeff());
  int keep = 0;
  while (keep < lam.size() && std::sqrt(lam[keep]) <= filter * top * (1 + 1e-12)) ++keep;
  WaveModes w;
  w.Phi = es.eigenvectors().leftCols(keep);
  w.freq = lam.head(keep).cwiseSqrt();
  return w;
}

/// C^2 = max |data|^2 / int_0^T |observation|^2 dt over the filtered data space,
/// with |.| the discrete L2 x H^-1 norm (interior) or energy norm (trace). Interior observation uses the midpoint displacement
/// on omega; the boundary trace the one-sided normal derivative on Gamma*.
inline ObsEstimate obs_constant_wave(const CoefficientField& coef, const Grid& grid, const ControlGeometry& geo,
                                     const WaveObsOptions& opt = {}) {
  CoefficientField c = coef;
  c.mask = geo.omega();
  const WaveModel model(c, grid, {}, opt.reverse ? -1.0 : 1.0);
  const WaveModes modes = wave_modes(model, opt.filter);
  const int N = model.unknowns(), m = static_cast<int>(modes.freq.size());
  const int dim = 2 * m;
  // observation functional rows: interior -> sqrt(Mass chi) y, trace -> weighted boundary values
  Mat R;
  if (opt.observation == WaveObservation::Interior) {
    require(model.chi().sum() > 0.0, "observability: observation region is empty");
    R = Mat::Zero(N, N);
    for (int i = 0; i < N; ++i) R(i, i) = std::sqrt(model.mass()[i] * model.chi()[i]);
  } else {
    std::vector<std::pair<int, double>> rows;
    const int n0 = grid.n[0], n1 = grid.dim == 2 ? grid.n[1] : 1;
    for (const Face& f : geo.gamma_star) {
      const double h = grid.h[f.axis];
      const double w = grid.dim == 1 ? 1.0 : grid.h[1 - f.axis];
      const int count = f.axis == 0 ? n1 : n0;
      for (int t = 0; t < count; ++t) {
        int i, j;
        if (f.axis == 0) i = f.side > 0 ? n0 - 1 : 0, j = t;
        else i = t, j = f.side > 0 ? n1 - 1 : 0;
        rows.emplace_back(i + n0 * j, std::sqrt(w) / h);
      }
    }
    require(!rows.empty(), "observability: Gamma* is empty");
    R = Mat::Zero(static_cast<int>(rows.size()), N);
    for (std::size_t r = 0; r < rows.size(); ++r) R(r, rows[r].first) = rows[r].second;
  }
  Mat Y = Mat::Zero(N, dim), V = Mat::Zero(N, dim);
  Y.leftCols(m) = modes.Phi;
  V.rightCols(m) = modes.Phi;
  Mat Obs = Mat::Zero(dim, dim);
  for (int k = 0; k < grid.steps; ++k) {
    const Mat Y0 = Y;
    for (int col = 0; col < dim; ++col) {
      Vec y = Y.col(col), v = V.col(col);
      model.step(y, v, nullptr);
      Y.col(col) = y;
      V.col(col) = v;
    }
    const Mat Z = R * (0.5 * (Y0 + Y));
    Obs += grid.dt * Z.transpose() * Z;
  }
  // interior L2 observation recovers the L2 x H^-1 norm, the normal trace the energy norm
  Vec energy(dim);
  if (opt.observation == WaveObservation::Interior)
    energy << Vec::Ones(m), modes.freq.array().square().inverse().matrix();
  else
    energy << modes.freq.array().square().matrix(), Vec::Ones(m);
  const Mat Out = energy.asDiagonal();
  const auto gm = generalized_max(Out, Obs, opt.power);
  ObsEstimate e;
  e.constant = std::sqrt(std::max(gm.lambda, 0.0));
  e.iterations = gm.iterations;
  e.regularization = gm.delta;
  e.eigen_residual = gm.residual;
  const Vec coeffs = gm.x / std::sqrt(gm.x.dot(Out * gm.x));
  e.maximizer.resize(2 * N);
  e.maximizer << modes.Phi * coeffs.head(m), modes.Phi * coeffs.tail(m);
  e.note = std::string(grid.T() > geo.T_star ? "T > T*" : "T <= T*") + ", " + std::to_string(m) + " of " +
           std::to_string(N) + " modes kept";
  return e;
}

// ---------------------------------------------------------------------------
// Spectral inequality for sums of Dirichlet eigenfunctions

using BigFloat = boost::multiprecision::cpp_bin_float_100;

struct LRSpectrum {
  double r = 0.0;
  std::vector<std::array<int, 2>> modes;
  Mat gram;
  double lambda_min = 0.0;
  double constant = 0.0;
};

namespace detail {

inline BigFloat big_from(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return BigFloat(std::string(buf, res.ptr));
}

/// int_a^b 2 sin(i pi x) sin(j pi x) dx in closed form.
inline BigFloat sine_gram(int i, int j, const BigFloat& a, const BigFloat& b) {
  const BigFloat pi = boost::math::constants::pi<BigFloat>();
  auto S = [&](int k, const BigFloat& x) { return k == 0 ? x : BigFloat(sin(k * pi * x) / (k * pi)); };
  return (S(i - j, b) - S(i - j, a)) - (S(i + j, b) - S(i + j, a));
}

/// Householder reduction of a symmetric matrix to tridiagonal (d, e).
inline void tridiagonalize(std::vector<std::vector<BigFloat>>& A, std::vector<BigFloat>& d,
                           std::vector<BigFloat>& e) {
  const int n = static_cast<int>(A.size());
  for (int k = 0; k + 2 < n; ++k) {
    BigFloat alpha = 0;
    for (int i = k + 1; i < n; ++i) alpha += A[i][k] * A[i][k];
    alpha = sqrt(alpha);
    if (alpha == 0) continue;
    if (A[k + 1][k] > 0) alpha = -alpha;
    std::vector<BigFloat> v(n, BigFloat(0));
    v[k + 1] = A[k + 1][k] - alpha;
    for (int i = k + 2; i < n; ++i) v[i] = A[i][k];
    BigFloat vv = 0;
    for (int i = k + 1; i < n; ++i) vv += v[i] * v[i];
    if (vv == 0) continue;
    // A <- H A H with H = I - 2 v v^T / vv
    std::vector<BigFloat> p(n, BigFloat(0));
    for (int i = k; i < n; ++i)
      for (int j = k + 1; j < n; ++j) p[i] += A[i][j] * v[j];
    for (int i = k; i < n; ++i) p[i] *= 2 / vv;
    BigFloat K = 0;
    for (int i = k + 1; i < n; ++i) K += v[i] * p[i];
    K /= vv;
    for (int i = k; i < n; ++i) p[i] -= K * v[i];
    for (int i = k; i < n; ++i)
      for (int j = k; j < n; ++j) A[i][j] -= v[i] * p[j] + p[i] * v[j];
  }
  d.assign(n, BigFloat(0));
  e.assign(n > 1 ? n - 1 : 0, BigFloat(0));
  for (int i = 0; i < n; ++i) d[i] = A[i][i];
  for (int i = 0; i + 1 < n; ++i) e[i] = A[i + 1][i];
}

/// Number of eigenvalues of the tridiagonal (d, e) below sigma (Sturm count).
inline int sturm_count(const std::vector<BigFloat>& d, const std::vector<BigFloat>& e, const BigFloat& sigma) {
  const BigFloat tiny = std::numeric_limits<BigFloat>::min() * 1e10;
  int count = 0;
  BigFloat q = 1;
  for (std::size_t i = 0; i < d.size(); ++i) {
    q = d[i] - sigma - (i > 0 ? e[i - 1] * e[i - 1] / q : BigFloat(0));
    if (q == 0) q = -tiny;
    if (q < 0) ++count;
  }
  return count;
}

/// Smallest eigenvalue of a symmetric matrix: tridiagonalization, then
/// bisection on the Sturm count to relative accuracy 1e-30.
inline BigFloat min_eigenvalue(std::vector<std::vector<BigFloat>> A) {
  std::vector<BigFloat> d, e;
  tridiagonalize(A, d, e);
  BigFloat lo = d[0], hi = d[0];
  for (std::size_t i = 0; i < d.size(); ++i) {
    BigFloat r = 0;
    if (i > 0) r += abs(e[i - 1]);
    if (i < e.size()) r += abs(e[i]);
    lo = std::min(lo, BigFloat(d[i] - r));
    hi = std::min(hi, d[i]);
  }
  hi = std::max(hi, lo);
  if (sturm_count(d, e, BigFloat(0)) == 0 && lo < 0) lo = 0;
  for (int it = 0; it < 2000; ++it) {
    if (hi - lo <= BigFloat(1e-30) * abs(hi)) break;
    BigFloat mid = lo > 0 ? BigFloat(sqrt(lo * hi)) : (lo == 0 ? BigFloat(hi / 1024) : BigFloat((lo + hi) / 2));
    if (mid <= lo || mid >= hi) mid = (lo + hi) / 2;
    if (sturm_count(d, e, mid) >= 1) hi = mid;
    else lo = mid;
    if (lo == 0 && hi < std::numeric_limits<BigFloat>::min() * 1e20) break;
  }
  return (lo + hi) / 2;
}

}  // namespace detail

struct Interval {
  double lo = 0.0, hi = 1.0;
};

/// First `count` modes sqrt(2) sin(i pi x) on (0, 1) observed on omega.
inline LRSpectrum lr_gram_constant(int count, Interval omega) {
  require(count >= 1, "lr_gram_constant: need at least one mode");
  require(omega.lo >= 0.0 && omega.hi <= 1.0 && omega.hi > omega.lo, "lr_gram_constant: omega must be a non-empty subinterval of (0, 1)");
  const BigFloat a = detail::big_from(omega.lo), b = detail::big_from(omega.hi);
  std::vector<std::vector<BigFloat>> G(count, std::vector<BigFloat>(count));
  LRSpectrum s;
  s.gram.resize(count, count);
  for (int i = 0; i < count; ++i) {
    s.modes.push_back({i + 1, 0});
    for (int j = 0; j < count; ++j) {
      G[i][j] = detail::sine_gram(i + 1, j + 1, a, b);
      s.gram(i, j) = static_cast<double>(G[i][j]);
    }
  }
  s.r = std::pow(count * M_PI, 2);
  const BigFloat lmin = detail::min_eigenvalue(G);
  s.lambda_min = static_cast<double>(lmin);
  s.constant = static_cast<double>(1 / lmin);
  return s;
}

/// Modes phi_i(x) phi_j(y) with pi^2 (i^2 + j^2) <= r observed on omega_x x omega_y.
inline LRSpectrum lr_gram_constant_2d(double r, Interval wx, Interval wy) {
  require(wx.hi > wx.lo && wy.hi > wy.lo, "lr_gram_constant: omega must be non-empty");
  LRSpectrum s;
  s.r = r;
  const int top = static_cast<int>(std::sqrt(r) / M_PI) + 1;
  for (int i = 1; i <= top; ++i)
    for (int j = 1; j <= top; ++j)
      if (M_PI * M_PI * (i * i + j * j) <= r) s.modes.push_back({i, j});
  require(!s.modes.empty(), "lr_gram_constant: no mode below the cutoff");
  const BigFloat ax = detail::big_from(wx.lo), bx = detail::big_from(wx.hi);
  const BigFloat ay = detail::big_from(wy.lo), by = detail::big_from(wy.hi);
  const int n = static_cast<int>(s.modes.size());
  std::vector<std::vector<BigFloat>> G(n, std::vector<BigFloat>(n));
  s.gram.resize(n, n);
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q) {
      G[p][q] = detail::sine_gram(s.modes[p][0], s.modes[q][0], ax, bx) *
                detail::sine_gram(s.modes[p][1], s.modes[q][1], ay, by);
      s.gram(p, q) = static_cast<double>(G[p][q]);
    }
  const BigFloat lmin = detail::min_eigenvalue(G);
  s.lambda_min = static_cast<double>(lmin);
  s.constant = static_cast<double>(1 / lmin);
  return s;
}

struct LRGrowth {
  std::vector<double> r;
  std::vector<double> constants;
  LineFit fit;  // log C against sqrt(r)
};

inline LRGrowth lr_growth_fit_counts(const std::vector<int>& counts, Interval omega) {
  require(counts.size() >= 4, "lr_growth_fit: need at least 4 cutoffs");
  LRGrowth g;
  std::vector<double> x, y;
  for (int k : counts) {
    const auto s = lr_gram_constant(k, omega);
    g.r.push_back(s.r);
    g.constants.push_back(s.constant);
    x.push_back(std::sqrt(s.r));
    y.push_back(std::log(s.constant));
  }
  g.fit = linear_fit(x, y);
  return g;
}

inline LRGrowth lr_growth_fit_2d(const std::vector<double>& r_values, Interval wx, Interval wy) {
  require(r_values.size() >= 4, "lr_growth_fit: need at least 4 cutoffs");
  LRGrowth g;
  std::vector<double> x, y;
  for (double r : r_values) {
    const auto s = lr_gram_constant_2d(r, wx, wy);
    g.r.push_back(r);
    g.constants.push_back(s.constant);
    x.push_back(std::sqrt(r));
    y.push_back(std::log(s.constant));
  }
  g.fit = linear_fit(x, y);
  return g;
}

// ---------------------------------------------------------------------------
// Stochastic heat: Monte Carlo lower bound for |z(T)| <= C |z|_{L2(Q_omega)}

struct StochObsOptions {
  int n_candidates = 4;
  int n_paths = 256;
  std::uint64_t seed = 0;
};

inline std::vector<Vec> obs_candidates(const Grid& g, int count, std::uint64_t seed) {
  std::vector<Vec> c;
  c.push_back(sine_mode(g, 1));
  for (int i = 1; i < count; ++i) {
    Rng rng(derive_seed(seed, "obs_candidate", i));
    Vec v(g.size());
    for (auto& x : v) x = rng.normal();
    c.push_back(v);
  }
  return c;
}

inline ObsEstimate stoch_obs_lower_bound(const CoefficientField& coef, const Grid& grid, const ControlGeometry& geo,
                                         const StochObsOptions& opt) {
  require(opt.n_paths >= 256, "stoch_obs_lower_bound: need at least 256 paths");
  require(opt.n_candidates >= 1, "stoch_obs_lower_bound: need at least one candidate");
  CoefficientField c = coef;
  c.mask = geo.omega();
  const HeatModel model(c, grid);
  const Vec cvec = sample(grid, c.noise);
  const Vec wchi = grid.cell() * model.chi();
  const auto cands = obs_candidates(grid, opt.n_candidates, opt.seed);
  ObsEstimate best;
  double best_ratio = -1.0;
  for (int i = 0; i < opt.n_candidates; ++i) {
    const Vec& z0 = cands[i];
    const int M = opt.n_paths;
    std::vector<double> A(M), B(M);
    for (int p = 0; p < M; ++p) {
      const std::uint64_t s = derive_seed(derive_seed(opt.seed, "stoch_obs", i), "path", p);
      const Trajectory tr = stoch_heat_path(model, cvec, z0, s, StochOptions{});
      A[p] = dot(grid, tr.y.back(), tr.y.back());
      double obs = 0.0;
      for (int k = 0; k <= grid.steps; ++k)
        obs += (k == 0 || k == grid.steps ? 0.5 : 1.0) * grid.dt * tr.y[k].dot(wchi.cwiseProduct(tr.y[k]));
      B[p] = obs;
    }
    double ma = 0, mb = 0;
    for (int p = 0; p < M; ++p) ma += A[p] / M, mb += B[p] / M;
    const double R = ma / mb;
    double var = 0.0;
    for (int p = 0; p < M; ++p) var += std::pow(A[p] - R * B[p], 2) / (M - 1);
    const double sdR = std::sqrt(var / M) / mb;
    if (R > best_ratio) {
      best_ratio = R;
      best.constant = std::sqrt(R);
      best.half_width = 1.96 * sdR / (2.0 * std::sqrt(R));
      best.maximizer = z0 / norm(grid, z0);
      best.iterations = i;
    }
  }
  best.note = "Monte Carlo lower bound over " + std::to_string(opt.n_candidates) + " candidates, " +
              std::to_string(opt.n_paths) + " paths each";
  return best;
}

}  // namespace pdectl
