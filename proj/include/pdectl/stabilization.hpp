#pragma once

// Damped-wave experiments: energy series and decay-law fits on the tail half
// of the horizon.
//   exponential:  E(t) ~ M e^{-r t} E(0)          (log E linear in t)
//   logarithmic:  E(t) ~ (C / ln(2 + t))^2 E_D(0)  (one-parameter fit in log E)
// E_D(0) is the graph-norm energy E(y0, y1) + E(y1, -Mass^{-1} K y0).

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "pdectl/stats.hpp"
#include "pdectl/wave.hpp"

namespace pdectl {

enum class DecayModel { Exponential, Logarithmic };

inline std::string to_string(DecayModel m) { return m == DecayModel::Exponential ? "exponential" : "logarithmic"; }

struct DecayFit {
  DecayModel model = DecayModel::Exponential;
  double rate_or_C = 0.0;
  double r_squared = 0.0;
  std::array<double, 2> window{0.0, 0.0};
  double log_intercept = 0.0;
  bool degenerate = false;

  /// Fitted log E(t).
  double predict_log(double t) const {
    return model == DecayModel::Exponential ? log_intercept - rate_or_C * t
                                            : log_intercept - 2.0 * std::log(std::log(2.0 + t));
  }
};

struct DecayExperiment {
  std::vector<double> t;
  std::vector<double> energy;
  DecayFit exponential;
  DecayFit logarithmic;
  bool monotone = true;   // E non-increasing up to round-off
  bool dissipative = true;  // some energy was lost over the horizon
  double energy_graph0 = 0.0;
  std::string preferred;  // model with the larger r^2
  std::vector<Vec> states;  // displacement snapshots when recording
};

namespace detail {

inline double floor_energy(double e0) { return 1e-28 * e0; }

}  // namespace detail

inline DecayFit fit_exponential(const std::vector<double>& t, const std::vector<double>& E) {
  DecayFit f;
  f.model = DecayModel::Exponential;
  const std::size_t start = t.size() / 2;
  f.window = {t[start], t.back()};
  std::vector<double> x, y;
  const double floor = detail::floor_energy(E.front());
  for (std::size_t k = start; k < t.size(); ++k)
    if (E[k] > floor) x.push_back(t[k]), y.push_back(std::log(E[k]));
  if (E.front() <= 0.0 || x.size() < 2) {
    f.degenerate = true;
    return f;
  }
  const LineFit lf = linear_fit(x, y);
  f.rate_or_C = -lf.slope;
  f.log_intercept = lf.intercept;
  f.r_squared = lf.r_squared;
  return f;
}

inline DecayFit fit_logarithmic(const std::vector<double>& t, const std::vector<double>& E, double ED0) {
  DecayFit f;
  f.model = DecayModel::Logarithmic;
  const std::size_t start = t.size() / 2;
  f.window = {t[start], t.back()};
  std::vector<double> y, z;  // y = log E, z = log(ED0) - 2 log ln(2 + t)
  const double floor = detail::floor_energy(E.front());
  for (std::size_t k = start; k < t.size(); ++k)
    if (E[k] > floor) {
      y.push_back(std::log(E[k]));
      z.push_back(std::log(ED0) - 2.0 * std::log(std::log(2.0 + t[k])));
    }
  if (ED0 <= 0.0 || y.size() < 2) {
    f.degenerate = true;
    return f;
  }
  double shift = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) shift += (y[i] - z[i]) / y.size();
  f.rate_or_C = std::exp(0.5 * shift);
  f.log_intercept = std::log(ED0) + shift;
  double my = 0.0;
  for (double v : y) my += v / y.size();
  double sse = 0.0, sst = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    sse += std::pow(y[i] - z[i] - shift, 2);
    sst += std::pow(y[i] - my, 2);
  }
  f.r_squared = sst > 0.0 ? std::max(0.0, 1.0 - sse / sst) : (sse <= 1e-30 ? 1.0 : 0.0);
  return f;
}

/// sin^6 pulse: smooth and compatible with the damped boundary condition at t = 0.
inline Vec smooth_pulse(const Grid& g) {
  Vec v = sine_mode(g, 1);
  return v.array().pow(6).matrix();
}

/// `record_every` > 0 keeps every K-th displacement (and the last).
inline DecayExperiment run_decay(const WaveModel& model, const Vec& y0, const Vec& y1, int record_every = 0) {
  const Grid& g = model.grid();
  DecayExperiment ex;
  Vec y = model.pad(y0), v = model.pad(y1);
  const Vec acc = -(model.stiffness_matrix() * y).cwiseQuotient(model.mass());
  ex.energy_graph0 = model.energy(y, v) + model.energy(v, acc);
  ex.t.push_back(0.0);
  ex.energy.push_back(model.energy(y, v));
  if (record_every > 0) ex.states.push_back(y);
  for (int k = 0; k < g.steps; ++k) {
    model.step(y, v, nullptr);
    ex.t.push_back((k + 1) * g.dt);
    ex.energy.push_back(model.energy(y, v));
    if (record_every > 0 && ((k + 1) % record_every == 0 || k + 1 == g.steps)) ex.states.push_back(y);
  }
  for (std::size_t k = 1; k < ex.energy.size(); ++k)
    if (ex.energy[k] > ex.energy[k - 1] + 1e-13 * ex.energy.front()) ex.monotone = false;
  ex.exponential = fit_exponential(ex.t, ex.energy);
  ex.logarithmic = fit_logarithmic(ex.t, ex.energy, ex.energy_graph0);
  const double drop = ex.energy.front() > 0.0 ? 1.0 - ex.energy.back() / ex.energy.front() : 0.0;
  ex.dissipative = drop > 1e-9;
  ex.preferred = ex.exponential.r_squared >= ex.logarithmic.r_squared ? "exponential" : "logarithmic";
  return ex;
}

/// Robin damping p y_x + a y_t = 0 at x = L (1D).
inline DecayExperiment boundary_damping_experiment(const CoefficientField& coef, const Grid& grid, double a_gain,
                                                   const Vec& y0, const Vec& y1, int record_every = 0) {
  require(a_gain >= 0.0, "boundary damping: gain must be >= 0");
  WaveOptions opt;
  opt.damping = DampingMode::Boundary;
  opt.boundary_gain = a_gain;
  const WaveModel model(coef, grid, opt);
  return run_decay(model, y0, y1, record_every);
}

/// f(s) = |s|^{q-1} s, so s f(s) >= 0 and Phi(s) = |s|^{q+1} / (q + 1).
struct PowerNonlinearity {
  double q = 3.0;
  double f(double s) const { return std::pow(std::abs(s), q - 1.0) * s; }
  double primitive(double s) const { return std::pow(std::abs(s), q + 1.0) / (q + 1.0); }
};

/// y_tt - div(p grad y) + c0 b(x) y_t + f(y) = 0.
inline DecayExperiment local_damping_experiment(const CoefficientField& coef, const Grid& grid, const SpaceFn& b,
                                                double c0, const std::optional<PowerNonlinearity>& f, const Vec& y0,
                                                const Vec& y1, int record_every = 0) {
  require(c0 >= 0.0 && std::isfinite(c0), "local damping: c0 must be >= 0");
  for (int i = 0; i < grid.size(); ++i) {
    const double v = b(grid.x(i), grid.y(i));
    require(v >= 0.0 && std::isfinite(v), "local damping: damping profile must be >= 0");
  }
  if (f) require(f->q >= 1.0 && std::isfinite(f->q), "local damping: exponent q must be >= 1");
  CoefficientField c = coef;
  c.damping = b;
  c.c0 = c0;
  WaveOptions opt;
  opt.damping = DampingMode::Interior;
  if (f) {
    opt.f = [nl = *f](double s) { return nl.f(s); };
    opt.F = [nl = *f](double s) { return nl.primitive(s); };
  }
  const WaveModel model(c, grid, opt);
  return run_decay(model, y0, y1, record_every);
}

}  // namespace pdectl
