#pragma once

// Control synthesis by duality.
//
// Heat: penalized HUM. With Lambda phiT the terminal state reached from zero
// initial data under u = chi phi (phi the discrete adjoint from phiT), solve
//   (Lambda + eps I) phiT = -y_free(T)
// by CG in the grid inner product; then y(T) = -eps phiT.
//
// Wave: HUM on adjoint terminal data (K a, Mass b), which makes the Gramian
// symmetric positive semidefinite in the energy inner product
// <(a,b),(c,d)> = a.K c + b.Mass d, the norm in which residuals are reported.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "pdectl/geometry.hpp"
#include "pdectl/heat.hpp"
#include "pdectl/linalg.hpp"
#include "pdectl/wave.hpp"

namespace pdectl {

struct CgOptions {
  double tol = 1e-8;
  int max_iter = 500;
  bool throw_on_failure = true;
};

struct ControlResult {
  ControlSeries control;
  Trajectory state;
  double terminal_residual = 0.0;
  double relative_residual = 0.0;
  int cg_iterations = 0;
  double cg_relative_residual = 0.0;
  bool converged = true;
  double epsilon = 0.0;
  double cost = 0.0;
  std::vector<double> cg_history;
  Vec adjoint_terminal;
  int outer_iterations = 0;
  std::vector<double> outer_history;
  bool blew_up = false;
  std::vector<std::string> warnings;
};

inline double control_cost(const Grid& g, const ControlSeries& u) {
  double s = 0.0;
  for (const auto& uk : u) s += g.dt * dot(g, uk, uk);
  return std::sqrt(s);
}

inline std::string cg_failure(const std::string& what, const CgResult& r) {
  std::ostringstream os;
  os << what << ": CG did not reach the tolerance after " << r.iterations
     << " iterations (relative residual " << r.relative_residual << "; last: " << history_tail(r.history) << ")";
  return os.str();
}

// ---------------------------------------------------------------------------
// Heat

class HeatGramian {
 public:
  explicit HeatGramian(const HeatModel& model) : model_(model) {}

  ControlSeries control_from(const Vec& phiT) const {
    const Trajectory psi = model_.backward(phiT);
    ControlSeries u(psi.mid.size());
    for (std::size_t k = 0; k < u.size(); ++k) u[k] = model_.chi().cwiseProduct(psi.mid[k]);
    return u;
  }

  Vec apply(const Vec& phiT) const {
    return model_.terminal(Vec::Zero(phiT.size()), control_from(phiT));
  }

  const HeatModel& model() const { return model_; }

 private:
  const HeatModel& model_;
};

/// Penalized HUM for a prepared heat model (mask, potentials already set).
inline ControlResult hum_heat(const HeatModel& model, const Vec& y0, double eps, const CgOptions& cg = {}) {
  require(eps > 0.0, "null control: epsilon must be > 0");
  const Grid& g = model.grid();
  require(y0.size() == g.size(), "null control: initial data size");
  require(model.chi().sum() > 0.0, "null control: control region is empty");
  ControlResult res;
  res.epsilon = eps;
  if (max_abs(y0) == 0.0) {
    res.control.assign(g.steps, Vec::Zero(g.size()));
    res.state = model.forward(y0, {});
    res.adjoint_terminal = Vec::Zero(g.size());
    return res;
  }
  const HeatGramian G(model);
  const Vec yfree = model.terminal(y0, {});
  auto op = [&](const Vec& x) -> Vec { return G.apply(x) + eps * x; };
  auto ip = [&](const Vec& a, const Vec& b) { return dot(g, a, b); };
  const CgResult sol = conjugate_gradient(op, Vec(-yfree), ip, cg.tol, cg.max_iter);
  res.cg_iterations = sol.iterations;
  res.cg_relative_residual = sol.relative_residual;
  res.cg_history = sol.history;
  res.converged = sol.converged;
  if (!sol.converged && cg.throw_on_failure) throw NumericalError(cg_failure("null control", sol));
  res.adjoint_terminal = sol.x;
  res.control = G.control_from(sol.x);
  res.state = model.forward(y0, res.control);
  res.terminal_residual = norm(g, res.state.y.back());
  res.relative_residual = res.terminal_residual / norm(g, y0);
  res.cost = control_cost(g, res.control);
  return res;
}

inline CoefficientField with_geometry_mask(CoefficientField coef, const ControlGeometry& geo) {
  coef.mask = geo.omega();
  return coef;
}

inline ControlResult hum_null_control_heat(const CoefficientField& coef, const Grid& grid,
                                           const ControlGeometry& geo, const Vec& y0,
                                           double eps = 1e-8, const CgOptions& cg = {}) {
  const HeatModel model(with_geometry_mask(coef, geo), grid);
  return hum_heat(model, y0, eps, cg);
}

// ---------------------------------------------------------------------------
// Wave

class WaveGramian {
 public:
  explicit WaveGramian(const WaveModel& model) : model_(model), N_(model.unknowns()) {}

  int unknowns() const { return N_; }

  /// Energy inner product on stacked (y, v).
  double ip(const Vec& a, const Vec& b) const {
    const auto& K = model_.stiffness_matrix();
    return a.head(N_).dot(K * b.head(N_)) + a.tail(N_).dot(model_.mass().cwiseProduct(b.tail(N_)));
  }

  ControlSeries control_from(const Vec& ab) const {
    Vec yh = model_.stiffness_matrix() * ab.head(N_);
    Vec vh = model_.mass().cwiseProduct(ab.tail(N_));
    const int steps = model_.grid().steps;
    ControlSeries u(steps);
    for (int k = steps - 1; k >= 0; --k) u[k] = model_.chi().cwiseProduct(model_.adjoint_step(yh, vh));
    return u;
  }

  /// Terminal (y, v) from initial (y0, v0) under control u.
  Vec run(const Vec& y0, const Vec& v0, const ControlSeries& u, Trajectory* tr = nullptr) const {
    Vec y = model_.pad(y0), v = model_.pad(v0);
    if (tr) {
      tr->grid = model_.grid();
      tr->y = {y};
      tr->v = {v};
    }
    for (int k = 0; k < model_.grid().steps; ++k) {
      if (u.empty()) {
        model_.step(y, v, nullptr);
      } else {
        const Vec imp = model_.control_impulse(u[k]);
        model_.step(y, v, &imp);
      }
      if (tr) {
        tr->y.push_back(y);
        tr->v.push_back(v);
      }
    }
    Vec out(2 * N_);
    out << y, v;
    return out;
  }

  Vec apply(const Vec& ab) const {
    const Vec z = Vec::Zero(N_);
    return run(z, z, control_from(ab));
  }

 private:
  const WaveModel& model_;
  int N_;
};

inline ControlResult hum_exact_control_wave(const CoefficientField& coef, const Grid& grid,
                                            const ControlGeometry& geo, const Vec& y0, const Vec& y1,
                                            const Vec& z0, const Vec& z1, const CgOptions& cg = {},
                                            const WaveOptions& opt = {}) {
  const WaveModel model(with_geometry_mask(coef, geo), grid, opt);
  require(model.chi().sum() > 0.0, "exact control: control region is empty");
  const WaveGramian G(model);
  const int N = G.unknowns();
  ControlResult res;
  if (grid.T() <= geo.T_star) {
    std::ostringstream os;
    os << "T = " << grid.T() << " does not exceed T* = " << geo.T_star << "; observability may fail";
    res.warnings.push_back(os.str());
  }
  Vec target(2 * N);
  target << model.pad(z0), model.pad(z1);
  const Vec rhs = target - G.run(y0, y1, {});
  const double rhs_norm = std::sqrt(G.ip(rhs, rhs));
  if (rhs_norm == 0.0) {
    res.control.assign(grid.steps, Vec::Zero(N));
    G.run(y0, y1, {}, &res.state);
    res.adjoint_terminal = Vec::Zero(2 * N);
    return res;
  }
  auto op = [&](const Vec& x) -> Vec { return G.apply(x); };
  auto ip = [&](const Vec& a, const Vec& b) { return G.ip(a, b); };
  const CgResult sol = conjugate_gradient(op, rhs, ip, cg.tol, cg.max_iter);
  res.cg_iterations = sol.iterations;
  res.cg_relative_residual = sol.relative_residual;
  res.cg_history = sol.history;
  res.converged = sol.converged;
  if (!sol.converged && cg.throw_on_failure) throw NumericalError(cg_failure("exact control", sol));
  res.adjoint_terminal = sol.x;
  res.control = G.control_from(sol.x);
  const Vec end = G.run(y0, y1, res.control, &res.state);
  const Vec miss = end - target;
  res.terminal_residual = std::sqrt(G.ip(miss, miss));
  res.relative_residual = res.terminal_residual / rhs_norm;
  res.cost = control_cost(grid, res.control);
  return res;
}

// ---------------------------------------------------------------------------
// Semilinear heat

struct OuterOptions {
  double tol = 1e-6;     // on max_k |y_{j+1}(t_k) - y_j(t_k)|_inf / |y0|_inf
  int max_outer = 20;
  double relaxation = 1.0;
};

/// Fixed point on the frozen potential -q(y_j(t_k)); each sweep is a linear
/// penalized HUM solve. At a fixed point the controlled trajectory solves the
/// lagged semilinear scheme exactly.
inline ControlResult semilinear_null_control(const CoefficientField& coef, const Grid& grid,
                                             const ControlGeometry& geo, const Vec& y0,
                                             const LogNonlinearity& nl, double eps = 1e-8,
                                             const CgOptions& cg = {}, const OuterOptions& outer = {}) {
  nl.validate();
  require(outer.max_outer >= 1, "semilinear control: max_outer must be >= 1");
  require(outer.relaxation > 0.0 && outer.relaxation <= 1.0, "semilinear control: relaxation must be in (0, 1]");
  const CoefficientField c = with_geometry_mask(coef, geo);
  const int n = grid.size();
  std::vector<Vec> prev(grid.steps, Vec::Zero(n));
  const double scale = std::max(max_abs(y0), 1e-300);
  std::vector<double> history;
  for (int it = 1; it <= outer.max_outer; ++it) {
    std::vector<Vec> pot(grid.steps);
    for (int k = 0; k < grid.steps; ++k) pot[k] = lagged_potential(nl, prev[k]);
    const HeatModel model(c, grid, std::move(pot));
    ControlResult res = hum_heat(model, y0, eps, cg);
    double diff = 0.0;
    for (int k = 0; k < grid.steps; ++k) diff = std::max(diff, max_abs(res.state.y[k] - prev[k]));
    diff /= scale;
    history.push_back(diff);
    for (int k = 0; k < grid.steps; ++k)
      prev[k] = outer.relaxation * res.state.y[k] + (1.0 - outer.relaxation) * prev[k];
    if (diff <= outer.tol) {
      res.outer_iterations = it;
      res.outer_history = history;
      if (nl.r >= 1.5) res.warnings.push_back("r >= 3/2 lies outside the guaranteed growth regime");
      const Trajectory check = solve_semilinear_heat(c, grid, y0, res.control, nl);
      res.blew_up = check.blew_up;
      res.state = check;
      res.terminal_residual = check.blew_up ? INFINITY : norm(grid, check.y.back());
      res.relative_residual = max_abs(y0) == 0.0 ? 0.0 : res.terminal_residual / norm(grid, y0);
      return res;
    }
  }
  throw NumericalError("semilinear control: outer fixed point did not converge in " +
                       std::to_string(outer.max_outer) + " iterations (history: " + history_tail(history, 20) + ")");
}

}  // namespace pdectl
