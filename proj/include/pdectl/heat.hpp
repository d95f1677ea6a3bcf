#pragma once

// Heat-type solvers.
//
// Writing the semi-discrete equation as y' = L(t) y + chi u with
// L = -K/w + C + diag(a), one Crank-Nicolson step reads
//   Im_k y_{k+1} = Ex_k y_k + dt chi u_k,
//   Im_k = I - dt/2 L_k,  Ex_k = I + dt/2 L_k,  L_k = L(t_k + dt/2),
// with the control held constant on each step. The backward solver is the
// exact discrete adjoint of this recursion:
//   phi_k = Im_k^{-T} psi_{k+1},  psi_k = Ex_k^T phi_k,
// so that <y_N, psi_N> - <y_0, psi_0> = dt sum_k <chi u_k, phi_k> holds to
// round-off. phi_k is the adjoint sampled at the half step.

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "pdectl/grid.hpp"
#include "pdectl/linalg.hpp"
#include "pdectl/rng.hpp"

namespace pdectl {

class HeatModel {
 public:
  /// `extra_potential`: empty, one vector for all steps, or one per step.
  HeatModel(const CoefficientField& coef, const Grid& grid, std::vector<Vec> extra_potential = {})
      : grid_(grid), extra_(std::move(extra_potential)) {
    grid.validate();
    require(extra_.empty() || extra_.size() == 1 || static_cast<int>(extra_.size()) == grid.steps,
            "HeatModel: extra potential must have 0, 1 or `steps` entries");
    for (const auto& e : extra_) require(e.size() == grid.size(), "HeatModel: potential size");
    chi_ = mask_vector(grid, coef.mask);
    base_ = SpMat(-(1.0 / grid.cell()) * stiffness(grid, coef)) + convection(grid, coef);
    coef_a_ = coef.a;
    const bool varying = coef.a_time_dependent || extra_.size() > 1;
    const int count = varying ? grid.steps : 1;
    im_.resize(count);
    ex_.resize(count);
    for (int k = 0; k < count; ++k) build(k);
  }

  const Grid& grid() const { return grid_; }
  const Vec& chi() const { return chi_; }

  /// Full generator L at step k (used by explicit moment checks).
  Vec potential(int k) const {
    Vec a = sample(grid_, coef_a_, (k + 0.5) * grid_.dt);
    if (!extra_.empty()) a += extra_.size() == 1 ? extra_[0] : extra_[k];
    return a;
  }

  Vec explicit_part(int k, const Vec& y) const { return ex_[slot(k)] * y; }
  Vec implicit_solve(int k, const Vec& b) const { return im_[slot(k)].solve(b); }

  Vec step(int k, const Vec& y, const Vec* control) const {
    Vec rhs = ex_[slot(k)] * y;
    if (control) rhs += grid_.dt * chi_.cwiseProduct(*control);
    return im_[slot(k)].solve(rhs);
  }

  /// Returns psi_k; writes phi_k to `mid`.
  Vec adjoint_step(int k, const Vec& psi_next, Vec* mid) const {
    Vec phi = im_[slot(k)].solve_t(psi_next);
    Vec psi = ex_[slot(k)].transpose() * phi;
    if (mid) *mid = std::move(phi);
    return psi;
  }

  Trajectory forward(const Vec& y0, const ControlSeries& u) const {
    require(y0.size() == grid_.size(), "solve_heat: initial data size");
    require(u.empty() || static_cast<int>(u.size()) == grid_.steps,
            "solve_heat: control must have one entry per step");
    Trajectory tr;
    tr.grid = grid_;
    tr.y.reserve(grid_.steps + 1);
    tr.y.push_back(y0);
    for (int k = 0; k < grid_.steps; ++k)
      tr.y.push_back(step(k, tr.y.back(), u.empty() ? nullptr : &u[k]));
    return tr;
  }

  /// Terminal state only (no snapshots kept).
  Vec terminal(const Vec& y0, const ControlSeries& u) const {
    Vec y = y0;
    for (int k = 0; k < grid_.steps; ++k) y = step(k, y, u.empty() ? nullptr : &u[k]);
    return y;
  }

  Trajectory backward(const Vec& psiT) const {
    require(psiT.size() == grid_.size(), "solve_heat: terminal data size");
    Trajectory tr;
    tr.grid = grid_;
    tr.y.assign(grid_.steps + 1, Vec());
    tr.mid.assign(grid_.steps, Vec());
    tr.y[grid_.steps] = psiT;
    for (int k = grid_.steps - 1; k >= 0; --k) tr.y[k] = adjoint_step(k, tr.y[k + 1], &tr.mid[k]);
    return tr;
  }

 private:
  int slot(int k) const { return im_.size() == 1 ? 0 : k; }

  void build(int k) {
    const int N = grid_.size();
    const SpMat L = base_ + diag(potential(k));
    const SpMat I = identity(N);
    const SpMat im = I - 0.5 * grid_.dt * L;
    ex_[k] = I + 0.5 * grid_.dt * L;
    im_[k] = Factored(im);
  }

  Grid grid_;
  std::vector<Vec> extra_;
  Vec chi_;
  SpMat base_;
  SpaceTimeFn coef_a_;
  std::vector<Factored> im_;
  std::vector<SpMat> ex_;
};

inline Trajectory solve_heat(const CoefficientField& coef, const Grid& grid, const Vec& y0,
                             const ControlSeries& control = {},
                             Direction direction = Direction::Forward) {
  const HeatModel model(coef, grid);
  if (direction == Direction::Forward) return model.forward(y0, control);
  require(control.empty(), "solve_heat: the backward (adjoint) solve takes no control");
  return model.backward(y0);
}

// ---------------------------------------------------------------------------
// Semilinear heat  y_t - div(p grad y) + f(y) = a y + chi u,
// f(s) = sign * s * ln^r(1 + |s|).

struct LogNonlinearity {
  double r = 0.0;
  int sign = -1;

  double f(double s) const { return sign * s * std::pow(std::log1p(std::abs(s)), r); }

  double fprime(double s) const {
    const double as = std::abs(s);
    if (as == 0.0) return r == 0.0 ? sign : 0.0;
    const double L = std::log1p(as);
    return sign * (std::pow(L, r) + r * as * std::pow(L, r - 1.0) / (1.0 + as));
  }

  /// q(s) = int_0^1 f'(tau s) d tau = f(s)/s, with q(0) = f'(0).
  double secant(double s) const {
    if (s == 0.0) return fprime(0.0);
    return sign * std::pow(std::log1p(std::abs(s)), r);
  }

  void validate() const {
    require(r >= 0.0, "nonlinearity: r_exponent must be >= 0");
    require(sign == 1 || sign == -1, "nonlinearity: sign must be +1 or -1");
  }
};

inline constexpr double kBlowupThreshold = 1e8;

/// Potential entering the linearized equation at state y: -q(y) node-wise.
inline Vec lagged_potential(const LogNonlinearity& nl, const Vec& y) {
  Vec a(y.size());
  for (int i = 0; i < y.size(); ++i) a[i] = -nl.secant(y[i]);
  return a;
}

/// Lagged-coefficient Crank-Nicolson: the nonlinearity enters as the
/// potential -q(y_k), q(s) = f(s)/s, frozen over
/// step k. For r = 0 this is exactly the linear scheme with potential -sign.
inline Trajectory solve_semilinear_heat(const CoefficientField& coef, const Grid& grid,
                                        const Vec& y0, const ControlSeries& control,
                                        const LogNonlinearity& nl,
                                        double blowup = kBlowupThreshold) {
  nl.validate();
  require(y0.size() == grid.size(), "solve_semilinear_heat: initial data size");
  require(control.empty() || static_cast<int>(control.size()) == grid.steps,
          "solve_semilinear_heat: control must have one entry per step");
  Trajectory tr;
  tr.grid = grid;
  tr.y.push_back(y0);
  Grid one = grid.with_time(grid.dt, 1);
  for (int k = 0; k < grid.steps; ++k) {
    const Vec& y = tr.y.back();
    CoefficientField c = coef;
    const double t0 = k * grid.dt;
    c.a = [a = coef.a, t0](double t, double x, double yy) { return a(t0 + t, x, yy); };
    const HeatModel step(c, one, {lagged_potential(nl, y)});
    Vec next = step.step(0, y, control.empty() ? nullptr : &control[k]);
    if (!next.allFinite() || max_abs(next) > blowup) {
      tr.blew_up = true;
      tr.blowup_step = k + 1;
      tr.y.push_back(std::move(next));
      break;
    }
    tr.y.push_back(std::move(next));
  }
  return tr;
}

/// Smallest amplitude A (to relative `rel_tol`) for which A * shape blows up
/// within the grid horizon, searched on [lo, hi]; nullopt if hi does not blow up.
inline std::optional<double> blowup_threshold(const CoefficientField& coef, const Grid& grid,
                                              const Vec& shape, const LogNonlinearity& nl,
                                              double lo, double hi, double rel_tol = 1e-3) {
  auto blows = [&](double A) { return solve_semilinear_heat(coef, grid, A * shape, {}, nl).blew_up; };
  if (!blows(hi)) return std::nullopt;
  if (blows(lo)) return lo;
  while (hi - lo > rel_tol * hi) {
    const double mid = 0.5 * (lo + hi);
    (blows(mid) ? hi : lo) = mid;
  }
  return hi;
}

// ---------------------------------------------------------------------------
// Stochastic heat  dz - div(p grad z) dt = [a1 . grad z + a z] dt + c z dB,
// one scalar Brownian motion per path. Drift by Crank-Nicolson, noise by an
// explicit Ito increment: Im_k z_{k+1} = Ex_k z_k + c z_k dB_k.

struct StochOptions {
  int record_every = 1;  // keep snapshot k when k % record_every == 0 (and the last)
};

inline Trajectory stoch_heat_path(const HeatModel& model, const Vec& cvec, const Vec& z0,
                                  std::uint64_t path_seed, const StochOptions& opt) {
  const Grid& g = model.grid();
  Rng rng(path_seed);
  const double sdt = std::sqrt(g.dt);
  Trajectory tr;
  tr.grid = g;
  tr.y.push_back(z0);
  Vec z = z0;
  for (int k = 0; k < g.steps; ++k) {
    const double dB = sdt * rng.normal();
    Vec rhs = model.explicit_part(k, z);
    if (dB != 0.0) rhs += dB * cvec.cwiseProduct(z);
    z = model.implicit_solve(k, rhs);
    if ((k + 1) % opt.record_every == 0 || k + 1 == g.steps) tr.y.push_back(z);
  }
  return tr;
}

inline std::vector<Trajectory> solve_stoch_heat(const CoefficientField& coef, const Grid& grid,
                                                const Vec& z0, std::uint64_t seed, int n_paths,
                                                const StochOptions& opt = {}) {
  require(n_paths >= 1, "solve_stoch_heat: n_paths must be >= 1");
  require(opt.record_every >= 1, "solve_stoch_heat: record_every must be >= 1");
  require(z0.size() == grid.size(), "solve_stoch_heat: initial data size");
  const HeatModel model(coef, grid);
  const Vec c = sample(grid, coef.noise);
  std::vector<Trajectory> out;
  out.reserve(n_paths);
  for (int p = 0; p < n_paths; ++p)
    out.push_back(stoch_heat_path(model, c, z0, derive_seed(seed, "stoch_heat", p), opt));
  return out;
}

}  // namespace pdectl
