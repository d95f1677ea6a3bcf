#pragma once

// Wave-type solvers in mass form
//   Mass y'' + K y + D y' + Mass f(y) = Mass chi u,
// Mass = w I (h/2 on a Robin node), K the stiffness minus the potential,
// D the damping. One implicit-midpoint step on (y, v):
//   Mm s = P v - dt K y - dt Mass fbar + impulse,
//   y' = y + dt/2 (v + s),  v' = s,
//   Mm = Mass + dt^2/4 K + dt/2 D,  P = Mass - dt^2/4 K - dt/2 D,
// with impulse = dt Mass chi u_k. fbar is the discrete gradient
// (Phi(y') - Phi(y)) / (y' - y) of the primitive Phi of f, so the undamped
// scheme conserves E = 1/2 (v.Mass v + y.K y) + sum Mass Phi(y) to round-off.
// The adjoint of a linear step is
//   q = Mm^{-T}(dt/2 yhat' + vhat'),  yhat = yhat' - dt K^T q,
//   vhat = dt/2 yhat' + P^T q,
// and the control enters the duality pairing as dt <Mass chi u_k, q_k>.

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "pdectl/grid.hpp"
#include "pdectl/linalg.hpp"
#include "pdectl/rng.hpp"

namespace pdectl {

enum class DampingMode { None, Interior, Boundary };

struct WaveOptions {
  DampingMode damping = DampingMode::None;
  double boundary_gain = 0.0;              // a(x) at the right endpoint (Boundary mode, 1D)
  std::function<double(double)> f;         // optional nonlinearity f(y)
  std::function<double(double)> F;         // its primitive, if known in closed form
  bool signed_damping = false;             // allow growth terms (stochastic a1 z_t)
};

class WaveModel {
 public:
  WaveModel(const CoefficientField& coef, const Grid& grid, const WaveOptions& opt = {},
            double dt_sign = 1.0)
      : grid_(grid), opt_(opt), dt_(dt_sign * grid.dt) {
    grid.validate();
    require(!coef.a_time_dependent, "wave solver: potential must be time-independent");
    robin_ = opt.damping == DampingMode::Boundary;
    require(!robin_ || grid.dim == 1, "wave solver: boundary damping is implemented in 1D");
    require(opt.boundary_gain >= 0.0, "wave solver: boundary gain must be >= 0");
    const int n = grid.size();
    N_ = n + (robin_ ? 1 : 0);
    mass_ = Vec::Constant(N_, grid.cell());
    if (robin_) mass_[n] = 0.5 * grid.h[0];
    Vec pot = Vec::Zero(N_);
    pot.head(n) = sample(grid, coef.a, 0.0);
    K_ = SpMat(stiffness(grid, coef, robin_) - diag(mass_.cwiseProduct(pot)));
    Vec damp = Vec::Zero(N_);
    if (opt.damping == DampingMode::Interior) {
      damp.head(n) = coef.c0 * sample(grid, coef.damping);
      if (!opt.signed_damping)
        for (int i = 0; i < n; ++i) require(damp[i] >= 0.0, "wave solver: damping must be >= 0");
      damp = damp.cwiseProduct(mass_);
    }
    if (robin_) damp[n] = opt.boundary_gain;
    damping_ = damp;
    D_ = diag(damp);
    chi_ = Vec::Zero(N_);
    chi_.head(n) = mask_vector(grid, coef.mask);
    const SpMat M = diag(mass_);
    const double h2 = 0.25 * dt_ * dt_;
    const SpMat Mm = M + h2 * K_ + (0.5 * dt_) * D_;
    P_ = M - h2 * K_ - (0.5 * dt_) * D_;
    Mm_ = Factored(Mm);
  }

  const Grid& grid() const { return grid_; }
  int unknowns() const { return N_; }
  const Vec& mass() const { return mass_; }
  const Vec& chi() const { return chi_; }
  const Vec& damping_diag() const { return damping_; }
  const SpMat& stiffness_matrix() const { return K_; }
  double dt() const { return dt_; }

  /// One step; `impulse` (may be null) is added to the velocity equation.
  void step(Vec& y, Vec& v, const Vec* impulse) const {
    Vec rhs = P_ * v - dt_ * (K_ * y);
    if (impulse) rhs += *impulse;
    Vec s = Mm_.solve(rhs);
    if (opt_.f) {
      // Fixed point on the discrete-gradient term.
      for (int it = 0; it < 100; ++it) {
        const Vec y1 = y + 0.5 * dt_ * (v + s);
        const Vec fbar = discrete_gradient(y, y1);
        const Vec s_new = Mm_.solve(rhs - dt_ * mass_.cwiseProduct(fbar));
        const double change = (s_new - s).norm();
        s = s_new;
        if (change <= 1e-15 * std::max(1.0, s.norm())) break;
      }
    }
    y += 0.5 * dt_ * (v + s);
    v = std::move(s);
  }

  /// Adjoint of a linear step; returns q.
  Vec adjoint_step(Vec& yhat, Vec& vhat) const {
    const Vec shat = 0.5 * dt_ * yhat + vhat;
    Vec q = Mm_.solve_t(shat);
    const Vec ynew = yhat - dt_ * (K_.transpose() * q);
    vhat = 0.5 * dt_ * yhat + P_.transpose() * q;
    yhat = ynew;
    return q;
  }

  Vec control_impulse(const Vec& u) const { return dt_ * mass_.cwiseProduct(chi_.cwiseProduct(pad(u))); }

  /// Zero-pads interior data to the unknown count (Robin node appended).
  Vec pad(const Vec& x) const {
    if (x.size() == N_) return x;
    require(x.size() == grid_.size(), "wave solver: data size");
    Vec r = Vec::Zero(N_);
    r.head(x.size()) = x;
    return r;
  }

  double energy(const Vec& y, const Vec& v) const {
    double e = 0.5 * (v.dot(mass_.cwiseProduct(v)) + y.dot(K_ * y));
    if (opt_.f)
      for (int i = 0; i < N_; ++i) e += mass_[i] * primitive(y[i]);
    return e;
  }

  /// Phi(s) = int_0^s f, by adaptive Gauss-Kronrod unless given.
  double primitive(double s) const {
    if (!opt_.f || s == 0.0) return 0.0;
    if (opt_.F) return opt_.F(s);
    return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(opt_.f, 0.0, s, 10, 1e-14);
  }

 private:
  Vec discrete_gradient(const Vec& y0, const Vec& y1) const {
    Vec r(y0.size());
    for (int i = 0; i < y0.size(); ++i) {
      const double a = y0[i], b = y1[i];
      r[i] = boost::math::quadrature::gauss<double, 8>::integrate(
          [&](double tau) { return opt_.f(a + (b - a) * tau); }, 0.0, 1.0);
    }
    return r;
  }

  Grid grid_;
  WaveOptions opt_;
  double dt_;
  bool robin_ = false;
  int N_ = 0;
  Vec mass_, chi_, damping_;
  SpMat K_, D_, P_;
  Factored Mm_;
};

inline Trajectory solve_wave(const CoefficientField& coef, const Grid& grid, const Vec& y0,
                             const Vec& y1, const ControlSeries& control = {},
                             const WaveOptions& opt = {},
                             Direction direction = Direction::Forward) {
  const WaveModel model(coef, grid, opt, direction == Direction::Forward ? 1.0 : -1.0);
  require(control.empty() || static_cast<int>(control.size()) == grid.steps,
          "solve_wave: control must have one entry per step");
  Trajectory tr;
  tr.grid = grid;
  Vec y = model.pad(y0), v = model.pad(y1);
  tr.y.push_back(y);
  tr.v.push_back(v);
  for (int k = 0; k < grid.steps; ++k) {
    const int idx = direction == Direction::Forward ? k : grid.steps - 1 - k;
    if (control.empty()) {
      model.step(y, v, nullptr);
    } else {
      const Vec imp = model.control_impulse(control[idx]);
      model.step(y, v, &imp);
    }
    tr.y.push_back(y);
    tr.v.push_back(v);
  }
  return tr;
}

/// E(t_k) for each snapshot of a wave trajectory.
inline std::vector<double> wave_energy(const Trajectory& tr, const CoefficientField& coef,
                                       const WaveOptions& opt = {}) {
  const WaveModel model(coef, tr.grid, opt);
  require(tr.y.size() == tr.v.size(), "wave_energy: trajectory has no velocities");
  std::vector<double> e;
  e.reserve(tr.y.size());
  for (std::size_t k = 0; k < tr.y.size(); ++k) e.push_back(model.energy(model.pad(tr.y[k]), model.pad(tr.v[k])));
  return e;
}

// ---------------------------------------------------------------------------
// Stochastic wave  dz_t - div(p grad z) dt = (a1 z_t + a3 z + f) dt + (a4 z + g) dB.
// Deterministic part by implicit midpoint (a3 as potential, -a1 as damping),
// the noise as an explicit Ito impulse on the velocity.

struct StochWaveCoefficients {
  SpaceFn a1 = constant_fn(0.0);
  SpaceFn a3 = constant_fn(0.0);
  SpaceFn a4 = constant_fn(0.0);
  SpaceFn f = constant_fn(0.0);
  SpaceFn g = constant_fn(0.0);
};

inline std::vector<Trajectory> solve_stoch_wave(const CoefficientField& coef, const Grid& grid,
                                                const StochWaveCoefficients& sc, const Vec& z0,
                                                const Vec& z1, std::uint64_t seed, int n_paths,
                                                int record_every = 1) {
  require(n_paths >= 1, "solve_stoch_wave: n_paths must be >= 1");
  require(record_every >= 1, "solve_stoch_wave: record_every must be >= 1");
  CoefficientField c = coef;
  c.a = [a0 = coef.a, a3 = sc.a3](double t, double x, double y) { return a0(t, x, y) + a3(x, y); };
  c.damping = [a1 = sc.a1](double x, double y) { return -a1(x, y); };
  c.c0 = 1.0;
  WaveOptions opt;
  opt.damping = DampingMode::Interior;
  opt.signed_damping = true;
  const WaveModel model(c, grid, opt);
  const Vec mass = model.mass();
  const Vec a4 = sample(grid, sc.a4), g = sample(grid, sc.g), f = sample(grid, sc.f);
  const Vec drift_impulse = grid.dt * mass.cwiseProduct(f);
  const bool has_drift = f.cwiseAbs().maxCoeff() > 0.0;
  const double sdt = std::sqrt(grid.dt);
  std::vector<Trajectory> out;
  out.reserve(n_paths);
  for (int p = 0; p < n_paths; ++p) {
    Rng rng(derive_seed(seed, "stoch_wave", p));
    Trajectory tr;
    tr.grid = grid;
    Vec y = z0, v = z1;
    tr.y.push_back(y);
    tr.v.push_back(v);
    for (int k = 0; k < grid.steps; ++k) {
      const double dB = sdt * rng.normal();
      Vec imp = dB * mass.cwiseProduct(a4.cwiseProduct(y) + g);
      if (has_drift) imp += drift_impulse;
      model.step(y, v, &imp);
      if ((k + 1) % record_every == 0 || k + 1 == grid.steps) {
        tr.y.push_back(y);
        tr.v.push_back(v);
      }
    }
    out.push_back(std::move(tr));
  }
  return out;
}

}  // namespace pdectl
