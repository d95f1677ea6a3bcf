#pragma once

// Uniform grids on an interval or rectangle with homogeneous Dirichlet
// boundary, coefficient fields sampled at nodes, and the spatial operators
// shared by the heat and wave solvers.
//
// Interior nodes are numbered row-major with the first axis fastest:
// node (i, j) has index i + n0 * j and sits at ((i + 1) h0, (j + 1) h1).
// Discrete inner products carry the cell volume w = h0 (1D) or h0 h1 (2D).

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "pdectl/errors.hpp"

namespace pdectl {

using Vec = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

struct Grid {
  int dim = 1;
  std::array<double, 2> extent{1.0, 1.0};
  std::array<int, 2> n{3, 1};
  std::array<double, 2> h{0.25, 1.0};
  double dt = 1e-3;
  int steps = 1;

  static Grid line(int n, double T, int steps, double length = 1.0) {
    Grid g;
    g.dim = 1;
    g.extent = {length, 1.0};
    g.n = {n, 1};
    g.steps = steps;
    g.dt = T / steps;
    g.h = {length / (n + 1), 1.0};
    g.validate();
    return g;
  }

  static Grid rect(int n0, int n1, double T, int steps, double lx = 1.0, double ly = 1.0) {
    Grid g;
    g.dim = 2;
    g.extent = {lx, ly};
    g.n = {n0, n1};
    g.steps = steps;
    g.dt = T / steps;
    g.h = {lx / (n0 + 1), ly / (n1 + 1)};
    g.validate();
    return g;
  }

  void validate() const {
    require(dim == 1 || dim == 2, "Grid: dim must be 1 or 2");
    require(n[0] >= 3 && (dim == 1 || n[1] >= 3), "Grid: need at least 3 interior points per axis");
    require(extent[0] > 0 && extent[1] > 0, "Grid: extents must be positive");
    require(dt > 0 && steps >= 1, "Grid: need dt > 0 and steps >= 1");
  }

  int size() const { return dim == 1 ? n[0] : n[0] * n[1]; }
  double T() const { return dt * steps; }
  double cell() const { return dim == 1 ? h[0] : h[0] * h[1]; }
  double x(int idx) const { return (idx % n[0] + 1) * h[0]; }
  double y(int idx) const { return dim == 1 ? 0.0 : (idx / n[0] + 1) * h[1]; }

  /// Same geometry with a different time discretization.
  Grid with_time(double T, int new_steps) const {
    Grid g = *this;
    g.steps = new_steps;
    g.dt = T / new_steps;
    g.validate();
    return g;
  }
};

struct GridFunction {
  Grid grid;
  Vec values;
};

/// Time-indexed states. `y` (and `v` for wave equations) hold steps + 1
/// snapshots; `mid` holds the adjoint half-step values of a backward solve.
struct Trajectory {
  Grid grid;
  std::vector<Vec> y;
  std::vector<Vec> v;
  std::vector<Vec> mid;
  bool blew_up = false;
  int blowup_step = -1;
};

enum class Direction { Forward, Backward };

/// Piecewise-constant control, one vector per time step (empty = zero).
using ControlSeries = std::vector<Vec>;

inline double dot(const Grid& g, const Vec& a, const Vec& b) { return g.cell() * a.dot(b); }
inline double norm(const Grid& g, const Vec& a) { return std::sqrt(dot(g, a, a)); }

using SpaceFn = std::function<double(double, double)>;
using SpaceTimeFn = std::function<double(double, double, double)>;

inline SpaceFn constant_fn(double c) {
  return [c](double, double) { return c; };
}
inline SpaceTimeFn constant_tfn(double c) {
  return [c](double, double, double) { return c; };
}

/// Indicator of [lo0, hi0] (x [lo1, hi1] in 2D).
inline SpaceFn box_indicator(double lo0, double hi0, double lo1 = -1e300, double hi1 = 1e300) {
  return [=](double x, double y) {
    return (x >= lo0 && x <= hi0 && y >= lo1 && y <= hi1) ? 1.0 : 0.0;
  };
}

/// Coefficients of
///   y_t - div(p grad y) = a y + a1 . grad y + chi u          (heat)
///   y_tt - div(p grad y) = a y - c0 b y_t + chi u           (wave)
/// plus the noise gain of the stochastic variants.
struct CoefficientField {
  SpaceFn p = constant_fn(1.0);
  SpaceTimeFn a = constant_tfn(0.0);
  bool a_time_dependent = false;
  SpaceFn a1x = constant_fn(0.0);
  SpaceFn a1y = constant_fn(0.0);
  SpaceFn damping = constant_fn(0.0);
  double c0 = 1.0;
  SpaceFn noise = constant_fn(0.0);
  SpaceFn mask = constant_fn(0.0);
  double p_min = 1e-12;
};

inline Vec sample(const Grid& g, const SpaceFn& f) {
  Vec v(g.size());
  for (int i = 0; i < g.size(); ++i) v[i] = f(g.x(i), g.y(i));
  return v;
}

inline Vec sample(const Grid& g, const SpaceTimeFn& f, double t) {
  Vec v(g.size());
  for (int i = 0; i < g.size(); ++i) v[i] = f(t, g.x(i), g.y(i));
  return v;
}

inline Vec mask_vector(const Grid& g, const SpaceFn& f) {
  Vec m = sample(g, f);
  for (int i = 0; i < m.size(); ++i)
    require(m[i] == 0.0 || m[i] == 1.0, "mask values must be 0 or 1");
  return m;
}

inline double harmonic(double a, double b) { return 2.0 * a * b / (a + b); }

/// Symmetric stiffness of -div(p grad .) in mass form (scaled by the cell
/// volume), with harmonic-mean diffusivity on every edge. Edges to Dirichlet
/// boundary nodes contribute to the diagonal only. With `robin_right` the
/// node at x = L (1D) is kept as an extra unknown with index n.
inline SpMat stiffness(const Grid& g, const CoefficientField& c, bool robin_right = false) {
  require(!robin_right || g.dim == 1, "stiffness: Robin boundary node is 1D only");
  const int N = g.size() + (robin_right ? 1 : 0);
  std::vector<Triplet> t;
  auto pval = [&](double x, double y) {
    const double p = c.p(x, y);
    if (!(p >= c.p_min) || !std::isfinite(p)) throw ArgumentError("diffusivity must be positive");
    return p;
  };
  auto edge = [&](int i, int j, double coef) {  // j < 0: Dirichlet neighbour
    t.emplace_back(i, i, coef);
    if (j >= 0) {
      t.emplace_back(j, j, coef);
      t.emplace_back(i, j, -coef);
      t.emplace_back(j, i, -coef);
    }
  };
  if (g.dim == 1) {
    const int n = g.n[0];
    const double h = g.h[0];
    for (int i = -1; i < n; ++i) {
      const double xl = (i + 1) * h, xr = (i + 2) * h;
      const double pe = harmonic(pval(xl, 0), pval(xr, 0));
      const double coef = pe / h;
      if (i == -1) {
        edge(0, -1, coef);
      } else if (i == n - 1) {
        if (robin_right) edge(n - 1, n, coef);
        else edge(n - 1, -1, coef);
      } else {
        edge(i, i + 1, coef);
      }
    }
  } else {
    const int n0 = g.n[0], n1 = g.n[1];
    const double h0 = g.h[0], h1 = g.h[1];
    auto id = [n0](int i, int j) { return i + n0 * j; };
    for (int j = 0; j < n1; ++j)
      for (int i = -1; i < n0; ++i) {
        const double y = (j + 1) * h1;
        const double pe = harmonic(pval((i + 1) * h0, y), pval((i + 2) * h0, y));
        const double coef = pe * h1 / h0;
        if (i == -1) edge(id(0, j), -1, coef);
        else if (i == n0 - 1) edge(id(i, j), -1, coef);
        else edge(id(i, j), id(i + 1, j), coef);
      }
    for (int i = 0; i < n0; ++i)
      for (int j = -1; j < n1; ++j) {
        const double x = (i + 1) * h0;
        const double pe = harmonic(pval(x, (j + 1) * h1), pval(x, (j + 2) * h1));
        const double coef = pe * h0 / h1;
        if (j == -1) edge(id(i, 0), -1, coef);
        else if (j == n1 - 1) edge(id(i, j), -1, coef);
        else edge(id(i, j), id(i, j + 1), coef);
      }
  }
  SpMat K(N, N);
  K.setFromTriplets(t.begin(), t.end());
  return K;
}

/// Centered-difference convection a1 . grad (not in mass form).
inline SpMat convection(const Grid& g, const CoefficientField& c) {
  const int N = g.size();
  std::vector<Triplet> t;
  const int n0 = g.n[0];
  for (int idx = 0; idx < N; ++idx) {
    const double x = g.x(idx), y = g.y(idx);
    const int i = idx % n0, j = idx / n0;
    const double bx = c.a1x(x, y);
    if (bx != 0.0) {
      if (i + 1 < n0) t.emplace_back(idx, idx + 1, bx / (2 * g.h[0]));
      if (i > 0) t.emplace_back(idx, idx - 1, -bx / (2 * g.h[0]));
    }
    if (g.dim == 2) {
      const double by = c.a1y(x, y);
      if (by != 0.0) {
        if (j + 1 < g.n[1]) t.emplace_back(idx, idx + n0, by / (2 * g.h[1]));
        if (j > 0) t.emplace_back(idx, idx - n0, -by / (2 * g.h[1]));
      }
    }
  }
  SpMat C(N, N);
  C.setFromTriplets(t.begin(), t.end());
  return C;
}

/// Dirichlet eigenmode sin(k pi x / L) (times sin(l pi y / Ly) in 2D) at the nodes.
inline Vec sine_mode(const Grid& g, int k, int l = 1) {
  Vec v(g.size());
  for (int i = 0; i < g.size(); ++i) {
    v[i] = std::sin(k * M_PI * g.x(i) / g.extent[0]);
    if (g.dim == 2) v[i] *= std::sin(l * M_PI * g.y(i) / g.extent[1]);
  }
  return v;
}

inline double max_abs(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace pdectl
