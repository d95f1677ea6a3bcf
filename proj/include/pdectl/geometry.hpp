#pragma once

// Multiplier geometry for an interval or rectangle and an exterior point x0:
// the observed faces Gamma0 = {(x - x0) . nu > 0}, the collar control region
// omega = O_eps(Gamma0) within the domain, and T* = 2 max |x - x0|.

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "pdectl/errors.hpp"
#include "pdectl/grid.hpp"

namespace pdectl {

struct Domain {
  int dim = 1;
  std::array<double, 2> lo{0.0, 0.0};
  std::array<double, 2> hi{1.0, 1.0};

  static Domain interval(double a, double b) { return {1, {a, 0.0}, {b, 0.0}}; }
  static Domain rectangle(double a0, double b0, double a1, double b1) { return {2, {a0, a1}, {b0, b1}}; }
  static Domain of(const Grid& g) {
    return g.dim == 1 ? interval(0.0, g.extent[0]) : rectangle(0.0, g.extent[0], 0.0, g.extent[1]);
  }

  void validate() const {
    require(dim == 1 || dim == 2, "domain: dim must be 1 or 2");
    for (int i = 0; i < dim; ++i) require(hi[i] > lo[i], "domain: empty extent");
  }

  bool contains_closed(const std::array<double, 2>& x) const {
    for (int i = 0; i < dim; ++i)
      if (x[i] < lo[i] || x[i] > hi[i]) return false;
    return true;
  }

  double diameter() const {
    double s = 0.0;
    for (int i = 0; i < dim; ++i) s += (hi[i] - lo[i]) * (hi[i] - lo[i]);
    return std::sqrt(s);
  }

  std::vector<std::array<double, 2>> corners() const {
    if (dim == 1) return {{lo[0], 0.0}, {hi[0], 0.0}};
    return {{lo[0], lo[1]}, {hi[0], lo[1]}, {lo[0], hi[1]}, {hi[0], hi[1]}};
  }
};

struct Face {
  int axis = 0;
  int side = 1;  // +1: x_axis = hi, -1: x_axis = lo (outward normal side * e_axis)
  std::string name() const {
    static const char* n1[] = {"left", "right"};
    static const char* n2[] = {"bottom", "top"};
    return (axis == 0 ? n1 : n2)[side > 0 ? 1 : 0];
  }
};

inline std::vector<Face> faces(const Domain& d) {
  std::vector<Face> f;
  for (int a = 0; a < d.dim; ++a) f.push_back({a, -1}), f.push_back({a, 1});
  return f;
}

inline double distance_sq(const std::array<double, 2>& x, const std::array<double, 2>& x0, int dim) {
  double s = 0.0;
  for (int i = 0; i < dim; ++i) s += (x[i] - x0[i]) * (x[i] - x0[i]);
  return s;
}

struct ControlGeometry {
  Domain domain;
  std::array<double, 2> x0{0.0, 0.0};
  double eps = 0.0;
  double T = 0.0;
  double T_star = 0.0;
  std::vector<Face> gamma0;
  std::vector<Face> gamma_star;
  SpaceFn region;  // control/observation mask; the Gamma0 collar unless replaced

  /// Distance from an interior point to the nearest face of Gamma0.
  double distance_to_gamma0(double x, double y) const {
    double best = 1e300;
    const std::array<double, 2> p{x, y};
    for (const Face& f : gamma0) {
      const double plane = f.side > 0 ? domain.hi[f.axis] : domain.lo[f.axis];
      best = std::min(best, std::abs(p[f.axis] - plane));
    }
    return best;
  }

  SpaceFn collar() const {
    return [faces = gamma0, d = domain, e = eps](double x, double y) {
      ControlGeometry g;
      g.domain = d;
      g.gamma0 = faces;
      return g.distance_to_gamma0(x, y) <= e ? 1.0 : 0.0;
    };
  }

  SpaceFn omega() const { return region ? region : collar(); }

  ControlGeometry with_region(SpaceFn mask) const {
    ControlGeometry g = *this;
    g.region = std::move(mask);
    return g;
  }
};

/// For d = |x - x0|^2 and h = I, the Gamma* criterion sum h^{ij} d_i nu_j > 0 is
/// 2 (x - x0) . nu > 0, so Gamma* = Gamma0. The sign is constant on each face.
inline ControlGeometry make_control_geometry(const Domain& domain, const std::array<double, 2>& x0,
                                             double eps, double T) {
  domain.validate();
  require(!domain.contains_closed(x0), "geometry: x0 must lie strictly outside the closed domain");
  require(eps >= 0.0, "geometry: eps must be >= 0");
  require(T >= 0.0, "geometry: T must be >= 0");
  ControlGeometry g;
  g.domain = domain;
  g.x0 = x0;
  g.eps = eps;
  g.T = T;
  for (const Face& f : faces(domain)) {
    const double plane = f.side > 0 ? domain.hi[f.axis] : domain.lo[f.axis];
    if ((plane - x0[f.axis]) * f.side > 0.0) g.gamma0.push_back(f);
  }
  g.gamma_star = g.gamma0;
  g.region = g.collar();
  double dmax = 0.0;
  for (const auto& c : domain.corners()) dmax = std::max(dmax, distance_sq(c, x0, domain.dim));
  g.T_star = 2.0 * std::sqrt(dmax);
  return g;
}

struct AssumptionReport {
  bool mu0_ok = false;
  double mu0 = 0.0;
  bool no_critical_point = false;
  double min_grad = 0.0;      // min |grad d| over the closed domain
  double max_d = 0.0;
  double min_quadratic = 0.0; // min 1/4 h(grad d, grad d)
  double condition_iii_margin = 0.0;
  bool condition_iii_ok = false;
  bool rescale_possible = false;
  double rescale_factor = 0.0; // smallest c with c d satisfying iii
};

/// Checks the pseudo-convexity conditions for d = |x - x0|^2 and h = p I.
/// Extremes of |x - x0| over a box are exact: the minimum at the clamped point,
/// the maximum at a corner.
inline AssumptionReport check_assumption_d(const Domain& domain, const std::array<double, 2>& x0,
                                           double p = 1.0) {
  domain.validate();
  require(p > 0.0, "check_assumption_d: p must be > 0");
  AssumptionReport r;
  r.mu0 = 4.0 * p;
  r.mu0_ok = true;
  std::array<double, 2> nearest{0.0, 0.0};
  for (int i = 0; i < domain.dim; ++i) nearest[i] = std::clamp(x0[i], domain.lo[i], domain.hi[i]);
  const double dmin = distance_sq(nearest, x0, domain.dim);
  for (const auto& c : domain.corners()) r.max_d = std::max(r.max_d, distance_sq(c, x0, domain.dim));
  r.min_grad = 2.0 * std::sqrt(dmin);
  r.no_critical_point = r.min_grad > 0.0;
  r.min_quadratic = p * dmin;
  r.condition_iii_margin = r.min_quadratic - r.max_d;
  r.condition_iii_ok = r.condition_iii_margin >= 0.0;
  r.rescale_possible = r.no_critical_point;
  r.rescale_factor = r.no_critical_point ? std::max(1.0, r.max_d / r.min_quadratic) : 0.0;
  return r;
}

}  // namespace pdectl
