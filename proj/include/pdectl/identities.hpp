#pragma once

// Pointwise weighted identities for second-order operators, evaluated on
// polynomial test data.
//
// Every derivative (including the outer time derivative of M and the
// divergence of V) is taken on Taylor jets, never by differencing, so a
// correctly transcribed identity balances to round-off. The deterministic
// identity is written once against a small "calculus engine" interface so
// that a fully symbolic engine can be substituted in tests.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "pdectl/errors.hpp"
#include "pdectl/format.hpp"
#include "pdectl/jet.hpp"
#include "pdectl/multipoly.hpp"
#include "pdectl/rng.hpp"

namespace pdectl {

using cplx = std::complex<double>;

// ---------------------------------------------------------------------------
// Instances and reports

using PolyMatrix = std::vector<std::vector<MultiPoly>>;

inline void require_symmetric(const PolyMatrix& b, int m, const char* who) {
  require(static_cast<int>(b.size()) == m, std::string(who) + ": b must be m x m");
  for (int j = 0; j < m; ++j) {
    require(static_cast<int>(b[j].size()) == m, std::string(who) + ": b must be m x m");
    for (int k = 0; k < j; ++k)
      require(b[j][k] == b[k][j], std::string(who) + ": b is not symmetric");
  }
}

/// Data for the complex weighted identity of the operator
/// P z = (alpha + i beta) z_t + sum_jk (b^{jk} z_{x_j})_{x_k}, weight theta = e^ell.
struct DetIdentityInstance {
  int m = 1;
  ComplexPoly z;
  MultiPoly ell;
  MultiPoly alpha;
  MultiPoly beta;
  PolyMatrix b;
  double a_param = 0.0;
  double b_param = 0.0;
  double lambda = 0.0;

  void validate() const {
    require(m >= 1 && m + 1 <= kMaxDims, "DetIdentityInstance: m must be in [1, 3]");
    const int d = m + 1;
    require(z.dims() == d && ell.dims() == d && alpha.dims() == d && beta.dims() == d,
            "DetIdentityInstance: all polynomials must have dims = 1 + m");
    require_symmetric(b, m, "DetIdentityInstance");
    for (const auto& row : b)
      for (const auto& p : row) require(p.dims() == d, "DetIdentityInstance: b dims");
  }
};

/// Values of both sides plus the named intermediates.
template <class V>
struct DetIdentityTerms {
  V lhs{};
  V rhs{};
  V I1{};
  V A{};
  V B{};
  V M{};
  std::vector<V> Vk;
  /// Largest magnitude among the contributions carrying the factor i.
  double i_terms_max_abs = 0.0;
  /// Largest magnitude among contributions carrying alpha or beta.
  double alpha_beta_terms_max_abs = 0.0;
};

struct IdentityReport {
  std::string kind;
  std::size_t samples = 0;
  double max_abs_residual = 0.0;
  double max_rel_residual = 0.0;
  double scale = 0.0;
  double tolerance = 0.0;
  bool pass = true;

  void add(double lhs, double rhs) {
    const double res = std::abs(lhs - rhs);
    const double mag = std::max({std::abs(lhs), std::abs(rhs), 1.0});
    ++samples;
    max_abs_residual = std::max(max_abs_residual, res);
    max_rel_residual = std::max(max_rel_residual, res / mag);
    scale = std::max({scale, std::abs(lhs), std::abs(rhs)});
  }
  void finalize(double tol) {
    tolerance = tol;
    pass = max_rel_residual <= tol;
  }
};

struct SidePair {
  double lhs = 0.0;
  double rhs = 0.0;
};

// ---------------------------------------------------------------------------
// Calculus engine over Taylor jets at one sample point.

class JetEngine {
 public:
  using Field = Jet<cplx>;

  JetEngine(const SamplePoint& pt, const MultiPoly& ell) : pt_(pt) {
    theta_ = exp(jet_of(ComplexPoly(ell), pt_));
  }
  Field lift(const MultiPoly& p) const { return jet_of(ComplexPoly(p), pt_); }
  Field lift(const ComplexPoly& p) const { return jet_of(p, pt_); }
  Field theta() const { return theta_; }
  cplx value(const Field& f) const { return f.value(); }

 private:
  SamplePoint pt_;
  Field theta_;
};

namespace detail {

template <class F>
F sum_of(std::vector<F> terms) {
  F acc = terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i) acc += terms[i];
  return acc;
}

}  // namespace detail

/// Both sides of the complex weighted identity, written against a calculus
/// engine `Alg` (types: Field; members: lift, theta, value; free functions:
/// derivative(f, axis), conj(f), arithmetic with cplx scalars).
template <class Alg>
DetIdentityTerms<cplx> det_identity_terms(const Alg& alg, const DetIdentityInstance& inst) {
  using F = typename Alg::Field;
  inst.validate();
  const int m = inst.m;
  const cplx I(0.0, 1.0);
  const double a = inst.a_param;
  const double bl = inst.b_param * inst.lambda;
  auto D = [](const F& f, int axis) { return derivative(f, axis); };
  auto val = [&](const F& f) { return alg.value(f); };

  const F th = alg.theta();
  const F z = alg.lift(inst.z);
  const F l = alg.lift(inst.ell);
  const F al = alg.lift(inst.alpha);
  const F be = alg.lift(inst.beta);
  std::vector<std::vector<F>> b(m);
  for (int j = 0; j < m; ++j)
    for (int k = 0; k < m; ++k) b[j].push_back(alg.lift(inst.b[j][k]));

  const F v = th * z;
  const F vb = conj(v);
  const F lt = D(l, 0);
  const F vt = D(v, 0);
  const F vtb = conj(vt);
  const F zt = D(z, 0);
  std::vector<F> lx, vx, vxb, zx;
  for (int j = 0; j < m; ++j) {
    lx.push_back(D(l, j + 1));
    vx.push_back(D(v, j + 1));
    vxb.push_back(conj(vx.back()));
    zx.push_back(D(z, j + 1));
  }
  std::vector<std::vector<F>> lxx(m);
  for (int j = 0; j < m; ++j)
    for (int k = 0; k < m; ++k) lxx[j].push_back(D(lx[j], k + 1));

  const F zero = v * cplx(0.0);
  const F absv2 = v * vb;

  // A, I1 and P z.
  F A = zero - bl;
  for (int j = 0; j < m; ++j)
    for (int k = 0; k < m; ++k)
      A += b[j][k] * lx[j] * lx[k] - cplx(1.0 + a) * b[j][k] * lxx[j][k];

  F div_bvx = zero, div_bzx = zero;
  for (int j = 0; j < m; ++j)
    for (int k = 0; k < m; ++k) {
      div_bvx += D(b[j][k] * vx[j], k + 1);
      div_bzx += D(b[j][k] * zx[j], k + 1);
    }
  const F I1 = I * be * vt - al * lt * v + div_bvx + A * v;
  const F I1b = conj(I1);
  const F Pz = (al + I * be) * zt + div_bzx;

  // B, split into its alpha/beta-free part and the rest.
  F B_ab = D(al * al * lt + be * be * lt - al * A, 0);
  F B_plain = zero;
  for (int j = 0; j < m; ++j)
    for (int k = 0; k < m; ++k) {
      B_plain += cplx(2.0) * (D(b[j][k] * lx[j] * A, k + 1) + cplx(a) * A * b[j][k] * lxx[j][k]);
      B_ab -= cplx(2.0) * (D(al * b[j][k] * lx[j] * lt, k + 1) +
                           cplx(a) * al * lt * b[j][k] * lxx[j][k]);
    }
  const F B = B_plain + B_ab;

  // M = M_real + M_imag.
  F M_ab = ((al * al + be * be) * lt - al * A) * absv2;
  for (int j = 0; j < m; ++j)
    for (int k = 0; k < m; ++k) M_ab += al * b[j][k] * vx[j] * vxb[k];
  F M_i = zero;
  for (int j = 0; j < m; ++j)
    for (int k = 0; k < m; ++k) M_i += I * be * b[j][k] * lx[j] * (vxb[k] * v - vx[k] * vb);
  const F M = M_ab + M_i;

  // V^k, split the same way.
  std::vector<F> V_plain(m, zero), V_ab(m, zero), V_i(m, zero);
  for (int k = 0; k < m; ++k) {
    for (int j = 0; j < m; ++j) {
      V_i[k] -= I * be *
                (b[j][k] * lx[j] * (v * vtb - vb * vt) + b[j][k] * lt * (vx[j] * vb - vxb[j] * v));
      V_ab[k] -= al * b[j][k] * (vx[j] * vtb + vxb[j] * vt);
      V_plain[k] += cplx(2.0) * b[j][k] * A * lx[j] * absv2;
      V_ab[k] -= cplx(2.0) * b[j][k] * al * lx[j] * lt * absv2;
      for (int jp = 0; jp < m; ++jp)
        for (int kp = 0; kp < m; ++kp) {
          V_plain[k] += (cplx(2.0) * b[j][kp] * b[jp][k] - b[j][k] * b[jp][kp]) * lx[j] *
                        (vx[jp] * vxb[kp] + vxb[jp] * vx[kp]);
          V_plain[k] -= cplx(a) * b[jp][kp] * lxx[jp][kp] * b[j][k] * (vx[j] * vb + vxb[j] * v);
        }
    }
  }

  // Left-hand side.
  const F lhs_weighted = th * (Pz * I1b + conj(Pz) * I1);
  F lhs_div = D(M, 0);
  for (int k = 0; k < m; ++k) lhs_div += D(V_plain[k] + V_ab[k] + V_i[k], k + 1);
  const F lhs = lhs_weighted + lhs_div;

  // Right-hand side.
  F rhs_plain = cplx(2.0) * I1 * I1b + B_plain * absv2;
  F rhs_ab = B_ab * absv2;
  for (int j = 0; j < m; ++j)
    for (int k = 0; k < m; ++k) {
      F c = zero;
      for (int jp = 0; jp < m; ++jp)
        for (int kp = 0; kp < m; ++kp) {
          c += cplx(2.0) * D(b[jp][k] * lx[jp], kp + 1) * b[j][kp] -
               D(b[j][k] * b[jp][kp] * lx[jp], kp + 1) - cplx(a) * b[j][k] * b[jp][kp] * lxx[jp][kp];
        }
      const F quad = vx[k] * vxb[j] + vxb[k] * vx[j];
      rhs_plain += c * quad;
      rhs_ab += cplx(0.5) * D(al * b[j][k], 0) * quad;
    }
  {
    F coef = zero + bl;
    for (int j = 0; j < m; ++j)
      for (int k = 0; k < m; ++k) coef -= D(b[j][k], k + 1) * lx[j];
    rhs_plain += coef * (I1 * vb + I1b * v);
  }
  F rhs_i = zero;
  for (int j = 0; j < m; ++j)
    for (int k = 0; k < m; ++k) {
      rhs_i += I * ((D(be * b[j][k] * lx[j], 0) + b[j][k] * D(be * lt, j + 1)) *
                        (vxb[k] * v - vx[k] * vb) +
                    (D(be * b[j][k] * lx[j], k + 1) + cplx(a) * be * b[j][k] * lxx[j][k]) *
                        (vb * vt - v * vtb));
      rhs_ab -= b[j][k] * D(al, k + 1) * (vx[j] * vtb + vxb[j] * vt);
    }
  for (int j = 0; j < m; ++j)
    for (int k = 0; k < m; ++k)
      for (int jp = 0; jp < m; ++jp)
        for (int kp = 0; kp < m; ++kp)
          rhs_plain -= cplx(a) * b[j][k] * D(b[jp][kp] * lxx[jp][kp], k + 1) *
                       (vxb[j] * v + vx[j] * vb);
  const F rhs = rhs_plain + rhs_ab + rhs_i;

  DetIdentityTerms<cplx> out;
  out.lhs = val(lhs);
  out.rhs = val(rhs);
  out.I1 = val(I1);
  out.A = val(A);
  out.B = val(B);
  out.M = val(M);
  for (int k = 0; k < m; ++k) out.Vk.push_back(val(V_plain[k] + V_ab[k] + V_i[k]));

  double imax = std::abs(val(rhs_i)) + 0.0;
  imax = std::max(imax, std::abs(val(D(M_i, 0))));
  for (int k = 0; k < m; ++k) imax = std::max(imax, std::abs(val(D(V_i[k], k + 1))));
  imax = std::max(imax, std::abs(val(I * be * vt)));
  out.i_terms_max_abs = imax;

  double abmax = std::max(std::abs(val(rhs_ab)), std::abs(val(D(M_ab, 0))));
  for (int k = 0; k < m; ++k) abmax = std::max(abmax, std::abs(val(D(V_ab[k], k + 1))));
  abmax = std::max(abmax, std::abs(val(B_ab)));
  out.alpha_beta_terms_max_abs = abmax;
  return out;
}

inline DetIdentityTerms<cplx> eval_det_identity(const DetIdentityInstance& inst,
                                                const SamplePoint& pt) {
  require(static_cast<int>(pt.size()) == inst.m + 1, "eval_det_identity: point dimension");
  return det_identity_terms(JetEngine(pt, inst.ell), inst);
}

// ---------------------------------------------------------------------------
// Exponentially weighted ODE identity:
//   2 e^{-lambda t} x'.x = d/dt(e^{-lambda t}|x|^2) + lambda e^{-lambda t}|x|^2.

inline SidePair eval_ode_identity(double lambda, const std::vector<MultiPoly>& x_path,
                                  double t) {
  for (const auto& p : x_path) require(p.dims() == 1, "eval_ode_identity: x_path must be in t only");
  const SamplePoint pt{t};
  const Jet<double> w = exp(jet_of(MultiPoly::variable(1, 0), pt) * (-lambda));
  Jet<double> norm2(1, kJetOrder, 0.0);
  double dot = 0.0;
  for (const auto& p : x_path) {
    const Jet<double> xj = jet_of(p, pt);
    norm2 += xj * xj;
    dot += derivative(xj, 0).value() * xj.value();
  }
  SidePair s;
  s.lhs = 2.0 * w.value() * dot;
  s.rhs = derivative(w * norm2, 0).value() + lambda * w.value() * norm2.value();
  return s;
}

// ---------------------------------------------------------------------------
// Rellich-type multiplier identity for the wave operator with a C^1 field h.

inline SidePair eval_multiplier_identity(const std::vector<MultiPoly>& h, const MultiPoly& z,
                                         const SamplePoint& pt) {
  const int m = static_cast<int>(h.size());
  require(m >= 1 && z.dims() == m + 1, "eval_multiplier_identity: z must have dims = 1 + m");
  for (const auto& hi : h) require(hi.dims() == m + 1, "eval_multiplier_identity: h dims");
  require(static_cast<int>(pt.size()) == m + 1, "eval_multiplier_identity: point dimension");
  using J = Jet<double>;
  const J zj = jet_of(z, pt);
  std::vector<J> hj, zx;
  for (const auto& hi : h) hj.push_back(jet_of(hi, pt));
  const J zt = derivative(zj, 0);
  for (int i = 0; i < m; ++i) zx.push_back(derivative(zj, i + 1));
  J hgrad = zt * 0.0, grad2 = zt * 0.0;
  for (int i = 0; i < m; ++i) {
    hgrad += hj[i] * zx[i];
    grad2 += zx[i] * zx[i];
  }
  const J energy = zt * zt - grad2;

  J lhs = hgrad * 0.0;
  for (int i = 0; i < m; ++i) lhs += derivative(2.0 * hgrad * zx[i] + hj[i] * energy, i + 1);

  J lap = derivative(zt, 0) * 0.0;
  for (int i = 0; i < m; ++i) lap += derivative(zx[i], i + 1);
  const double ztt = derivative(zt, 0).value();
  double div_h = 0.0, ht_grad = 0.0, cross = 0.0;
  for (int i = 0; i < m; ++i) {
    div_h += derivative(hj[i], i + 1).value();
    ht_grad += derivative(hj[i], 0).value() * zx[i].value();
    for (int j = 0; j < m; ++j)
      cross += derivative(hj[j], i + 1).value() * zx[i].value() * zx[j].value();
  }
  SidePair s;
  s.lhs = lhs.value();
  s.rhs = -2.0 * (ztt - lap.value()) * hgrad.value() + derivative(2.0 * zt * hgrad, 0).value() -
          2.0 * zt.value() * ht_grad + div_h * energy.value() + 2.0 * cross;
  return s;
}

// ---------------------------------------------------------------------------
// Stochastic identities.
//
// The test semimartingale is u(t,x) = u_d(t,x) + sigma(x) B(t) for the
// parabolic identity. For the hyperbolic identity the semimartingale is the
// velocity w = u_t = (u_d)_t + sigma(x) B(t), and the displacement is
// u = u_d + sigma(x) int_0^t B (trapezoidal on the path). Stochastic integrals
// are left-point (Ito) sums; quadratic variations are squared increments;
// total differentials telescope exactly.

struct StochIdentityInstance {
  int m = 1;
  MultiPoly drift;        // u_d(t, x)
  MultiPoly noise_shape;  // sigma(x), no t-dependence
  MultiPoly ell;
  MultiPoly psi;
  PolyMatrix b;
  double T = 1.0;
  std::vector<double> increments;  // Brownian increments, one per step

  int steps() const { return static_cast<int>(increments.size()); }
  double dt() const { return T / steps(); }

  void validate() const {
    require(m >= 1 && m + 1 <= kMaxDims, "StochIdentityInstance: m must be in [1, 3]");
    const int d = m + 1;
    require(drift.dims() == d && noise_shape.dims() == d && ell.dims() == d && psi.dims() == d,
            "StochIdentityInstance: all polynomials must have dims = 1 + m");
    for (const auto& [e, c] : noise_shape.terms())
      require(e[0] == 0, "StochIdentityInstance: noise shape must not depend on t");
    require_symmetric(b, m, "StochIdentityInstance");
    require(T > 0.0 && steps() >= 1, "StochIdentityInstance: need T > 0 and at least one step");
  }

  /// Path values B(t_k), k = 0..steps.
  std::vector<double> path() const {
    std::vector<double> B(increments.size() + 1, 0.0);
    for (std::size_t k = 0; k < increments.size(); ++k) B[k + 1] = B[k] + increments[k];
    return B;
  }

  /// Same path observed on a grid `factor` times coarser.
  StochIdentityInstance coarsened(int factor) const {
    require(factor >= 1 && steps() % factor == 0, "coarsened: factor must divide steps");
    StochIdentityInstance c = *this;
    c.increments.assign(steps() / factor, 0.0);
    for (int k = 0; k < steps(); ++k) c.increments[k / factor] += increments[k];
    return c;
  }
};

/// Brownian increments Normal(0, dt) from a seeded stream.
inline std::vector<double> brownian_increments(int steps, double T, std::uint64_t seed) {
  Rng rng(seed);
  const double s = std::sqrt(T / steps);
  std::vector<double> inc(steps);
  for (auto& x : inc) x = s * rng.normal();
  return inc;
}

struct StochResidual {
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;
  double scale = 0.0;
};

namespace detail {

struct StochNode {
  Jet<double> theta, ud, udt, sigma, A;
  std::vector<Jet<double>> lx, psix;
  std::vector<std::vector<Jet<double>>> b;
  Jet<double> lt, psi;
  double B = 0.0;
  double ltt = 0.0, psit = 0.0;
  std::vector<double> ltx;
  std::vector<std::vector<double>> quad;  // coefficient of v_{x_i} v_{x_j} on the rhs
  double vt2_coef = 0.0;                   // hyperbolic: coefficient of v_t^2
  std::vector<double> cross;               // hyperbolic: coefficient of v_{x_i} v_t
};

}  // namespace detail

/// Precomputes the path-independent coefficients of the parabolic stochastic
/// identity at one spatial point, then evaluates the discretized residual for
/// any Brownian path on the same time grid.
class StochParabolicEvaluator {
 public:
  StochParabolicEvaluator(const StochIdentityInstance& inst, const std::vector<double>& x)
      : inst_(inst) {
    inst.validate();
    require(static_cast<int>(x.size()) == inst.m, "stochastic identity: spatial point dimension");
    const int m = inst.m;
    const int n = inst.steps();
    const double dt = inst.dt();
    nodes_.resize(n + 1);
    for (int k = 0; k <= n; ++k) {
      std::vector<double> c{k * dt};
      c.insert(c.end(), x.begin(), x.end());
      const SamplePoint pt(c);
      auto& nd = nodes_[k];
      const Jet<double> l = jet_of(inst.ell, pt);
      nd.theta = exp(l);
      nd.ud = jet_of(inst.drift, pt);
      nd.sigma = jet_of(inst.noise_shape, pt);
      nd.psi = jet_of(inst.psi, pt);
      nd.lt = derivative(l, 0);
      nd.b.assign(m, {});
      for (int i = 0; i < m; ++i) {
        nd.lx.push_back(derivative(l, i + 1));
        nd.psix.push_back(derivative(nd.psi, i + 1));
        for (int j = 0; j < m; ++j) nd.b[i].push_back(jet_of(inst.b[i][j], pt));
      }
      // A = -sum (b l_i l_j - b^{ij}_{x_j} l_i - b l_ij) - Psi
      Jet<double> A = nd.psi * -1.0;
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
          A -= nd.b[i][j] * nd.lx[i] * nd.lx[j] - derivative(nd.b[i][j], j + 1) * nd.lx[i] -
               nd.b[i][j] * derivative(nd.lx[i], j + 1);
      nd.A = A;
      // B = 2[A Psi - sum (A b l_i)_{x_j}] - A_t - sum (b Psi_{x_j})_{x_i}
      double B = 2.0 * (A * nd.psi).value() - derivative(A, 0).value();
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
          B -= 2.0 * derivative(A * nd.b[i][j] * nd.lx[i], j + 1).value();
          B -= derivative(nd.b[i][j] * nd.psix[j], i + 1).value();
        }
      nd.B = B;
      nd.quad.assign(m, std::vector<double>(m, 0.0));
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
          double c2 = -0.5 * derivative(nd.b[i][j], 0).value() +
                      (nd.psi * nd.b[i][j]).value();
          for (int ip = 0; ip < m; ++ip)
            for (int jp = 0; jp < m; ++jp)
              c2 += 2.0 * (nd.b[i][jp] * derivative(nd.b[ip][j] * nd.lx[ip], jp + 1)).value() -
                    derivative(nd.b[i][j] * nd.b[ip][jp] * nd.lx[ip], jp + 1).value();
          nd.quad[i][j] = c2;
        }
    }
  }

  StochResidual residual(const std::vector<double>& increments) const {
    require(static_cast<int>(increments.size()) == inst_.steps(),
            "StochParabolicEvaluator: path length mismatch");
    const int m = inst_.m;
    const int n = inst_.steps();
    const double dt = inst_.dt();
    using J = Jet<double>;

    std::vector<double> Bpath(n + 1, 0.0);
    for (int k = 0; k < n; ++k) Bpath[k + 1] = Bpath[k] + increments[k];

    // Node values needed for increments.
    std::vector<double> u(n + 1), v(n + 1);
    std::vector<std::vector<double>> ux(n + 1, std::vector<double>(m)),
        vx(n + 1, std::vector<double>(m));
    struct NodeTerms {
      double P1 = 0, Lu = 0, divbvx = 0, div3 = 0, rhs_dt = 0, boundary = 0;
      std::vector<double> bvx;  // sum_i b^{ij} v_{x_i}, indexed by j
    };
    std::vector<NodeTerms> terms(n + 1);

    for (int k = 0; k <= n; ++k) {
      const auto& nd = nodes_[k];
      const J U = nd.ud + nd.sigma * Bpath[k];
      const J V = nd.theta * U;
      std::vector<J> Ux, Vx;
      for (int i = 0; i < m; ++i) {
        Ux.push_back(derivative(U, i + 1));
        Vx.push_back(derivative(V, i + 1));
      }
      u[k] = U.value();
      v[k] = V.value();
      for (int i = 0; i < m; ++i) {
        ux[k][i] = Ux[i].value();
        vx[k][i] = Vx[i].value();
      }
      NodeTerms& tk = terms[k];
      J divbvx = V * 0.0;
      double Lu = 0.0;
      tk.bvx.assign(m, 0.0);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
          divbvx += derivative(nd.b[i][j] * Vx[i], j + 1);
          Lu += derivative(nd.b[i][j] * Ux[i], j + 1).value();
          tk.bvx[j] += (nd.b[i][j] * Vx[i]).value();
        }
      tk.divbvx = divbvx.value();
      tk.Lu = Lu;
      const double Av = (nd.A * V).value();
      tk.P1 = -tk.divbvx + Av;

      // Spatial divergence term.
      double div3 = 0.0;
      for (int j = 0; j < m; ++j) {
        J Q = V * 0.0;
        for (int i = 0; i < m; ++i) {
          for (int ip = 0; ip < m; ++ip)
            for (int jp = 0; jp < m; ++jp)
              Q += 2.0 * nd.b[i][j] * nd.b[ip][jp] * nd.lx[ip] * Vx[i] * Vx[jp] -
                   nd.b[i][j] * nd.b[ip][jp] * nd.lx[i] * Vx[ip] * Vx[jp];
          Q += nd.psi * nd.b[i][j] * Vx[i] * V -
               nd.b[i][j] * (nd.A * nd.lx[i] + 0.5 * nd.psix[i]) * V * V;
        }
        div3 += derivative(Q, j + 1).value();
      }
      tk.div3 = div3;

      double rhs = nd.B * v[k] * v[k] +
                   2.0 * tk.P1 * (-tk.divbvx + (nd.A.value() - nd.lt.value()) * v[k]);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) rhs += 2.0 * nd.quad[i][j] * vx[k][i] * vx[k][j];
      tk.rhs_dt = rhs;

      double bd = nd.A.value() * v[k] * v[k];
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) bd += nd.b[i][j].value() * vx[k][i] * vx[k][j];
      tk.boundary = bd;
    }

    double lhs = 0.0, rhs = 0.0, scale = 0.0;
    auto acc = [&scale](double& side, double term) {
      side += term;
      scale = std::max(scale, std::abs(term));
    };
    double ito = 0.0, dvterm = 0.0, divterm = 0.0, rdt = 0.0, qv = 0.0;
    for (int k = 0; k < n; ++k) {
      const auto& nd = nodes_[k];
      const auto& tk = terms[k];
      const double du = u[k + 1] - u[k];
      const double dv = v[k + 1] - v[k];
      ito += 2.0 * nd.theta.value() * tk.P1 * (du - tk.Lu * dt);
      double dvk = tk.divbvx * dv;
      for (int j = 0; j < m; ++j) dvk += tk.bvx[j] * (vx[k + 1][j] - vx[k][j]);
      dvterm += 2.0 * dvk;
      divterm += 2.0 * tk.div3 * dt;
      rdt += tk.rhs_dt * dt;
      const double th2 = nd.theta.value() * nd.theta.value();
      double q = nd.A.value() * du * du;
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
          const double di = (ux[k + 1][i] - ux[k][i]) + nd.lx[i].value() * du;
          const double dj = (ux[k + 1][j] - ux[k][j]) + nd.lx[j].value() * du;
          q += nd.b[i][j].value() * di * dj;
        }
      qv -= th2 * q;
    }
    acc(lhs, ito);
    acc(lhs, dvterm);
    acc(lhs, divterm);
    acc(rhs, rdt);
    acc(rhs, terms[n].boundary - terms[0].boundary);
    acc(rhs, qv);
    return {lhs, rhs, std::abs(lhs - rhs), std::max(scale, 1.0)};
  }

 private:
  StochIdentityInstance inst_;
  std::vector<detail::StochNode> nodes_;
};

/// Hyperbolic counterpart: the semimartingale is the velocity u_t.
class StochHyperbolicEvaluator {
 public:
  StochHyperbolicEvaluator(const StochIdentityInstance& inst, const std::vector<double>& x)
      : inst_(inst) {
    inst.validate();
    require(static_cast<int>(x.size()) == inst.m, "stochastic identity: spatial point dimension");
    const int m = inst.m;
    const int n = inst.steps();
    const double dt = inst.dt();
    const MultiPoly drift_t = differentiate(inst.drift, 0);
    nodes_.resize(n + 1);
    for (int k = 0; k <= n; ++k) {
      std::vector<double> c{k * dt};
      c.insert(c.end(), x.begin(), x.end());
      const SamplePoint pt(c);
      auto& nd = nodes_[k];
      const Jet<double> l = jet_of(inst.ell, pt);
      nd.theta = exp(l);
      nd.ud = jet_of(inst.drift, pt);
      nd.udt = jet_of(drift_t, pt);
      nd.sigma = jet_of(inst.noise_shape, pt);
      nd.psi = jet_of(inst.psi, pt);
      nd.lt = derivative(l, 0);
      const Jet<double> ltt = derivative(nd.lt, 0);
      nd.ltt = ltt.value();
      nd.psit = derivative(nd.psi, 0).value();
      nd.b.assign(m, {});
      for (int i = 0; i < m; ++i) {
        nd.lx.push_back(derivative(l, i + 1));
        nd.psix.push_back(derivative(nd.psi, i + 1));
        nd.ltx.push_back(derivative(nd.lt, i + 1).value());
        for (int j = 0; j < m; ++j) nd.b[i].push_back(jet_of(inst.b[i][j], pt));
      }
      // A = (l_t^2 - l_tt) - sum (b l_i l_j - b^{ij}_{x_j} l_i - b l_ij) - Psi
      Jet<double> A = nd.lt * nd.lt - ltt - nd.psi;
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
          A -= nd.b[i][j] * nd.lx[i] * nd.lx[j] - derivative(nd.b[i][j], j + 1) * nd.lx[i] -
               nd.b[i][j] * derivative(nd.lx[i], j + 1);
      nd.A = A;
      // B = A Psi + (A l_t)_t - sum (A b l_i)_{x_j} + (Psi_tt - sum (b Psi_{x_i})_{x_j}) / 2
      double B = (A * nd.psi).value() + derivative(A * nd.lt, 0).value() +
                 0.5 * derivative(derivative(nd.psi, 0), 0).value();
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
          B -= derivative(A * nd.b[i][j] * nd.lx[i], j + 1).value();
          B -= 0.5 * derivative(nd.b[i][j] * nd.psix[i], j + 1).value();
        }
      nd.B = B;

      double vt2 = nd.ltt - nd.psi.value();
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) vt2 += derivative(nd.b[i][j] * nd.lx[i], j + 1).value();
      nd.vt2_coef = vt2;
      nd.cross.assign(m, 0.0);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
          nd.cross[i] += -2.0 * (derivative(nd.b[i][j] * nd.lx[j], 0).value() +
                                 nd.b[i][j].value() * nd.ltx[j]);
      nd.quad.assign(m, std::vector<double>(m, 0.0));
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
          double c2 = derivative(nd.b[i][j] * nd.lt, 0).value() + (nd.psi * nd.b[i][j]).value();
          for (int ip = 0; ip < m; ++ip)
            for (int jp = 0; jp < m; ++jp)
              c2 += 2.0 * (nd.b[i][jp] * derivative(nd.b[ip][j] * nd.lx[ip], jp + 1)).value() -
                    derivative(nd.b[i][j] * nd.b[ip][jp] * nd.lx[ip], jp + 1).value();
          nd.quad[i][j] = c2;
        }
    }
  }

  StochResidual residual(const std::vector<double>& increments) const {
    require(static_cast<int>(increments.size()) == inst_.steps(),
            "StochHyperbolicEvaluator: path length mismatch");
    const int m = inst_.m;
    const int n = inst_.steps();
    const double dt = inst_.dt();
    using J = Jet<double>;

    std::vector<double> Bpath(n + 1, 0.0), Ipath(n + 1, 0.0);
    for (int k = 0; k < n; ++k) {
      Bpath[k + 1] = Bpath[k] + increments[k];
      Ipath[k + 1] = Ipath[k] + 0.5 * dt * (Bpath[k] + Bpath[k + 1]);
    }

    std::vector<double> w(n + 1), W(n + 1), Lu(n + 1), div(n + 1), rhs_dt(n + 1), energy(n + 1);
    for (int k = 0; k <= n; ++k) {
      const auto& nd = nodes_[k];
      const J U = nd.ud + nd.sigma * Ipath[k];
      const J Wt = nd.udt + nd.sigma * Bpath[k];
      const J V = nd.theta * U;
      const J Vt = nd.theta * (nd.lt * U + Wt);
      std::vector<J> Ux, Vx;
      for (int i = 0; i < m; ++i) {
        Ux.push_back(derivative(U, i + 1));
        Vx.push_back(derivative(V, i + 1));
      }
      w[k] = Wt.value();
      const double v = V.value(), vt = Vt.value();
      const double lt = nd.lt.value();
      double Wk = -2.0 * lt * vt + nd.psi.value() * v;
      double lu = 0.0;
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
          Wk += 2.0 * nd.b[i][j].value() * nd.lx[i].value() * Vx[j].value();
          lu += derivative(nd.b[i][j] * Ux[i], j + 1).value();
        }
      W[k] = Wk;
      Lu[k] = lu;

      double dsum = 0.0;
      for (int j = 0; j < m; ++j) {
        J Q = V * 0.0;
        for (int i = 0; i < m; ++i) {
          for (int ip = 0; ip < m; ++ip)
            for (int jp = 0; jp < m; ++jp)
              Q += 2.0 * nd.b[i][j] * nd.b[ip][jp] * nd.lx[ip] * Vx[i] * Vx[jp] -
                   nd.b[i][j] * nd.b[ip][jp] * nd.lx[i] * Vx[ip] * Vx[jp];
          Q += -2.0 * nd.b[i][j] * nd.lt * Vx[i] * Vt + nd.b[i][j] * nd.lx[i] * Vt * Vt +
               nd.psi * nd.b[i][j] * Vx[i] * V -
               (nd.A * nd.lx[i] + 0.5 * nd.psix[i]) * nd.b[i][j] * V * V;
        }
        dsum += derivative(Q, j + 1).value();
      }
      div[k] = dsum;

      double r = nd.vt2_coef * vt * vt + nd.B * v * v + Wk * Wk;
      for (int i = 0; i < m; ++i) {
        r += nd.cross[i] * Vx[i].value() * vt;
        for (int j = 0; j < m; ++j) r += nd.quad[i][j] * Vx[i].value() * Vx[j].value();
      }
      rhs_dt[k] = r;

      double e = lt * vt * vt - nd.psi.value() * vt * v +
                 (nd.A.value() * lt + 0.5 * nd.psit) * v * v;
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
          e += nd.b[i][j].value() * (lt * Vx[i].value() * Vx[j].value() -
                                     2.0 * nd.lx[i].value() * Vx[j].value() * vt);
      energy[k] = e;
    }

    double ito = 0.0, divterm = 0.0, rdt = 0.0, qv = 0.0;
    for (int k = 0; k < n; ++k) {
      const auto& nd = nodes_[k];
      const double dw = w[k + 1] - w[k];
      ito += nd.theta.value() * W[k] * (dw - Lu[k] * dt);
      divterm += div[k] * dt;
      rdt += rhs_dt[k] * dt;
      qv += nd.theta.value() * nd.theta.value() * nd.lt.value() * dw * dw;
    }
    const double tele = energy[n] - energy[0];
    const double lhs = ito + divterm + tele;
    const double rhs = rdt + qv;
    const double scale =
        std::max({1.0, std::abs(ito), std::abs(divterm), std::abs(tele), std::abs(rdt), std::abs(qv)});
    return {lhs, rhs, std::abs(lhs - rhs), scale};
  }

 private:
  StochIdentityInstance inst_;
  std::vector<detail::StochNode> nodes_;
};

inline StochResidual eval_stoch_parabolic_residual(const StochIdentityInstance& inst,
                                                   const std::vector<double>& x) {
  return StochParabolicEvaluator(inst, x).residual(inst.increments);
}

inline StochResidual eval_stoch_hyperbolic_residual(const StochIdentityInstance& inst,
                                                    const std::vector<double>& x) {
  return StochHyperbolicEvaluator(inst, x).residual(inst.increments);
}

// ---------------------------------------------------------------------------
// Refinement study of the discretized stochastic identities: mean absolute
// residual over Brownian paths on a ladder of time grids, each coarse grid
// observing the same fine path.

enum class StochEquation { Parabolic, Hyperbolic };

inline StochEquation parse_stoch_equation(std::string_view s) {
  if (s == "parabolic") return StochEquation::Parabolic;
  if (s == "hyperbolic") return StochEquation::Hyperbolic;
  throw ArgumentError("unknown stochastic equation '" + std::string(s) + "'");
}

inline std::string to_string(StochEquation e) { return e == StochEquation::Parabolic ? "parabolic" : "hyperbolic"; }

/// Reference instances on (t, x1): u_d = t x1^2 (parabolic) or t^2 x1^2
/// (hyperbolic), ell = t + x1, Psi = 1 (parabolic) or 0, b = 1, and
/// sigma = x1 (1 - x1) when `noisy`.
inline StochIdentityInstance stoch_reference_instance(StochEquation eq, bool noisy) {
  const auto t = MultiPoly::variable(2, 0), x = MultiPoly::variable(2, 1);
  const auto one = MultiPoly::constant(2, 1.0);
  StochIdentityInstance inst;
  inst.m = 1;
  inst.drift = eq == StochEquation::Parabolic ? t * x * x : t * t * x * x;
  inst.noise_shape = noisy ? x * (one - x) : MultiPoly(2);
  inst.ell = t + x;
  inst.psi = eq == StochEquation::Parabolic ? one : MultiPoly(2);
  inst.b = {{one}};
  inst.T = 1.0;
  return inst;
}

struct RefinementStudy {
  std::vector<int> steps;
  std::vector<double> mean_residual;
  std::vector<double> slopes;  // log2 ratio of consecutive levels
  double fitted_slope = 0.0;   // least-squares slope of -log2 residual against level
  int paths = 0;
};

inline RefinementStudy stoch_refinement_study(StochEquation eq, StochIdentityInstance inst, int coarse_steps,
                                              int halvings, int paths, std::uint64_t seed,
                                              const std::vector<double>& x) {
  require(coarse_steps >= 1 && halvings >= 1, "refinement study: need coarse_steps >= 1 and halvings >= 1");
  require(paths >= 1, "refinement study: need at least one path");
  const bool noisy = !inst.noise_shape.terms().empty();
  if (!noisy) paths = 1;
  const int fine = coarse_steps << halvings;
  RefinementStudy st;
  st.paths = paths;
  std::vector<std::unique_ptr<StochParabolicEvaluator>> par;
  std::vector<std::unique_ptr<StochHyperbolicEvaluator>> hyp;
  for (int l = 0; l <= halvings; ++l) {
    st.steps.push_back(coarse_steps << l);
    inst.increments.assign(st.steps.back(), 0.0);
    if (eq == StochEquation::Parabolic) par.push_back(std::make_unique<StochParabolicEvaluator>(inst, x));
    else hyp.push_back(std::make_unique<StochHyperbolicEvaluator>(inst, x));
  }
  st.mean_residual.assign(halvings + 1, 0.0);
  for (int p = 0; p < paths; ++p) {
    inst.increments = noisy ? brownian_increments(fine, inst.T, derive_seed(seed, "stoch_identity", p))
                            : std::vector<double>(fine, 0.0);
    for (int l = 0; l <= halvings; ++l) {
      const auto c = inst.coarsened(1 << (halvings - l));
      const double r = eq == StochEquation::Parabolic ? par[l]->residual(c.increments).residual
                                                      : hyp[l]->residual(c.increments).residual;
      st.mean_residual[l] += r / paths;
    }
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double L = halvings + 1;
  for (int l = 0; l <= halvings; ++l) {
    if (l > 0) st.slopes.push_back(std::log2(st.mean_residual[l - 1] / st.mean_residual[l]));
    const double y = -std::log2(st.mean_residual[l]);
    sx += l, sy += y, sxx += double(l) * l, sxy += l * y;
  }
  st.fitted_slope = (L * sxy - sx * sy) / (L * sxx - sx * sx);
  return st;
}

// Random instances and the suite runner.

enum class IdentityKind { Ode, Multiplier, Deterministic, StochParabolicDrift, StochHyperbolicDrift };

inline IdentityKind parse_identity_kind(std::string_view s) {
  if (s == "ode") return IdentityKind::Ode;
  if (s == "multiplier") return IdentityKind::Multiplier;
  if (s == "deterministic") return IdentityKind::Deterministic;
  if (s == "stoch_parabolic_drift") return IdentityKind::StochParabolicDrift;
  if (s == "stoch_hyperbolic_drift") return IdentityKind::StochHyperbolicDrift;
  throw ArgumentError("unknown identity kind '" + std::string(s) + "'");
}

inline std::string to_string(IdentityKind k) {
  switch (k) {
    case IdentityKind::Ode: return "ode";
    case IdentityKind::Multiplier: return "multiplier";
    case IdentityKind::Deterministic: return "deterministic";
    case IdentityKind::StochParabolicDrift: return "stoch_parabolic_drift";
    case IdentityKind::StochHyperbolicDrift: return "stoch_hyperbolic_drift";
  }
  return "?";
}

inline PolyMatrix random_symmetric(int m, int degree, std::uint64_t seed, double lo, double hi,
                                   bool time_dependent = true) {
  PolyMatrix b(m, std::vector<MultiPoly>(m, MultiPoly(m + 1)));
  std::vector<int> space;
  for (int i = 1; i <= m; ++i) space.push_back(i);
  int idx = 0;
  for (int j = 0; j < m; ++j)
    for (int k = j; k < m; ++k, ++idx) {
      const auto s = derive_seed(seed, "b", idx);
      MultiPoly p = time_dependent ? random_poly(m + 1, degree, s, lo, hi)
                                   : random_poly_in(m + 1, space, degree, s, lo, hi);
      if (j == k) p += MultiPoly::constant(m + 1, 1.5);  // keep the diagonal away from zero
      b[j][k] = p;
      b[k][j] = p;
    }
  return b;
}

/// Random instance of the complex weighted identity (seeded, m in [1, 3]).
inline DetIdentityInstance random_det_instance(int m, std::uint64_t seed) {
  DetIdentityInstance inst;
  inst.m = m;
  const int d = m + 1;
  inst.z = ComplexPoly(random_poly(d, 3, derive_seed(seed, "z.re"), -1, 1),
                       random_poly(d, 3, derive_seed(seed, "z.im"), -1, 1));
  inst.ell = random_poly(d, 2, derive_seed(seed, "ell"), -0.5, 0.5);
  inst.alpha = random_poly(d, 2, derive_seed(seed, "alpha"), -1, 1);
  inst.beta = random_poly(d, 2, derive_seed(seed, "beta"), -1, 1);
  inst.b = random_symmetric(m, 2, derive_seed(seed, "b"), -0.5, 0.5);
  Rng rng(derive_seed(seed, "params"));
  inst.a_param = rng.uniform(-1, 1);
  inst.b_param = rng.uniform(-1, 1);
  inst.lambda = rng.uniform(-2, 2);
  return inst;
}

/// Random drift-only stochastic instance (sigma = 0).
inline StochIdentityInstance random_stoch_drift_instance(int m, int steps, std::uint64_t seed) {
  StochIdentityInstance inst;
  inst.m = m;
  const int d = m + 1;
  inst.drift = random_poly(d, 3, derive_seed(seed, "drift"), -1, 1);
  inst.noise_shape = MultiPoly(d);
  inst.ell = random_poly(d, 2, derive_seed(seed, "ell"), -0.5, 0.5);
  inst.psi = random_poly(d, 2, derive_seed(seed, "psi"), -1, 1);
  inst.b = random_symmetric(m, 2, derive_seed(seed, "b"), -0.3, 0.3);
  inst.T = 1.0;
  inst.increments.assign(steps, 0.0);
  return inst;
}

struct SuiteOptions {
  int points_per_instance = 100;
  int stoch_steps = 512;
};

inline IdentityReport verify_identity_suite(IdentityKind kind, int n_instances, std::uint64_t seed,
                                            double tol, const SuiteOptions& opt = {}) {
  require(n_instances >= 0, "verify_identity_suite: negative instance count");
  IdentityReport rep;
  rep.kind = to_string(kind);
  const int P = opt.points_per_instance;
  for (int inst_idx = 0; inst_idx < n_instances; ++inst_idx) {
    const std::uint64_t s = derive_seed(seed, rep.kind, inst_idx);
    Rng rng(derive_seed(s, "points"));
    const int m = 1 + inst_idx % 3;
    switch (kind) {
      case IdentityKind::Ode: {
        const int dim = 1 + inst_idx % 3;
        std::vector<MultiPoly> x;
        for (int c = 0; c < dim; ++c) x.push_back(random_poly(1, 3, derive_seed(s, "x", c), -1, 1));
        const double lambda = rng.uniform(-3, 3);
        for (int p = 0; p < P; ++p) {
          const auto sp = eval_ode_identity(lambda, x, rng.uniform(-1, 1));
          rep.add(sp.lhs, sp.rhs);
        }
        break;
      }
      case IdentityKind::Multiplier: {
        const MultiPoly z = random_poly(m + 1, 3, derive_seed(s, "z"), -1, 1);
        std::vector<MultiPoly> h;
        for (int c = 0; c < m; ++c) h.push_back(random_poly(m + 1, 2, derive_seed(s, "h", c), -1, 1));
        for (int p = 0; p < P; ++p) {
          std::vector<double> c(m + 1);
          for (auto& ci : c) ci = rng.uniform(-1, 1);
          const auto sp = eval_multiplier_identity(h, z, SamplePoint(c));
          rep.add(sp.lhs, sp.rhs);
        }
        break;
      }
      case IdentityKind::Deterministic: {
        const DetIdentityInstance inst = random_det_instance(m, s);
        for (int p = 0; p < P; ++p) {
          std::vector<double> c(m + 1);
          for (auto& ci : c) ci = rng.uniform(-1, 1);
          const auto t = eval_det_identity(inst, SamplePoint(c));
          rep.add(t.lhs.real(), t.rhs.real());
        }
        break;
      }
      case IdentityKind::StochParabolicDrift:
      case IdentityKind::StochHyperbolicDrift: {
        const int ms = 1 + inst_idx % 2;
        const auto inst = random_stoch_drift_instance(ms, opt.stoch_steps, s);
        for (int p = 0; p < P; ++p) {
          std::vector<double> x(ms);
          for (auto& xi : x) xi = rng.uniform(-1, 1);
          const auto r = kind == IdentityKind::StochParabolicDrift
                             ? eval_stoch_parabolic_residual(inst, x)
                             : eval_stoch_hyperbolic_residual(inst, x);
          rep.add(r.lhs, r.rhs);
        }
        break;
      }
    }
  }
  rep.finalize(tol);
  return rep;
}

/// Text form of instance `index` of a suite run: one `# name` header per
/// polynomial followed by its `e0 ... ek : coeff` lines.
inline std::string dump_instance_text(IdentityKind kind, std::uint64_t seed, int index,
                                      const SuiteOptions& opt = {}) {
  require(index >= 0, "dump_instance_text: negative index");
  const std::string name = to_string(kind);
  const std::uint64_t s = derive_seed(seed, name, index);
  const int m = 1 + index % 3;
  std::string out = "# kind " + name + " instance " + std::to_string(index) + "\n";
  auto put = [&out](const std::string& label, const MultiPoly& p) {
    out += "# " + label + " dims " + std::to_string(p.dims()) + "\n" + to_text(p);
    if (!out.empty() && out.back() != '\n') out += '\n';
  };
  auto put_matrix = [&](const PolyMatrix& b) {
    for (std::size_t j = 0; j < b.size(); ++j)
      for (std::size_t k = j; k < b.size(); ++k) put("b" + std::to_string(j) + std::to_string(k), b[j][k]);
  };
  switch (kind) {
    case IdentityKind::Ode: {
      const int dim = 1 + index % 3;
      for (int c = 0; c < dim; ++c) put("x" + std::to_string(c), random_poly(1, 3, derive_seed(s, "x", c), -1, 1));
      break;
    }
    case IdentityKind::Multiplier: {
      put("z", random_poly(m + 1, 3, derive_seed(s, "z"), -1, 1));
      for (int c = 0; c < m; ++c) put("h" + std::to_string(c), random_poly(m + 1, 2, derive_seed(s, "h", c), -1, 1));
      break;
    }
    case IdentityKind::Deterministic: {
      const auto inst = random_det_instance(m, s);
      put("z.re", inst.z.re);
      put("z.im", inst.z.im);
      put("ell", inst.ell);
      put("alpha", inst.alpha);
      put("beta", inst.beta);
      put_matrix(inst.b);
      out += "# a " + shortest(inst.a_param) + " b " + shortest(inst.b_param) + " lambda " +
             shortest(inst.lambda) + "\n";
      break;
    }
    case IdentityKind::StochParabolicDrift:
    case IdentityKind::StochHyperbolicDrift: {
      const auto inst = random_stoch_drift_instance(1 + index % 2, opt.stoch_steps, s);
      put("drift", inst.drift);
      put("ell", inst.ell);
      put("psi", inst.psi);
      put_matrix(inst.b);
      break;
    }
  }
  return out;
}

}  // namespace pdectl
