#pragma once

// Symbolic engine for the weighted identities: a field element is a finite
// sum  sum_k e^{k ell} P_k  with complex polynomial P_k. Derivatives are
// formed on the polynomials, (e^{k ell} P)' = e^{k ell}(P' + k ell' P), and
// only the final expression is evaluated at a point.

#include <complex>
#include <map>

#include "pdectl/multipoly.hpp"

namespace oracle {

using pdectl::MultiPoly;
using cplx = std::complex<double>;

inline constexpr int kCap = 128;

struct CPoly {
  MultiPoly re, im;
  explicit CPoly(int dims) : re(dims, kCap), im(dims, kCap) {}
  CPoly(MultiPoly r, MultiPoly i) : re(std::move(r)), im(std::move(i)) {}
};

inline MultiPoly recap(const MultiPoly& p) {
  MultiPoly r(p.dims(), kCap);
  r += p;
  return r;
}

inline CPoly operator*(const CPoly& a, const CPoly& b) {
  return {recap(a.re * b.re - a.im * b.im), recap(a.re * b.im + a.im * b.re)};
}
inline CPoly scale(const CPoly& a, cplx s) {
  return {a.re * s.real() - a.im * s.imag(), a.re * s.imag() + a.im * s.real()};
}

class ExpPoly {
 public:
  ExpPoly() = default;
  ExpPoly(int dims, const MultiPoly* ell) : dims_(dims), ell_(ell) {}

  static ExpPoly from(const CPoly& p, int k, const MultiPoly* ell) {
    ExpPoly e(p.re.dims(), ell);
    e.parts_.emplace(k, p);
    return e;
  }

  ExpPoly& operator+=(const ExpPoly& o) {
    adopt(o);
    for (const auto& [k, p] : o.parts_) {
      auto it = parts_.find(k);
      if (it == parts_.end()) {
        parts_.emplace(k, p);
      } else {
        it->second.re += p.re;
        it->second.im += p.im;
      }
    }
    return *this;
  }
  ExpPoly& operator-=(const ExpPoly& o) { return *this += o * cplx(-1.0); }

  friend ExpPoly operator+(ExpPoly a, const ExpPoly& b) { return a += b; }
  friend ExpPoly operator-(ExpPoly a, const ExpPoly& b) { return a -= b; }
  friend ExpPoly operator*(const ExpPoly& a, cplx s) {
    ExpPoly r(a.dims_, a.ell_);
    for (const auto& [k, p] : a.parts_) r.parts_.emplace(k, scale(p, s));
    return r;
  }
  friend ExpPoly operator*(cplx s, const ExpPoly& a) { return a * s; }
  friend ExpPoly operator+(ExpPoly a, cplx s) { return a += a.constant(s); }
  friend ExpPoly operator-(ExpPoly a, cplx s) { return a += a.constant(-s); }

  friend ExpPoly operator*(const ExpPoly& a, const ExpPoly& b) {
    ExpPoly r(a.dims_ ? a.dims_ : b.dims_, a.ell_ ? a.ell_ : b.ell_);
    for (const auto& [ka, pa] : a.parts_)
      for (const auto& [kb, pb] : b.parts_) r += from(pa * pb, ka + kb, r.ell_);
    return r;
  }

  friend ExpPoly derivative(const ExpPoly& a, int axis) {
    ExpPoly r(a.dims_, a.ell_);
    const MultiPoly dl = pdectl::differentiate(*a.ell_, axis);
    for (const auto& [k, p] : a.parts_) {
      CPoly d(pdectl::differentiate(p.re, axis), pdectl::differentiate(p.im, axis));
      if (k != 0) {
        d.re += recap(dl * p.re) * static_cast<double>(k);
        d.im += recap(dl * p.im) * static_cast<double>(k);
      }
      r += from(d, k, a.ell_);
    }
    return r;
  }

  friend ExpPoly conj(const ExpPoly& a) {
    ExpPoly r = a;
    for (auto& [k, p] : r.parts_) p.im *= -1.0;
    return r;
  }

  cplx at(const pdectl::SamplePoint& pt) const {
    const double l = pdectl::evaluate(*ell_, pt);
    cplx s = 0.0;
    for (const auto& [k, p] : parts_)
      s += std::exp(k * l) * cplx(pdectl::evaluate(p.re, pt), pdectl::evaluate(p.im, pt));
    return s;
  }

 private:
  ExpPoly constant(cplx s) const {
    CPoly c(dims_);
    c.re.add_term({}, s.real());
    c.im.add_term({}, s.imag());
    return from(c, 0, ell_);
  }
  void adopt(const ExpPoly& o) {
    if (!dims_) {
      dims_ = o.dims_;
      ell_ = o.ell_;
    }
  }

  int dims_ = 0;
  const MultiPoly* ell_ = nullptr;
  std::map<int, CPoly> parts_;
};

/// Calculus engine that builds both sides symbolically, evaluating once at
/// the end.
class SymbolicEngine {
 public:
  using Field = ExpPoly;
  SymbolicEngine(const MultiPoly& ell, pdectl::SamplePoint pt) : ell_(recap(ell)), pt_(std::move(pt)) {}
  Field lift(const MultiPoly& p) const { return ExpPoly::from(CPoly(recap(p), MultiPoly(p.dims(), kCap)), 0, &ell_); }
  Field lift(const pdectl::ComplexPoly& p) const {
    return ExpPoly::from(CPoly(recap(p.re), recap(p.im)), 0, &ell_);
  }
  Field theta() const {
    CPoly one(ell_.dims());
    one.re.add_term({}, 1.0);
    return ExpPoly::from(one, 1, &ell_);
  }
  cplx value(const Field& f) const { return f.at(pt_); }

 private:
  MultiPoly ell_;
  pdectl::SamplePoint pt_;
};

}  // namespace oracle
