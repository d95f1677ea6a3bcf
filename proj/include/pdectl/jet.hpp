#pragma once

// Truncated multivariate Taylor jets.
//
// A Jet holds the Taylor coefficients c_a = (d^a f)(x0) / a! of a smooth
// function at a base point x0 for every multi-index |a| <= order. Sums,
// products, exp and partial derivatives act on the coefficient table, which is
// the Leibniz/chain rule carried out mechanically. Differentiation lowers the
// order by one; a product has the smaller order of its operands. A jet of
// order 0 is just a value.

#include <algorithm>
#include <array>
#include <complex>
#include <type_traits>
#include <vector>

#include "pdectl/errors.hpp"
#include "pdectl/multipoly.hpp"

namespace pdectl {

inline constexpr int kJetOrder = 3;

namespace detail {

constexpr int binom(int n, int k) {
  if (k < 0 || k > n) return 0;
  int r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

inline constexpr int kJetCapacity = binom(kMaxDims + kJetOrder, kJetOrder);

struct JetTables {
  int dims = 0;
  std::vector<Exponent> mono;                     // graded order
  std::array<int, 256> index{};                   // dense lookup, exponents <= 3
  std::array<int, kJetOrder + 2> count{};         // coefficients with degree <= o
  std::array<std::vector<std::array<int, 3>>, kJetOrder + 1> pairs;  // (i, j, target)
  std::array<std::vector<std::pair<int, double>>, kMaxDims> deriv;   // per target

  static int key(const Exponent& e) { return e[0] | (e[1] << 2) | (e[2] << 4) | (e[3] << 6); }

  explicit JetTables(int d) : dims(d) {
    mono = monomials_up_to(d, kJetOrder);
    index.fill(-1);
    for (int i = 0; i < static_cast<int>(mono.size()); ++i) index[key(mono[i])] = i;
    for (int o = 0; o <= kJetOrder; ++o) count[o] = binom(d + o, o);
    for (int o = 0; o <= kJetOrder; ++o) {
      for (int i = 0; i < count[o]; ++i)
        for (int j = 0; j < count[o]; ++j) {
          if (total_degree(mono[i]) + total_degree(mono[j]) > o) continue;
          Exponent e;
          for (int k = 0; k < kMaxDims; ++k) e[k] = mono[i][k] + mono[j][k];
          pairs[o].push_back({i, j, index[key(e)]});
        }
    }
    for (int a = 0; a < d; ++a) {
      for (int i = 0; i < count[kJetOrder - 1]; ++i) {
        Exponent e = mono[i];
        e[a] += 1;
        deriv[a].emplace_back(index[key(e)], static_cast<double>(e[a]));
      }
    }
  }
};

inline const JetTables& jet_tables(int dims) {
  static const std::array<JetTables, kMaxDims> tables = {JetTables(1), JetTables(2),
                                                         JetTables(3), JetTables(4)};
  return tables[dims - 1];
}

}  // namespace detail

template <class T>
class Jet {
 public:
  using value_type = T;

  Jet() = default;

  /// Constant jet.
  Jet(int dims, int order, T value) : dims_(dims), order_(order) {
    require(dims >= 1 && dims <= kMaxDims, "Jet: dims must be in [1, 4]");
    require(order >= 0 && order <= kJetOrder, "Jet: order out of range");
    c_[0] = value;
  }

  template <class U>
    requires(!std::is_same_v<U, T> && std::is_convertible_v<U, T>)
  explicit Jet(const Jet<U>& o) : dims_(o.dims()), order_(o.order()) {
    for (int i = 0; i < size(); ++i) c_[i] = T(o[i]);
  }

  int dims() const { return dims_; }
  int order() const { return order_; }
  int size() const { return dims_ == 0 ? 0 : detail::jet_tables(dims_).count[order_]; }
  T value() const { return c_[0]; }
  T operator[](int i) const { return c_[i]; }
  T& operator[](int i) { return c_[i]; }

  /// Coefficient of h^e (zero if beyond the order).
  T coeff(const Exponent& e) const {
    if (total_degree(e) > order_) return T{};
    return c_[detail::jet_tables(dims_).index[detail::JetTables::key(e)]];
  }

  Jet truncated(int order) const {
    Jet r = *this;
    r.order_ = std::min(order_, order);
    return r;
  }

  Jet& operator+=(const Jet& o) {
    merge_shape(o);
    for (int i = 0; i < size(); ++i) c_[i] += o.c_[i];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    merge_shape(o);
    for (int i = 0; i < size(); ++i) c_[i] -= o.c_[i];
    return *this;
  }
  template <class S>
  Jet& operator*=(const S& s) {
    for (int i = 0; i < size(); ++i) c_[i] *= s;
    return *this;
  }

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator-(Jet a) { return a *= T(-1); }
  friend Jet operator*(Jet a, const T& s) { return a *= s; }
  friend Jet operator*(const T& s, Jet a) { return a *= s; }
  friend Jet operator+(Jet a, const T& s) {
    a.c_[0] += s;
    return a;
  }
  friend Jet operator+(const T& s, Jet a) { return a + s; }
  friend Jet operator-(Jet a, const T& s) {
    a.c_[0] -= s;
    return a;
  }
  friend Jet operator-(const T& s, const Jet& a) { return -a + s; }

  friend Jet operator*(const Jet& a, const Jet& b) {
    require(a.dims_ == b.dims_, "Jet: dimension mismatch");
    Jet r;
    r.dims_ = a.dims_;
    r.order_ = std::min(a.order_, b.order_);
    const auto& tab = detail::jet_tables(a.dims_);
    for (const auto& [i, j, k] : tab.pairs[r.order_]) r.c_[k] += a.c_[i] * b.c_[j];
    return r;
  }

  /// Partial derivative along `axis`; the order drops by one.
  friend Jet derivative(const Jet& a, int axis) {
    require(axis >= 0 && axis < a.dims_, "Jet derivative: axis out of range");
    require(a.order_ >= 1, "Jet derivative: order exhausted");
    Jet r;
    r.dims_ = a.dims_;
    r.order_ = a.order_ - 1;
    const auto& d = detail::jet_tables(a.dims_).deriv[axis];
    for (int i = 0; i < r.size(); ++i) r.c_[i] = a.c_[d[i].first] * d[i].second;
    return r;
  }

  friend Jet conj(const Jet& a) {
    if constexpr (std::is_same_v<T, std::complex<double>>) {
      Jet r = a;
      for (int i = 0; i < r.size(); ++i) r.c_[i] = std::conj(r.c_[i]);
      return r;
    } else {
      return a;
    }
  }

  /// exp(a) = e^{a0} * sum_n h^n / n!, where h = a - a0 is nilpotent.
  friend Jet exp(const Jet& a) {
    Jet h = a;
    h.c_[0] = T{};
    Jet sum(a.dims_, a.order_, T(1));
    Jet term = sum;
    for (int n = 1; n <= a.order_; ++n) {
      term = term * h;
      term *= T(1.0 / n);
      sum += term;
    }
    sum *= std::exp(a.c_[0]);
    return sum;
  }

 private:
  void merge_shape(const Jet& o) {
    if (dims_ == 0) {
      dims_ = o.dims_;
      order_ = o.order_;
      return;
    }
    require(dims_ == o.dims_, "Jet: dimension mismatch");
    order_ = std::min(order_, o.order_);
  }

  int dims_ = 0;
  int order_ = 0;
  std::array<T, detail::kJetCapacity> c_{};
};

/// Taylor jet of a polynomial at `pt` (binomial re-expansion of each term).
template <class T = double>
Jet<T> jet_of(const MultiPoly& p, const SamplePoint& pt, int order = kJetOrder) {
  require(static_cast<int>(pt.size()) == p.dims(), "jet_of: dimension mismatch");
  const int dims = p.dims();
  Jet<T> r(dims, order, T{});
  const auto& tab = detail::jet_tables(dims);
  for (const auto& [e, c] : p.terms()) {
    for (int i = 0; i < tab.count[order]; ++i) {
      const Exponent& b = tab.mono[i];
      double w = c;
      for (int v = 0; v < dims && w != 0.0; ++v) {
        if (b[v] > e[v]) {
          w = 0.0;
          break;
        }
        double pw = 1.0;
        for (int s = 0; s < e[v] - b[v]; ++s) pw *= pt[v];
        w *= detail::binom(e[v], b[v]) * pw;
      }
      if (w != 0.0) r[i] += T(w);
    }
  }
  return r;
}

inline Jet<std::complex<double>> jet_of(const ComplexPoly& p, const SamplePoint& pt,
                                        int order = kJetOrder) {
  const Jet<double> re = jet_of<double>(p.re, pt, order);
  const Jet<double> im = jet_of<double>(p.im, pt, order);
  Jet<std::complex<double>> r(p.dims(), order, {});
  for (int i = 0; i < r.size(); ++i) r[i] = {re[i], im[i]};
  return r;
}

}  // namespace pdectl
