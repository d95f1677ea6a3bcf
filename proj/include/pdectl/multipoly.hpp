#pragma once

// Sparse multivariate polynomials in (t, x_1, ..., x_m) with double
// coefficients. Variable 0 is time. Differentiation and products are done on
// the coefficient table, so the only error source downstream is round-off.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "pdectl/errors.hpp"
#include "pdectl/rng.hpp"

namespace pdectl {

inline constexpr int kMaxDims = 4;
inline constexpr int kDefaultDegreeCap = 4;

using Exponent = std::array<int, kMaxDims>;

inline int total_degree(const Exponent& e) { return e[0] + e[1] + e[2] + e[3]; }

/// All exponents of total degree <= degree in `dims` variables, graded
/// (by total degree) then lexicographic. This order fixes the draw order of
/// random_poly and therefore its cross-platform reproducibility.
inline std::vector<Exponent> monomials_up_to(int dims, int degree) {
  std::vector<Exponent> out;
  for (int d = 0; d <= degree; ++d) {
    Exponent e{};
    // Enumerate compositions of d into `dims` parts, lexicographically
    // descending in the leading exponent.
    auto rec = [&](auto&& self, int var, int left) -> void {
      if (var == dims - 1) {
        e[var] = left;
        out.push_back(e);
        return;
      }
      for (int k = left; k >= 0; --k) {
        e[var] = k;
        self(self, var + 1, left - k);
      }
      e[var] = 0;
    };
    rec(rec, 0, d);
  }
  return out;
}

class MultiPoly {
 public:
  using Terms = std::map<Exponent, double>;

  MultiPoly() : MultiPoly(1) {}

  explicit MultiPoly(int dims, int degree_cap = kDefaultDegreeCap)
      : dims_(dims), cap_(degree_cap) {
    require(dims >= 1 && dims <= kMaxDims, "MultiPoly: dims must be in [1, 4]");
    require(degree_cap >= 0, "MultiPoly: negative degree cap");
  }

  static MultiPoly constant(int dims, double c, int degree_cap = kDefaultDegreeCap) {
    MultiPoly p(dims, degree_cap);
    p.add_term(Exponent{}, c);
    return p;
  }

  static MultiPoly variable(int dims, int axis, int degree_cap = kDefaultDegreeCap) {
    require(axis >= 0 && axis < dims, "MultiPoly::variable: axis out of range");
    MultiPoly p(dims, degree_cap);
    Exponent e{};
    e[axis] = 1;
    p.add_term(e, 1.0);
    return p;
  }

  int dims() const { return dims_; }
  int degree_cap() const { return cap_; }
  const Terms& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }

  int degree() const {
    int d = 0;
    for (const auto& [e, c] : terms_) d = std::max(d, total_degree(e));
    return d;
  }

  double coeff(const Exponent& e) const {
    auto it = terms_.find(e);
    return it == terms_.end() ? 0.0 : it->second;
  }

  /// Adds c * monomial(e); drops the entry if it cancels to exactly zero.
  void add_term(const Exponent& e, double c) {
    for (int i = dims_; i < kMaxDims; ++i)
      require(e[i] == 0, "MultiPoly: exponent uses a variable beyond dims");
    for (int i = 0; i < dims_; ++i) require(e[i] >= 0, "MultiPoly: negative exponent");
    require(total_degree(e) <= cap_, "MultiPoly: term exceeds degree cap");
    if (c == 0.0) return;
    auto [it, inserted] = terms_.try_emplace(e, c);
    if (!inserted) {
      it->second += c;
      if (it->second == 0.0) terms_.erase(it);
    }
  }

  MultiPoly& operator+=(const MultiPoly& o) {
    check_dims(o);
    cap_ = std::max(cap_, o.cap_);
    for (const auto& [e, c] : o.terms_) add_term(e, c);
    return *this;
  }
  MultiPoly& operator-=(const MultiPoly& o) {
    check_dims(o);
    cap_ = std::max(cap_, o.cap_);
    for (const auto& [e, c] : o.terms_) add_term(e, -c);
    return *this;
  }
  MultiPoly& operator*=(double s) {
    if (s == 0.0) {
      terms_.clear();
      return *this;
    }
    for (auto& [e, c] : terms_) c *= s;
    return *this;
  }

  friend MultiPoly operator+(MultiPoly a, const MultiPoly& b) { return a += b; }
  friend MultiPoly operator-(MultiPoly a, const MultiPoly& b) { return a -= b; }
  friend MultiPoly operator*(MultiPoly a, double s) { return a *= s; }
  friend MultiPoly operator*(double s, MultiPoly a) { return a *= s; }
  friend MultiPoly operator-(MultiPoly a) { return a *= -1.0; }

  /// Product; the result's degree cap is the sum of the operands' caps.
  friend MultiPoly operator*(const MultiPoly& a, const MultiPoly& b) {
    a.check_dims(b);
    MultiPoly r(a.dims_, a.cap_ + b.cap_);
    for (const auto& [ea, ca] : a.terms_)
      for (const auto& [eb, cb] : b.terms_) {
        Exponent e;
        for (int i = 0; i < kMaxDims; ++i) e[i] = ea[i] + eb[i];
        r.add_term(e, ca * cb);
      }
    return r;
  }

  friend bool operator==(const MultiPoly& a, const MultiPoly& b) {
    return a.dims_ == b.dims_ && a.terms_ == b.terms_;
  }

 private:
  void check_dims(const MultiPoly& o) const {
    require(dims_ == o.dims_, "MultiPoly: dimension mismatch");
  }

  int dims_;
  int cap_;
  Terms terms_;
};

struct ComplexPoly {
  MultiPoly re;
  MultiPoly im;

  ComplexPoly() = default;
  explicit ComplexPoly(MultiPoly real) : re(std::move(real)), im(re.dims(), re.degree_cap()) {}
  ComplexPoly(MultiPoly real, MultiPoly imag) : re(std::move(real)), im(std::move(imag)) {
    require(re.dims() == im.dims(), "ComplexPoly: re/im dimension mismatch");
  }
  int dims() const { return re.dims(); }
};

struct SamplePoint {
  std::vector<double> coords;

  SamplePoint() = default;
  SamplePoint(std::initializer_list<double> c) : coords(c) { validate(); }
  explicit SamplePoint(std::vector<double> c) : coords(std::move(c)) { validate(); }

  std::size_t size() const { return coords.size(); }
  double operator[](std::size_t i) const { return coords[i]; }

 private:
  void validate() const {
    for (double v : coords) require(std::isfinite(v), "SamplePoint: non-finite coordinate");
  }
};

/// Exact partial derivative along `axis` (0 = t).
inline MultiPoly differentiate(const MultiPoly& p, int axis) {
  require(axis >= 0 && axis < p.dims(), "differentiate: axis out of range");
  MultiPoly r(p.dims(), p.degree_cap());
  for (const auto& [e, c] : p.terms()) {
    if (e[axis] == 0) continue;
    Exponent f = e;
    f[axis] -= 1;
    r.add_term(f, c * e[axis]);
  }
  return r;
}

namespace detail {

// Horner evaluation of terms[first, last), all of which share the exponents
// of variables < var. Terms are in lexicographic order, so each variable's
// exponent is non-decreasing within a shared prefix.
template <class It>
double horner(It first, It last, int var, int dims, const std::vector<double>& x) {
  if (first == last) return 0.0;
  if (var == dims) return first->second;
  // Split into runs with equal exponent in `var`, then fold from the top.
  std::vector<std::pair<int, double>> groups;
  for (It it = first; it != last;) {
    const int k = it->first[var];
    It stop = it;
    while (stop != last && stop->first[var] == k) ++stop;
    groups.emplace_back(k, horner(it, stop, var + 1, dims, x));
    it = stop;
  }
  double acc = 0.0;
  int prev = groups.back().first;
  for (auto g = groups.rbegin(); g != groups.rend(); ++g) {
    for (int s = g->first; s < prev; ++s) acc *= x[var];
    acc += g->second;
    prev = g->first;
  }
  for (int s = 0; s < prev; ++s) acc *= x[var];
  return acc;
}

}  // namespace detail

inline double evaluate(const MultiPoly& p, const SamplePoint& pt) {
  require(static_cast<int>(pt.size()) == p.dims(), "evaluate: dimension mismatch");
  if (p.is_zero()) return 0.0;
  return detail::horner(p.terms().begin(), p.terms().end(), 0, p.dims(), pt.coords);
}

inline std::complex<double> evaluate(const ComplexPoly& p, const SamplePoint& pt) {
  return {evaluate(p.re, pt), evaluate(p.im, pt)};
}

/// Every monomial of total degree <= degree receives a coefficient drawn
/// uniformly from [lo, hi] (graded-lex draw order, xoshiro256** stream).
inline MultiPoly random_poly(int dims, int degree, std::uint64_t seed, double lo, double hi,
                             int degree_cap = kDefaultDegreeCap) {
  require(dims >= 1 && dims <= kMaxDims, "random_poly: dims must be in [1, 4]");
  require(degree >= 0, "random_poly: negative degree");
  require(lo <= hi, "random_poly: empty coefficient range");
  MultiPoly p(dims, std::max(degree_cap, degree));
  Rng rng(seed);
  for (const auto& e : monomials_up_to(dims, degree)) p.add_term(e, rng.uniform(lo, hi));
  return p;
}

/// Polynomial in a subset of variables: only the listed axes may appear.
inline MultiPoly random_poly_in(int dims, const std::vector<int>& axes, int degree,
                                std::uint64_t seed, double lo, double hi) {
  MultiPoly sub = random_poly(static_cast<int>(axes.size()), degree, seed, lo, hi);
  MultiPoly p(dims, sub.degree_cap());
  for (const auto& [e, c] : sub.terms()) {
    Exponent f{};
    for (std::size_t i = 0; i < axes.size(); ++i) f[axes[i]] = e[i];
    p.add_term(f, c);
  }
  return p;
}

/// One line per term: "e0 e1 ... ek : coeff" (17 significant digits).
inline void write_text(std::ostream& os, const MultiPoly& p) {
  std::ostringstream line;
  line.precision(17);
  for (const auto& [e, c] : p.terms()) {
    line.str("");
    for (int i = 0; i < p.dims(); ++i) line << e[i] << ' ';
    line << ": " << c << '\n';
    os << line.str();
  }
}

inline std::string to_text(const MultiPoly& p) {
  std::ostringstream os;
  write_text(os, p);
  return os.str();
}

inline MultiPoly from_text(const std::string& text, int dims, int degree_cap = 64) {
  MultiPoly p(dims, degree_cap);
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos) throw ArgumentError("from_text: missing ':' in '" + line + "'");
    std::istringstream lhs(line.substr(0, colon));
    Exponent e{};
    for (int i = 0; i < dims; ++i)
      if (!(lhs >> e[i])) throw ArgumentError("from_text: too few exponents in '" + line + "'");
    int extra;
    if (lhs >> extra) throw ArgumentError("from_text: too many exponents in '" + line + "'");
    p.add_term(e, std::stod(line.substr(colon + 1)));
  }
  return p;
}

}  // namespace pdectl
