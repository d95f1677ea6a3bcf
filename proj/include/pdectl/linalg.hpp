#pragma once

// Factored step matrices and a matrix-free conjugate gradient.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <cmath>
#include <memory>
#include <sstream>
#include <vector>

#include "pdectl/errors.hpp"
#include "pdectl/grid.hpp"

namespace pdectl {

/// Tridiagonal LU without pivoting (Thomas algorithm).
class Tridiag {
 public:
  Tridiag() = default;
  explicit Tridiag(const SpMat& A) {
    const int n = static_cast<int>(A.rows());
    lo_ = Vec::Zero(n);
    di_ = Vec::Zero(n);
    up_ = Vec::Zero(n);
    for (int k = 0; k < A.outerSize(); ++k)
      for (SpMat::InnerIterator it(A, k); it; ++it) {
        const int r = static_cast<int>(it.row()), c = static_cast<int>(it.col());
        if (r == c) di_[r] = it.value();
        else if (c == r - 1) lo_[r] = it.value();
        else if (c == r + 1) up_[r] = it.value();
      }
    factor();
  }

  static bool is_tridiagonal(const SpMat& A) {
    for (int k = 0; k < A.outerSize(); ++k)
      for (SpMat::InnerIterator it(A, k); it; ++it)
        if (std::abs(it.row() - it.col()) > 1 && it.value() != 0.0) return false;
    return true;
  }

  Vec solve(const Vec& b) const {
    const int n = static_cast<int>(b.size());
    Vec x(n);
    x[0] = b[0] / piv_[0];
    for (int i = 1; i < n; ++i) x[i] = (b[i] - lo_[i] * x[i - 1]) / piv_[i];
    for (int i = n - 2; i >= 0; --i) x[i] -= cp_[i] * x[i + 1];
    return x;
  }

  /// Solve with the transpose, using the same factors (A^T = U^T L^T).
  Vec solve_t(const Vec& b) const {
    const int n = static_cast<int>(b.size());
    Vec z(n);
    z[0] = b[0];
    for (int i = 1; i < n; ++i) z[i] = b[i] - cp_[i - 1] * z[i - 1];
    Vec x(n);
    x[n - 1] = z[n - 1] / piv_[n - 1];
    for (int i = n - 2; i >= 0; --i) x[i] = (z[i] - lo_[i + 1] * x[i + 1]) / piv_[i];
    return x;
  }

 private:
  // A = L U with L lower bidiagonal (diag piv, sub lo) and U unit upper
  // bidiagonal (super cp).
  void factor() {
    const int n = static_cast<int>(di_.size());
    piv_ = Vec(n);
    cp_ = Vec::Zero(n);
    piv_[0] = di_[0];
    for (int i = 0; i < n; ++i) {
      if (i > 0) piv_[i] = di_[i] - lo_[i] * cp_[i - 1];
      if (!(std::abs(piv_[i]) > 1e-300)) throw NumericalError("tridiagonal solve: zero pivot");
      if (i + 1 < n) cp_[i] = up_[i] / piv_[i];
    }
  }

  Vec lo_, di_, up_, piv_, cp_;
};

/// A factored square sparse matrix supporting solves with A and A^T.
class Factored {
 public:
  Factored() = default;
  explicit Factored(const SpMat& A) {
    if (Tridiag::is_tridiagonal(A)) {
      tri_ = std::make_shared<Tridiag>(A);
    } else {
      lu_ = std::make_shared<Eigen::SparseLU<SpMat>>();
      SpMat c = A;
      c.makeCompressed();
      lu_->compute(c);
      if (lu_->info() != Eigen::Success) throw NumericalError("sparse LU failed: " + lu_->lastErrorMessage());
    }
  }
  Vec solve(const Vec& b) const { return tri_ ? tri_->solve(b) : Vec(lu_->solve(b)); }
  Vec solve_t(const Vec& b) const {
    return tri_ ? tri_->solve_t(b) : Vec(lu_->transpose().solve(b));
  }

 private:
  std::shared_ptr<Tridiag> tri_;
  std::shared_ptr<Eigen::SparseLU<SpMat>> lu_;
};

inline SpMat identity(int n) {
  SpMat I(n, n);
  I.setIdentity();
  return I;
}

inline SpMat diag(const Vec& d) {
  SpMat D(d.size(), d.size());
  std::vector<Triplet> t;
  for (int i = 0; i < d.size(); ++i) t.emplace_back(i, i, d[i]);
  D.setFromTriplets(t.begin(), t.end());
  return D;
}

struct CgResult {
  Vec x;
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
  std::vector<double> history;
};

/// Conjugate gradient for a symmetric positive semidefinite operator in the
/// inner product `ip`, starting from zero. Stops when |r| <= tol |b|. Without
/// convergence the iterate with the smallest residual is returned.
template <class Apply, class Inner>
CgResult conjugate_gradient(const Apply& A, const Vec& b, const Inner& ip, double tol, int max_iter) {
  CgResult res;
  res.x = Vec::Zero(b.size());
  const double bnorm = std::sqrt(ip(b, b));
  if (bnorm == 0.0) {
    res.converged = true;
    return res;
  }
  Vec r = b, p = b;
  double rr = ip(r, r);
  Vec best = res.x;
  double best_rr = rr;
  res.history.push_back(1.0);
  for (int k = 0; k < max_iter; ++k) {
    if (std::sqrt(rr) <= tol * bnorm) break;
    const Vec Ap = A(p);
    const double pAp = ip(p, Ap);
    if (!(pAp > 0.0)) break;
    const double alpha = rr / pAp;
    res.x += alpha * p;
    r -= alpha * Ap;
    const double rr_new = ip(r, r);
    p = r + (rr_new / rr) * p;
    rr = rr_new;
    ++res.iterations;
    res.history.push_back(std::sqrt(rr) / bnorm);
    if (rr < best_rr) {
      best_rr = rr;
      best = res.x;
    }
  }
  res.converged = std::sqrt(rr) <= tol * bnorm;
  if (!res.converged) {
    res.x = best;
    rr = best_rr;
  }
  res.relative_residual = std::sqrt(rr) / bnorm;
  return res;
}

inline std::string history_tail(const std::vector<double>& h, std::size_t count = 5) {
  std::ostringstream os;
  os.precision(3);
  const std::size_t start = h.size() > count ? h.size() - count : 0;
  for (std::size_t i = start; i < h.size(); ++i) os << (i > start ? ", " : "") << h[i];
  return os.str();
}

}  // namespace pdectl
