#pragma once

// Finite-dimensional controllability: Kalman rank and the controllability
// Gramian W(T) = int_0^T e^{At} B B^T e^{A^T t} dt.

#include <Eigen/Dense>
#include <cstdint>

#include <algorithm>
#include <numeric>
#include <vector>

#include "pdectl/errors.hpp"
#include "pdectl/rng.hpp"

namespace pdectl {

using Mat = Eigen::MatrixXd;

struct LinearODE {
  Mat A;
  Mat B;

  void validate() const {
    require(A.rows() == A.cols(), "LinearODE: A must be square");
    require(B.rows() == A.rows(), "LinearODE: B must have as many rows as A");
  }
  int n() const { return static_cast<int>(A.rows()); }
};

inline Mat controllability_matrix(const LinearODE& sys) {
  sys.validate();
  const int n = sys.n(), m = static_cast<int>(sys.B.cols());
  Mat C(n, n * m);
  Mat blk = sys.B;
  for (int k = 0; k < n; ++k) {
    C.middleCols(k * m, m) = blk;
    blk = sys.A * blk;
  }
  return C;
}

/// Numerical rank by column-pivoted QR, pivots below 1e-10 |largest| dropped.
inline int kalman_rank(const LinearODE& sys) {
  const Mat C = controllability_matrix(sys);
  if (C.size() == 0 || C.cwiseAbs().maxCoeff() == 0.0) return 0;
  Eigen::ColPivHouseholderQR<Mat> qr(C);
  qr.setThreshold(1e-10);
  return static_cast<int>(qr.rank());
}

/// RK4 on W' = A W + W A^T + B B^T, W(0) = 0, with dt = T / 2000.
inline Mat controllability_gramian(const LinearODE& sys, double T, int steps = 2000) {
  sys.validate();
  require(T > 0.0, "controllability_gramian: T must be > 0");
  const Mat BB = sys.B * sys.B.transpose();
  const Mat& A = sys.A;
  auto rhs = [&](const Mat& W) -> Mat { return A * W + W * A.transpose() + BB; };
  const double dt = T / steps;
  Mat W = Mat::Zero(sys.n(), sys.n());
  for (int k = 0; k < steps; ++k) {
    const Mat k1 = rhs(W);
    const Mat k2 = rhs(W + 0.5 * dt * k1);
    const Mat k3 = rhs(W + 0.5 * dt * k2);
    const Mat k4 = rhs(W + dt * k3);
    W += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    W = 0.5 * (W + W.transpose()).eval();
  }
  return W;
}

inline double min_eigenvalue(const Mat& S) {
  if (S.rows() == 0) return 0.0;
  return Eigen::SelfAdjointEigenSolver<Mat>(S, Eigen::EigenvaluesOnly).eigenvalues()[0];
}

/// Integer-entry test systems, n in [1, max_n], m in {1, 2}, entries in
/// {-2..2}. One in three is put in permuted block-triangular form
/// [[A11, A12], [0, A22]] with B = [B1; 0], hence uncontrollable.
inline LinearODE random_linear_ode(std::uint64_t seed, int max_n = 5) {
  Rng rng(derive_seed(seed, "linear_ode", 0));
  auto pick = [&](int lo, int hi) { return lo + static_cast<int>(rng.uniform() * (hi - lo + 1)) % (hi - lo + 1); };
  const int n = pick(1, max_n), m = pick(1, 2);
  LinearODE sys{Mat(n, n), Mat(n, m)};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) sys.A(i, j) = pick(-2, 2);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) sys.B(i, j) = pick(-2, 2);
  if (n >= 2 && pick(0, 2) == 0) {
    const int k = pick(1, n - 1);
    for (int i = k; i < n; ++i) {
      for (int j = 0; j < k; ++j) sys.A(i, j) = 0.0;
      sys.B.row(i).setZero();
    }
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = n - 1; i > 0; --i) std::swap(perm[i], perm[pick(0, i)]);
    Mat A(n, n), B(n, m);
    for (int i = 0; i < n; ++i) {
      B.row(perm[i]) = sys.B.row(i);
      for (int j = 0; j < n; ++j) A(perm[i], perm[j]) = sys.A(i, j);
    }
    sys = {A, B};
  }
  return sys;
}

}  // namespace pdectl
