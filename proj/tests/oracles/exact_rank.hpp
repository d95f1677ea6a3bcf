#pragma once

// Exact rank of integer matrices: fraction-free elimination and principal
// minors of the Gram matrix C C^T, both in arbitrary-precision integers.

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <vector>

namespace oracle {

using boost::multiprecision::cpp_int;
using IntMat = std::vector<std::vector<cpp_int>>;

inline IntMat to_int(const Eigen::MatrixXd& M) {
  IntMat r(M.rows(), std::vector<cpp_int>(M.cols()));
  for (int i = 0; i < M.rows(); ++i)
    for (int j = 0; j < M.cols(); ++j) r[i][j] = cpp_int(static_cast<long long>(std::llround(M(i, j))));
  return r;
}

/// Bareiss elimination with row pivoting; returns the pivot count.
inline int bareiss_rank(IntMat a) {
  const int rows = static_cast<int>(a.size());
  if (rows == 0) return 0;
  const int cols = static_cast<int>(a[0].size());
  cpp_int prev = 1;
  int rank = 0;
  for (int c = 0; c < cols && rank < rows; ++c) {
    int piv = -1;
    for (int r = rank; r < rows; ++r)
      if (a[r][c] != 0) {
        piv = r;
        break;
      }
    if (piv < 0) continue;
    std::swap(a[piv], a[rank]);
    for (int r = rank + 1; r < rows; ++r) {
      for (int k = c + 1; k < cols; ++k) a[r][k] = (a[rank][c] * a[r][k] - a[r][c] * a[rank][k]) / prev;
      a[r][c] = 0;
    }
    prev = a[rank][c];
    ++rank;
  }
  return rank;
}

inline cpp_int determinant(IntMat a) {
  const int n = static_cast<int>(a.size());
  if (n == 0) return 1;
  cpp_int prev = 1;
  int sign = 1;
  for (int c = 0; c < n; ++c) {
    int piv = -1;
    for (int r = c; r < n; ++r)
      if (a[r][c] != 0) {
        piv = r;
        break;
      }
    if (piv < 0) return 0;
    if (piv != c) {
      std::swap(a[piv], a[c]);
      sign = -sign;
    }
    for (int r = c + 1; r < n; ++r) {
      for (int k = c + 1; k < n; ++k) a[r][k] = (a[c][c] * a[r][k] - a[r][c] * a[c][k]) / prev;
      a[r][c] = 0;
    }
    prev = a[c][c];
  }
  return sign * a[n - 1][n - 1];
}

/// rank C = largest k with a non-zero k x k principal minor of C C^T.
inline int gram_minor_rank(const IntMat& C) {
  const int n = static_cast<int>(C.size());
  const int cols = n ? static_cast<int>(C[0].size()) : 0;
  IntMat G(n, std::vector<cpp_int>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < cols; ++k) G[i][j] += C[i][k] * C[j][k];
  int best = 0;
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    std::vector<int> idx;
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) idx.push_back(i);
    if (static_cast<int>(idx.size()) <= best) continue;
    IntMat sub(idx.size(), std::vector<cpp_int>(idx.size()));
    for (std::size_t a = 0; a < idx.size(); ++a)
      for (std::size_t b = 0; b < idx.size(); ++b) sub[a][b] = G[idx[a]][idx[b]];
    if (determinant(sub) != 0) best = static_cast<int>(idx.size());
  }
  return best;
}

}  // namespace oracle
