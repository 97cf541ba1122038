#pragma once

// Small dense matrices for frame/metric computations. Dimensions here are the
// topological dimension of a group model (<= ~10), so plain Gaussian
// elimination is all we need.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace mcf {

using Vec = std::vector<double>;

struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}

  static Mat identity(int n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * cols + j]; }
};

inline Mat matmul(const Mat& A, const Mat& B) {
  if (A.cols != B.rows) throw std::invalid_argument("matmul: shape mismatch");
  Mat C(A.rows, B.cols);
  for (int i = 0; i < A.rows; ++i)
    for (int k = 0; k < A.cols; ++k) {
      const double aik = A(i, k);
      if (aik == 0.0) continue;
      for (int j = 0; j < B.cols; ++j) C(i, j) += aik * B(k, j);
    }
  return C;
}

inline Mat transpose(const Mat& A) {
  Mat T(A.cols, A.rows);
  for (int i = 0; i < A.rows; ++i)
    for (int j = 0; j < A.cols; ++j) T(j, i) = A(i, j);
  return T;
}

inline Vec matvec(const Mat& A, const Vec& x) {
  if (A.cols != static_cast<int>(x.size())) throw std::invalid_argument("matvec: shape mismatch");
  Vec y(A.rows, 0.0);
  for (int i = 0; i < A.rows; ++i)
    for (int j = 0; j < A.cols; ++j) y[i] += A(i, j) * x[j];
  return y;
}

// Solves A X = B in place with partial pivoting. Throws on (near-)singular A.
inline Mat solve(Mat A, Mat B) {
  if (A.rows != A.cols || A.rows != B.rows) throw std::invalid_argument("solve: shape mismatch");
  const int n = A.rows;
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::fabs(A(r, col)) > std::fabs(A(piv, col))) piv = r;
    if (std::fabs(A(piv, col)) < 1e-300) throw std::runtime_error("solve: singular matrix");
    if (piv != col) {
      for (int j = 0; j < n; ++j) std::swap(A(piv, j), A(col, j));
      for (int j = 0; j < B.cols; ++j) std::swap(B(piv, j), B(col, j));
    }
    const double d = A(col, col);
    for (int r = col + 1; r < n; ++r) {
      const double f = A(r, col) / d;
      if (f == 0.0) continue;
      for (int j = col; j < n; ++j) A(r, j) -= f * A(col, j);
      for (int j = 0; j < B.cols; ++j) B(r, j) -= f * B(col, j);
    }
  }
  for (int col = n - 1; col >= 0; --col) {
    const double d = A(col, col);
    for (int j = 0; j < B.cols; ++j) {
      double s = B(col, j);
      for (int k = col + 1; k < n; ++k) s -= A(col, k) * B(k, j);
      B(col, j) = s / d;
    }
  }
  return B;
}

inline Mat inverse(const Mat& A) { return solve(A, Mat::identity(A.rows)); }

inline double max_abs(const Mat& A) {
  double m = 0.0;
  for (double v : A.a) m = std::max(m, std::fabs(v));
  return m;
}

inline double frobenius(const Mat& A) {
  double s = 0.0;
  for (double v : A.a) s += v * v;
  return std::sqrt(s);
}

}  // namespace mcf
