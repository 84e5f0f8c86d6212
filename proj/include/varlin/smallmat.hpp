#ifndef VARLIN_SMALLMAT_HPP
#define VARLIN_SMALLMAT_HPP

#include <cassert>
#include <cmath>
#include <vector>

namespace varlin {

// Dense row-major matrix sized for state spaces of a few hundred at most.
struct Matrix {
  int rows = 0, cols = 0;
  std::vector<double> a;

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0) : rows(r), cols(c), a(size_t(r) * c, fill) {}

  double& operator()(int i, int j) { return a[size_t(i) * cols + j]; }
  double operator()(int i, int j) const { return a[size_t(i) * cols + j]; }

  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
};

inline Matrix matmul(const Matrix& A, const Matrix& B) {
  assert(A.cols == B.rows);
  Matrix C(A.rows, B.cols);
  for (int i = 0; i < A.rows; ++i)
    for (int k = 0; k < A.cols; ++k) {
      double v = A(i, k);
      if (v == 0.0) continue;
      for (int j = 0; j < B.cols; ++j) C(i, j) += v * B(k, j);
    }
  return C;
}

// row vector * matrix
inline std::vector<double> vecmat(const std::vector<double>& v, const Matrix& M) {
  assert(int(v.size()) == M.rows);
  std::vector<double> out(M.cols, 0.0);
  for (int i = 0; i < M.rows; ++i) {
    double vi = v[i];
    if (vi == 0.0) continue;
    for (int j = 0; j < M.cols; ++j) out[j] += vi * M(i, j);
  }
  return out;
}

// matrix * column vector
inline std::vector<double> matvec(const Matrix& M, const std::vector<double>& v) {
  assert(int(v.size()) == M.cols);
  std::vector<double> out(M.rows, 0.0);
  for (int i = 0; i < M.rows; ++i) {
    double s = 0;
    for (int j = 0; j < M.cols; ++j) s += M(i, j) * v[j];
    out[i] = s;
  }
  return out;
}

// Dobrushin contraction coefficient: half the maximal total-variation
// distance between two rows of a stochastic matrix.
inline double dobrushin_delta(const Matrix& P) {
  double d = 0.0;
  for (int i = 0; i < P.rows; ++i)
    for (int k = i + 1; k < P.rows; ++k) {
      double tv = 0.0;
      for (int j = 0; j < P.cols; ++j) tv += std::fabs(P(i, j) - P(k, j));
      if (0.5 * tv > d) d = 0.5 * tv;
    }
  return d;
}

// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.  Good to
// near machine precision for the small operators used here.
inline std::vector<double> symmetric_eigenvalues(Matrix A) {
  assert(A.rows == A.cols);
  const int n = A.rows;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += A(p, q) * A(p, q);
    if (off < 1e-30) break;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        if (std::fabs(A(p, q)) < 1e-300) continue;
        double theta = (A(q, q) - A(p, p)) / (2.0 * A(p, q));
        double t = (theta >= 0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (int k = 0; k < n; ++k) {
          double akp = A(k, p), akq = A(k, q);
          A(k, p) = c * akp - s * akq;
          A(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          double apk = A(p, k), aqk = A(q, k);
          A(p, k) = c * apk - s * aqk;
          A(q, k) = s * apk + c * aqk;
        }
      }
  }
  std::vector<double> ev(size_t(n), 0.0);
  for (int i = 0; i < n; ++i) ev[i] = A(i, i);
  return ev;
}

// Largest singular value via the spectrum of K^T K.
inline double max_singular_value(const Matrix& K) {
  Matrix G(K.cols, K.cols);
  for (int i = 0; i < K.cols; ++i)
    for (int j = 0; j < K.cols; ++j) {
      double s = 0;
      for (int r = 0; r < K.rows; ++r) s += K(r, i) * K(r, j);
      G(i, j) = s;
    }
  double lmax = 0.0;
  for (double ev : symmetric_eigenvalues(G))
    if (ev > lmax) lmax = ev;
  return std::sqrt(lmax);
}

}  // namespace varlin

#endif
