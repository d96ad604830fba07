#pragma once

#include <array>
#include <cmath>
#include <cstring>
#include <vector>

#include "projdim/common.hpp"

// Small dense linear algebra on stack-friendly sizes. Everything here targets
// ambient dimensions in the single digits, so simple O(n^3) kernels and a
// cyclic Jacobi eigensolver are both exact enough and faster than pulling in
// a large library.

namespace projdim {

using Vec = std::vector<double>;

struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(std::size_t(r) * c, 0.0) {}

  double& operator()(int i, int j) { return a[std::size_t(i) * cols + j]; }
  double operator()(int i, int j) const { return a[std::size_t(i) * cols + j]; }

  static Mat identity(int n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
};

inline double dot(const Vec& a, const Vec& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

inline Vec sub(const Vec& a, const Vec& b) {
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

inline Vec add(const Vec& a, const Vec& b) {
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

inline Vec scale(const Vec& a, double s) {
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = s * a[i];
  return r;
}

inline double dist(const Vec& a, const Vec& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

inline Mat mul(const Mat& A, const Mat& B) {
  Mat C(A.rows, B.cols);
  for (int i = 0; i < A.rows; ++i)
    for (int l = 0; l < A.cols; ++l) {
      double v = A(i, l);
      if (v == 0.0) continue;
      for (int j = 0; j < B.cols; ++j) C(i, j) += v * B(l, j);
    }
  return C;
}

inline Vec mul(const Mat& A, const Vec& x) {
  Vec y(A.rows, 0.0);
  for (int i = 0; i < A.rows; ++i) {
    double s = 0;
    for (int j = 0; j < A.cols; ++j) s += A(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

inline Mat transpose(const Mat& A) {
  Mat T(A.cols, A.rows);
  for (int i = 0; i < A.rows; ++i)
    for (int j = 0; j < A.cols; ++j) T(j, i) = A(i, j);
  return T;
}

inline double max_abs_diff(const Mat& A, const Mat& B) {
  double m = 0;
  for (std::size_t i = 0; i < A.a.size(); ++i)
    m = std::max(m, std::abs(A.a[i] - B.a[i]));
  return m;
}

inline double frobenius(const Mat& A) {
  double s = 0;
  for (double v : A.a) s += v * v;
  return std::sqrt(s);
}

inline bool is_orthogonal(const Mat& A, double tol) {
  if (A.rows != A.cols) return false;
  Mat G = mul(A, transpose(A));
  return max_abs_diff(G, Mat::identity(A.rows)) <= tol;
}

// Modified Gram-Schmidt with one re-orthogonalization pass. Returns false if
// the columns are numerically rank deficient.
inline bool orthonormalize_columns(Mat& A) {
  int n = A.rows, k = A.cols;
  for (int j = 0; j < k; ++j) {
    for (int pass = 0; pass < 2; ++pass) {
      for (int p = 0; p < j; ++p) {
        double proj = 0;
        for (int i = 0; i < n; ++i) proj += A(i, p) * A(i, j);
        for (int i = 0; i < n; ++i) A(i, j) -= proj * A(i, p);
      }
    }
    double nrm = 0;
    for (int i = 0; i < n; ++i) nrm += A(i, j) * A(i, j);
    nrm = std::sqrt(nrm);
    if (nrm < 1e-10) return false;
    for (int i = 0; i < n; ++i) A(i, j) /= nrm;
  }
  return true;
}

// Eigenvalues of a symmetric matrix held in a row-major buffer, by cyclic
// Jacobi rotations. The buffer is destroyed; eigenvalues land on the diagonal.
inline void sym_eigenvalues_buf(double* a, int n, double* out) {
  auto at = [a, n](int i, int j) -> double& { return a[i * n + j]; };
  double scale_v = 0;
  for (int i = 0; i < n * n; ++i) scale_v = std::max(scale_v, std::abs(a[i]));
  if (scale_v == 0.0) {
    for (int i = 0; i < n; ++i) out[i] = 0.0;
    return;
  }
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off = std::max(off, std::abs(at(p, q)));
    if (off <= 1e-15 * scale_v) break;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        double apq = at(p, q);
        if (std::abs(apq) <= 1e-18 * scale_v) continue;
        double theta = 0.5 * (at(q, q) - at(p, p)) / apq;
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (int i = 0; i < n; ++i) {
          double aip = at(i, p), aiq = at(i, q);
          at(i, p) = c * aip - s * aiq;
          at(i, q) = s * aip + c * aiq;
        }
        for (int i = 0; i < n; ++i) {
          double api = at(p, i), aqi = at(q, i);
          at(p, i) = c * api - s * aqi;
          at(q, i) = s * api + c * aqi;
        }
      }
  }
  for (int i = 0; i < n; ++i) out[i] = at(i, i);
}

inline Vec sym_eigenvalues(Mat A) {
  Vec out(A.rows);
  sym_eigenvalues_buf(A.a.data(), A.rows, out.data());
  return out;
}

// Operator norm (largest |eigenvalue|) of a symmetric matrix. Closed forms
// for n <= 2, Jacobi otherwise. Destroys the buffer for n >= 3.
inline double sym_opnorm_buf(double* a, int n) {
  if (n == 1) return std::abs(a[0]);
  if (n == 2) {
    double mean = 0.5 * (a[0] + a[3]);
    double half = 0.5 * (a[0] - a[3]);
    double rad = std::sqrt(half * half + a[1] * a[1]);
    return std::max(std::abs(mean + rad), std::abs(mean - rad));
  }
  std::array<double, 16> ev_small;
  std::vector<double> ev_big;
  double* ev = ev_small.data();
  if (n > 16) {
    ev_big.resize(std::size_t(n));
    ev = ev_big.data();
  }
  sym_eigenvalues_buf(a, n, ev);
  double m = 0;
  for (int i = 0; i < n; ++i) m = std::max(m, std::abs(ev[i]));
  return m;
}

inline double sym_opnorm(Mat A) { return sym_opnorm_buf(A.a.data(), A.rows); }

// Orthonormal basis of the orthogonal complement of the (orthonormal) column
// span of `frame`. Greedy on residual norms of the standard basis, so the
// result is deterministic.
inline Mat orthonormal_complement(const Mat& frame) {
  int n = frame.rows, k = frame.cols;
  Mat full(n, k + (n - k));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < k; ++j) full(i, j) = frame(i, j);
  std::vector<bool> used(std::size_t(n), false);
  for (int c = k; c < n; ++c) {
    int pick = -1;
    double best = -1.0;
    Vec best_res;
    for (int e = 0; e < n; ++e) {
      if (used[std::size_t(e)]) continue;
      Vec r(std::size_t(n), 0.0);
      r[std::size_t(e)] = 1.0;
      for (int pass = 0; pass < 2; ++pass)
        for (int p = 0; p < c; ++p) {
          double proj = 0;
          for (int i = 0; i < n; ++i) proj += full(i, p) * r[std::size_t(i)];
          for (int i = 0; i < n; ++i) r[std::size_t(i)] -= proj * full(i, p);
        }
      double nr = norm(r);
      if (nr > best) {
        best = nr;
        pick = e;
        best_res = std::move(r);
      }
    }
    if (pick < 0 || best < 1e-10)
      throw ValidationError("orthonormal_complement: degenerate frame");
    used[std::size_t(pick)] = true;
    for (int i = 0; i < n; ++i) full(i, c) = best_res[std::size_t(i)] / best;
  }
  Mat out(n, n - k);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n - k; ++j) out(i, j) = full(i, k + j);
  return out;
}

// Gaussian elimination with partial pivoting; fine for the tiny systems here.
inline Vec solve_linear(Mat A, Vec b) {
  int n = A.rows;
  if (A.cols != n || int(b.size()) != n)
    throw ValidationError("solve_linear: shape mismatch");
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int i = col + 1; i < n; ++i)
      if (std::abs(A(i, col)) > std::abs(A(piv, col))) piv = i;
    if (std::abs(A(piv, col)) < 1e-14)
      throw ValidationError("solve_linear: singular matrix");
    if (piv != col) {
      for (int j = 0; j < n; ++j) std::swap(A(col, j), A(piv, j));
      std::swap(b[std::size_t(col)], b[std::size_t(piv)]);
    }
    for (int i = col + 1; i < n; ++i) {
      double f = A(i, col) / A(col, col);
      if (f == 0.0) continue;
      for (int j = col; j < n; ++j) A(i, j) -= f * A(col, j);
      b[std::size_t(i)] -= f * b[std::size_t(col)];
    }
  }
  Vec x(std::size_t(n), 0.0);
  for (int i = n - 1; i >= 0; --i) {
    double s = b[std::size_t(i)];
    for (int j = i + 1; j < n; ++j) s -= A(i, j) * x[std::size_t(j)];
    x[std::size_t(i)] = s / A(i, i);
  }
  return x;
}

}  // namespace projdim
