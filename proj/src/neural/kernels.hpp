#pragma once

// Dense row-major kernels. Loops are written in axpy form (contiguous inner
// index) or with split accumulators so they vectorize without fast-math.

#include <cmath>

namespace zggp::kernels {

template <typename S>
inline S dot(const S* a, const S* b, int n) {
  S acc[8] = {};
  int j = 0;
  for (; j + 8 <= n; j += 8) {
    for (int t = 0; t < 8; ++t) acc[t] += a[j + t] * b[j + t];
  }
  S tail = 0;
  for (; j < n; ++j) tail += a[j] * b[j];
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) +
         ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail;
}

template <typename S>
inline void axpy(S a, const S* x, S* y, int n) {
  for (int j = 0; j < n; ++j) y[j] += a * x[j];
}

// y[rows x n] = x[rows x m] w[m x n] + b[n]
template <typename S>
void affine(const S* x, int rows, int m, const S* w, const S* b, int n, S* y) {
  for (int i = 0; i < rows; ++i) {
    S* yi = y + static_cast<long>(i) * n;
    for (int j = 0; j < n; ++j) yi[j] = b[j];
    const S* xi = x + static_cast<long>(i) * m;
    for (int k = 0; k < m; ++k) {
      const S xik = xi[k];
      if (xik != S{0}) axpy(xik, w + static_cast<long>(k) * n, yi, n);
    }
  }
}

// dw += x^T dy, db += column sums of dy.
template <typename S>
void affine_backward_params(const S* x, const S* dy, int rows, int m, int n,
                            S* dw, S* db) {
  for (int i = 0; i < rows; ++i) {
    const S* dyi = dy + static_cast<long>(i) * n;
    const S* xi = x + static_cast<long>(i) * m;
    for (int k = 0; k < m; ++k) {
      const S xik = xi[k];
      if (xik != S{0}) axpy(xik, dyi, dw + static_cast<long>(k) * n, n);
    }
    for (int j = 0; j < n; ++j) db[j] += dyi[j];
  }
}

// dx[rows x m] (+)= dy[rows x n] w^T
template <typename S>
void affine_backward_input(const S* dy, const S* w, int rows, int m, int n,
                           S* dx, bool accumulate) {
  for (int i = 0; i < rows; ++i) {
    const S* dyi = dy + static_cast<long>(i) * n;
    S* dxi = dx + static_cast<long>(i) * m;
    for (int k = 0; k < m; ++k) {
      const S g = dot(dyi, w + static_cast<long>(k) * n, n);
      dxi[k] = accumulate ? dxi[k] + g : g;
    }
  }
}

}  // namespace zggp::kernels
