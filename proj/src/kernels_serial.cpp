// Reference kernel backend: plain loops, no threading. The OpenMP backend
// in kernels_openmp.cpp must reproduce these results bit for bit; keep the
// per-element accumulation order of the two files in sync.

#include <cmath>
#include <vector>

#include "conv_line.hpp"
#include "kernels_impl.hpp"

namespace pwinr::kernels::serial {

template <typename T>
void affine(const T* x, const T* w, const T* b, T* y, std::size_t n, std::size_t din,
            std::size_t dout) {
  for (std::size_t r = 0; r < n; ++r) {
    T* yrow = y + r * dout;
    for (std::size_t j = 0; j < dout; ++j) yrow[j] = b[j];
    const T* xrow = x + r * din;
    for (std::size_t i = 0; i < din; ++i) {
      const T xi = xrow[i];
      const T* wrow = w + i * dout;
      for (std::size_t j = 0; j < dout; ++j) yrow[j] += xi * wrow[j];
    }
  }
}

template <typename T>
void affine_grad_x(const T* gy, const T* w, T* gx, std::size_t n, std::size_t din,
                   std::size_t dout) {
  for (std::size_t r = 0; r < n; ++r) {
    const T* grow = gy + r * dout;
    T* gxrow = gx + r * din;
    for (std::size_t i = 0; i < din; ++i) {
      const T* wrow = w + i * dout;
      T acc = T(0);
      for (std::size_t j = 0; j < dout; ++j) acc += grow[j] * wrow[j];
      gxrow[i] += acc;
    }
  }
}

template <typename T>
void affine_grad_w(const T* x, const T* gy, T* gw, std::size_t n, std::size_t din,
                   std::size_t dout) {
  for (std::size_t i = 0; i < din; ++i) {
    T* gwrow = gw + i * dout;
    for (std::size_t r = 0; r < n; ++r) {
      const T xi = x[r * din + i];
      const T* grow = gy + r * dout;
      for (std::size_t j = 0; j < dout; ++j) gwrow[j] += xi * grow[j];
    }
  }
}

template <typename T>
void affine_grad_b(const T* gy, T* gb, std::size_t n, std::size_t dout) {
  for (std::size_t j = 0; j < dout; ++j) {
    T acc = T(0);
    for (std::size_t r = 0; r < n; ++r) acc += gy[r * dout + j];
    gb[j] += acc;
  }
}

template <typename T>
void relu(const T* x, T* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
}

template <typename T>
void relu_grad(const T* x, const T* gy, T* gx, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    if (x[i] > T(0)) gx[i] += gy[i];
  }
}

template <typename T>
void binary(BinaryOp op, const T* a, const T* b, T* y, std::size_t n) {
  switch (op) {
    case BinaryOp::add:
      for (std::size_t i = 0; i < n; ++i) y[i] = a[i] + b[i];
      break;
    case BinaryOp::sub:
      for (std::size_t i = 0; i < n; ++i) y[i] = a[i] - b[i];
      break;
    case BinaryOp::mul:
      for (std::size_t i = 0; i < n; ++i) y[i] = a[i] * b[i];
      break;
    case BinaryOp::div:
      for (std::size_t i = 0; i < n; ++i) y[i] = a[i] / b[i];
      break;
  }
}

template <typename T>
void scale_add(const T* x, T alpha, T beta, T* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = alpha * x[i] + beta;
}

template <typename T>
void axpy(const T* x, T alpha, T* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <typename T>
void mul_accum(const T* a, const T* b, T* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a[i] * b[i];
}

template <typename T>
void div_grad_num(const T* gy, const T* den, T* gnum, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) gnum[i] += gy[i] / den[i];
}

template <typename T>
void div_grad_den(const T* gy, const T* y, const T* den, T* gden, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) gden[i] += -gy[i] * y[i] / den[i];
}

template <typename T>
void conv_rows(const T* x, T* y, std::size_t h, std::size_t w, const T* taps, std::size_t k) {
  for (std::size_t r = 0; r < h; ++r) detail::conv_row_pass(x, y, h, w, taps, k, r);
}

template <typename T>
void conv_cols(const T* x, T* y, std::size_t h, std::size_t w, const T* taps, std::size_t k) {
  for (std::size_t r = 0; r < h; ++r) detail::conv_col_pass(x, y, w, taps, k, r);
}

template <typename T>
void conv_rows_adj(const T* gy, T* gx, std::size_t h, std::size_t w, const T* taps,
                   std::size_t k) {
  for (std::size_t c = 0; c < w; ++c) detail::conv_line_adj(gy + c, gx + c, h, w, taps, k);
}

template <typename T>
void conv_cols_adj(const T* gy, T* gx, std::size_t h, std::size_t w, const T* taps,
                   std::size_t k) {
  for (std::size_t r = 0; r < h; ++r)
    detail::conv_line_adj(gy + r * w, gx + r * w, w, 1, taps, k);
}

template <typename T>
T reduce_sum(const T* x, std::size_t n) {
  const std::size_t nblocks = (n + kReduceBlock - 1) / kReduceBlock;
  std::vector<T> partials(nblocks, T(0));
  for (std::size_t bi = 0; bi < nblocks; ++bi) {
    const std::size_t lo = bi * kReduceBlock;
    const std::size_t hi = lo + kReduceBlock < n ? lo + kReduceBlock : n;
    T acc = T(0);
    for (std::size_t i = lo; i < hi; ++i) acc += x[i];
    partials[bi] = acc;
  }
  T total = T(0);
  for (std::size_t bi = 0; bi < nblocks; ++bi) total += partials[bi];
  return total;
}

template <typename T>
void encode_sincos(const T* xs, const T* ys, const T* as, std::size_t n, std::size_t L,
                   T* gamma) {
  const std::size_t width = 6 * L + 3;
  const T pi = static_cast<T>(3.14159265358979323846);
  for (std::size_t s = 0; s < n; ++s) {
    T* row = gamma + s * width;
    row[0] = xs[s];
    row[1] = ys[s];
    row[2] = as[s];
    for (std::size_t l = 0; l < L; ++l) {
      const T f = std::ldexp(pi, static_cast<int>(l));
      T* block = row + 3 + 6 * l;
      block[0] = std::sin(f * xs[s]);
      block[1] = std::sin(f * ys[s]);
      block[2] = std::sin(f * as[s]);
      block[3] = std::cos(f * xs[s]);
      block[4] = std::cos(f * ys[s]);
      block[5] = std::cos(f * as[s]);
    }
  }
}

template <typename T>
void adam_step(T* param, T* m, T* v, const T* grad, std::size_t n, T lr, T beta1, T beta2,
               T eps, T bias1, T bias2) {
  for (std::size_t i = 0; i < n; ++i) {
    const T g = grad[i];
    m[i] = beta1 * m[i] + (T(1) - beta1) * g;
    v[i] = beta2 * v[i] + (T(1) - beta2) * g * g;
    const T mhat = m[i] / bias1;
    const T vhat = v[i] / bias2;
    param[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

#define PWINR_INSTANTIATE_SERIAL(T)                                                          \
  template void affine<T>(const T*, const T*, const T*, T*, std::size_t, std::size_t,       \
                          std::size_t);                                                      \
  template void affine_grad_x<T>(const T*, const T*, T*, std::size_t, std::size_t,          \
                                 std::size_t);                                              \
  template void affine_grad_w<T>(const T*, const T*, T*, std::size_t, std::size_t,          \
                                 std::size_t);                                              \
  template void affine_grad_b<T>(const T*, T*, std::size_t, std::size_t);                   \
  template void relu<T>(const T*, T*, std::size_t);                                         \
  template void relu_grad<T>(const T*, const T*, T*, std::size_t);                          \
  template void binary<T>(BinaryOp, const T*, const T*, T*, std::size_t);                   \
  template void scale_add<T>(const T*, T, T, T*, std::size_t);                              \
  template void axpy<T>(const T*, T, T*, std::size_t);                                      \
  template void mul_accum<T>(const T*, const T*, T*, std::size_t);                          \
  template void div_grad_num<T>(const T*, const T*, T*, std::size_t);                       \
  template void div_grad_den<T>(const T*, const T*, const T*, T*, std::size_t);             \
  template void conv_rows<T>(const T*, T*, std::size_t, std::size_t, const T*,              \
                             std::size_t);                                                  \
  template void conv_cols<T>(const T*, T*, std::size_t, std::size_t, const T*,              \
                             std::size_t);                                                  \
  template void conv_rows_adj<T>(const T*, T*, std::size_t, std::size_t, const T*,          \
                                 std::size_t);                                              \
  template void conv_cols_adj<T>(const T*, T*, std::size_t, std::size_t, const T*,          \
                                 std::size_t);                                              \
  template T reduce_sum<T>(const T*, std::size_t);                                          \
  template void encode_sincos<T>(const T*, const T*, const T*, std::size_t, std::size_t,    \
                                 T*);                                                       \
  template void adam_step<T>(T*, T*, T*, const T*, std::size_t, T, T, T, T, T, T)

PWINR_INSTANTIATE_SERIAL(float);
PWINR_INSTANTIATE_SERIAL(double);

#undef PWINR_INSTANTIATE_SERIAL

}  // namespace pwinr::kernels::serial
