#pragma once

#include <cstddef>

namespace pwinr::kernels {

// Two interchangeable kernel backends. The serial one is the reference
// implementation; the OpenMP one parallelizes over independent outputs and
// uses the same per-element accumulation order, so the two are required to
// produce bitwise-identical results (enforced by tests, compared by the
// bench target).
enum class Backend { serial, openmp };

void set_backend(Backend backend);
Backend active_backend();
bool openmp_compiled();

// y[n,j] = sum_i x[n,i]·w[i,j] + b[j]
template <typename T>
void affine(const T* x, const T* w, const T* b, T* y, std::size_t n, std::size_t din,
            std::size_t dout);

// gx[n,i] += sum_j gy[n,j]·w[i,j]
template <typename T>
void affine_grad_x(const T* gy, const T* w, T* gx, std::size_t n, std::size_t din,
                   std::size_t dout);

// gw[i,j] += sum_n x[n,i]·gy[n,j]
template <typename T>
void affine_grad_w(const T* x, const T* gy, T* gw, std::size_t n, std::size_t din,
                   std::size_t dout);

// gb[j] += sum_n gy[n,j]
template <typename T>
void affine_grad_b(const T* gy, T* gb, std::size_t n, std::size_t dout);

template <typename T>
void relu(const T* x, T* y, std::size_t n);

// gx += gy where x > 0 (subgradient at 0 is 0)
template <typename T>
void relu_grad(const T* x, const T* gy, T* gx, std::size_t n);

enum class BinaryOp { add, sub, mul, div };

template <typename T>
void binary(BinaryOp op, const T* a, const T* b, T* y, std::size_t n);

// y[i] = alpha·x[i] + beta
template <typename T>
void scale_add(const T* x, T alpha, T beta, T* y, std::size_t n);

// y[i] += alpha·x[i]
template <typename T>
void axpy(const T* x, T alpha, T* y, std::size_t n);

// y[i] += a[i]·b[i]
template <typename T>
void mul_accum(const T* a, const T* b, T* y, std::size_t n);

// gnum[i] += gy[i] / den[i]
template <typename T>
void div_grad_num(const T* gy, const T* den, T* gnum, std::size_t n);

// gden[i] += -gy[i]·y[i] / den[i], with y the forward quotient
template <typename T>
void div_grad_den(const T* gy, const T* y, const T* den, T* gden, std::size_t n);

// 1-D pass along rows (axis 0) of an h×w image with edge-clamp boundary:
// y[r,c] = sum_t taps[t]·x[clamp(r+t-k/2), c]
template <typename T>
void conv_rows(const T* x, T* y, std::size_t h, std::size_t w, const T* taps, std::size_t k);

// Same along columns (axis 1).
template <typename T>
void conv_cols(const T* x, T* y, std::size_t h, std::size_t w, const T* taps, std::size_t k);

// Adjoints of the passes above; accumulate into gx.
template <typename T>
void conv_rows_adj(const T* gy, T* gx, std::size_t h, std::size_t w, const T* taps,
                   std::size_t k);

template <typename T>
void conv_cols_adj(const T* gy, T* gx, std::size_t h, std::size_t w, const T* taps,
                   std::size_t k);

// Deterministic reduction: fixed-size blocks summed left to right, block
// partials combined in block order. The blocking is part of the contract so
// both backends agree bitwise for any thread count.
inline constexpr std::size_t kReduceBlock = 4096;

template <typename T>
T reduce_sum(const T* x, std::size_t n);

// Frequency embedding rows. For sample s with q = (x, y, a) writes
// [x, y, a, sin(f0·x), sin(f0·y), sin(f0·a), cos(f0·x), cos(f0·y), cos(f0·a),
//  ..., sin(f_{L-1}·a), cos(f_{L-1}·a)] with f_l = 2^l·pi, row width 6L+3.
template <typename T>
void encode_sincos(const T* xs, const T* ys, const T* as, std::size_t n, std::size_t L,
                   T* gamma);

// Adam parameter update, elementwise over one blob. bias1/bias2 are the
// precomputed correction terms 1-beta1^t and 1-beta2^t.
template <typename T>
void adam_step(T* param, T* m, T* v, const T* grad, std::size_t n, T lr, T beta1, T beta2,
               T eps, T bias1, T bias2);

}  // namespace pwinr::kernels
