#pragma once

// Internal declarations for the two kernel backends. Both define the same
// function set; the dispatcher in kernels.cpp selects one at runtime.

#include <cstddef>

#include "pwinr/kernels.hpp"

namespace pwinr::kernels::serial {

template <typename T>
void affine(const T* x, const T* w, const T* b, T* y, std::size_t n, std::size_t din,
            std::size_t dout);
template <typename T>
void affine_grad_x(const T* gy, const T* w, T* gx, std::size_t n, std::size_t din,
                   std::size_t dout);
template <typename T>
void affine_grad_w(const T* x, const T* gy, T* gw, std::size_t n, std::size_t din,
                   std::size_t dout);
template <typename T>
void affine_grad_b(const T* gy, T* gb, std::size_t n, std::size_t dout);
template <typename T>
void relu(const T* x, T* y, std::size_t n);
template <typename T>
void relu_grad(const T* x, const T* gy, T* gx, std::size_t n);
template <typename T>
void binary(BinaryOp op, const T* a, const T* b, T* y, std::size_t n);
template <typename T>
void scale_add(const T* x, T alpha, T beta, T* y, std::size_t n);
template <typename T>
void axpy(const T* x, T alpha, T* y, std::size_t n);
template <typename T>
void mul_accum(const T* a, const T* b, T* y, std::size_t n);
template <typename T>
void div_grad_num(const T* gy, const T* den, T* gnum, std::size_t n);
template <typename T>
void div_grad_den(const T* gy, const T* y, const T* den, T* gden, std::size_t n);
template <typename T>
void conv_rows(const T* x, T* y, std::size_t h, std::size_t w, const T* taps, std::size_t k);
template <typename T>
void conv_cols(const T* x, T* y, std::size_t h, std::size_t w, const T* taps, std::size_t k);
template <typename T>
void conv_rows_adj(const T* gy, T* gx, std::size_t h, std::size_t w, const T* taps,
                   std::size_t k);
template <typename T>
void conv_cols_adj(const T* gy, T* gx, std::size_t h, std::size_t w, const T* taps,
                   std::size_t k);
template <typename T>
T reduce_sum(const T* x, std::size_t n);
template <typename T>
void encode_sincos(const T* xs, const T* ys, const T* as, std::size_t n, std::size_t L,
                   T* gamma);
template <typename T>
void adam_step(T* param, T* m, T* v, const T* grad, std::size_t n, T lr, T beta1, T beta2,
               T eps, T bias1, T bias2);

}  // namespace pwinr::kernels::serial

namespace pwinr::kernels::openmp {

template <typename T>
void affine(const T* x, const T* w, const T* b, T* y, std::size_t n, std::size_t din,
            std::size_t dout);
template <typename T>
void affine_grad_x(const T* gy, const T* w, T* gx, std::size_t n, std::size_t din,
                   std::size_t dout);
template <typename T>
void affine_grad_w(const T* x, const T* gy, T* gw, std::size_t n, std::size_t din,
                   std::size_t dout);
template <typename T>
void affine_grad_b(const T* gy, T* gb, std::size_t n, std::size_t dout);
template <typename T>
void relu(const T* x, T* y, std::size_t n);
template <typename T>
void relu_grad(const T* x, const T* gy, T* gx, std::size_t n);
template <typename T>
void binary(BinaryOp op, const T* a, const T* b, T* y, std::size_t n);
template <typename T>
void scale_add(const T* x, T alpha, T beta, T* y, std::size_t n);
template <typename T>
void axpy(const T* x, T alpha, T* y, std::size_t n);
template <typename T>
void mul_accum(const T* a, const T* b, T* y, std::size_t n);
template <typename T>
void div_grad_num(const T* gy, const T* den, T* gnum, std::size_t n);
template <typename T>
void div_grad_den(const T* gy, const T* y, const T* den, T* gden, std::size_t n);
template <typename T>
void conv_rows(const T* x, T* y, std::size_t h, std::size_t w, const T* taps, std::size_t k);
template <typename T>
void conv_cols(const T* x, T* y, std::size_t h, std::size_t w, const T* taps, std::size_t k);
template <typename T>
void conv_rows_adj(const T* gy, T* gx, std::size_t h, std::size_t w, const T* taps,
                   std::size_t k);
template <typename T>
void conv_cols_adj(const T* gy, T* gx, std::size_t h, std::size_t w, const T* taps,
                   std::size_t k);
template <typename T>
T reduce_sum(const T* x, std::size_t n);
template <typename T>
void encode_sincos(const T* xs, const T* ys, const T* as, std::size_t n, std::size_t L,
                   T* gamma);
template <typename T>
void adam_step(T* param, T* m, T* v, const T* grad, std::size_t n, T lr, T beta1, T beta2,
               T eps, T bias1, T bias2);

}  // namespace pwinr::kernels::openmp
