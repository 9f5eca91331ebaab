// Runtime backend switch. Every public kernel forwards to the serial or
// OpenMP implementation according to the process-wide setting.

#include "pwinr/kernels.hpp"

#include <atomic>

#include "kernels_impl.hpp"

namespace pwinr::kernels {

namespace {
std::atomic<Backend> g_backend{Backend::openmp};
}

void set_backend(Backend backend) { g_backend.store(backend, std::memory_order_relaxed); }

Backend active_backend() {
  // Without OpenMP compiled in there is only one implementation.
  if (!openmp_compiled()) return Backend::serial;
  return g_backend.load(std::memory_order_relaxed);
}

bool openmp_compiled() {
#ifdef _OPENMP
  return true;
#else
  return false;
#endif
}

template <typename T>
void affine(const T* x, const T* w, const T* b, T* y, std::size_t n, std::size_t din,
            std::size_t dout) {
  if (active_backend() == Backend::openmp)
    openmp::affine(x, w, b, y, n, din, dout);
  else
    serial::affine(x, w, b, y, n, din, dout);
}

template <typename T>
void affine_grad_x(const T* gy, const T* w, T* gx, std::size_t n, std::size_t din,
                   std::size_t dout) {
  if (active_backend() == Backend::openmp)
    openmp::affine_grad_x(gy, w, gx, n, din, dout);
  else
    serial::affine_grad_x(gy, w, gx, n, din, dout);
}

template <typename T>
void affine_grad_w(const T* x, const T* gy, T* gw, std::size_t n, std::size_t din,
                   std::size_t dout) {
  if (active_backend() == Backend::openmp)
    openmp::affine_grad_w(x, gy, gw, n, din, dout);
  else
    serial::affine_grad_w(x, gy, gw, n, din, dout);
}

template <typename T>
void affine_grad_b(const T* gy, T* gb, std::size_t n, std::size_t dout) {
  if (active_backend() == Backend::openmp)
    openmp::affine_grad_b(gy, gb, n, dout);
  else
    serial::affine_grad_b(gy, gb, n, dout);
}

template <typename T>
void relu(const T* x, T* y, std::size_t n) {
  if (active_backend() == Backend::openmp)
    openmp::relu(x, y, n);
  else
    serial::relu(x, y, n);
}

template <typename T>
void relu_grad(const T* x, const T* gy, T* gx, std::size_t n) {
  if (active_backend() == Backend::openmp)
    openmp::relu_grad(x, gy, gx, n);
  else
    serial::relu_grad(x, gy, gx, n);
}

template <typename T>
void binary(BinaryOp op, const T* a, const T* b, T* y, std::size_t n) {
  if (active_backend() == Backend::openmp)
    openmp::binary(op, a, b, y, n);
  else
    serial::binary(op, a, b, y, n);
}

template <typename T>
void scale_add(const T* x, T alpha, T beta, T* y, std::size_t n) {
  if (active_backend() == Backend::openmp)
    openmp::scale_add(x, alpha, beta, y, n);
  else
    serial::scale_add(x, alpha, beta, y, n);
}

template <typename T>
void axpy(const T* x, T alpha, T* y, std::size_t n) {
  if (active_backend() == Backend::openmp)
    openmp::axpy(x, alpha, y, n);
  else
    serial::axpy(x, alpha, y, n);
}

template <typename T>
void mul_accum(const T* a, const T* b, T* y, std::size_t n) {
  if (active_backend() == Backend::openmp)
    openmp::mul_accum(a, b, y, n);
  else
    serial::mul_accum(a, b, y, n);
}

template <typename T>
void div_grad_num(const T* gy, const T* den, T* gnum, std::size_t n) {
  if (active_backend() == Backend::openmp)
    openmp::div_grad_num(gy, den, gnum, n);
  else
    serial::div_grad_num(gy, den, gnum, n);
}

template <typename T>
void div_grad_den(const T* gy, const T* y, const T* den, T* gden, std::size_t n) {
  if (active_backend() == Backend::openmp)
    openmp::div_grad_den(gy, y, den, gden, n);
  else
    serial::div_grad_den(gy, y, den, gden, n);
}

template <typename T>
void conv_rows(const T* x, T* y, std::size_t h, std::size_t w, const T* taps, std::size_t k) {
  if (active_backend() == Backend::openmp)
    openmp::conv_rows(x, y, h, w, taps, k);
  else
    serial::conv_rows(x, y, h, w, taps, k);
}

template <typename T>
void conv_cols(const T* x, T* y, std::size_t h, std::size_t w, const T* taps, std::size_t k) {
  if (active_backend() == Backend::openmp)
    openmp::conv_cols(x, y, h, w, taps, k);
  else
    serial::conv_cols(x, y, h, w, taps, k);
}

template <typename T>
void conv_rows_adj(const T* gy, T* gx, std::size_t h, std::size_t w, const T* taps,
                   std::size_t k) {
  if (active_backend() == Backend::openmp)
    openmp::conv_rows_adj(gy, gx, h, w, taps, k);
  else
    serial::conv_rows_adj(gy, gx, h, w, taps, k);
}

template <typename T>
void conv_cols_adj(const T* gy, T* gx, std::size_t h, std::size_t w, const T* taps,
                   std::size_t k) {
  if (active_backend() == Backend::openmp)
    openmp::conv_cols_adj(gy, gx, h, w, taps, k);
  else
    serial::conv_cols_adj(gy, gx, h, w, taps, k);
}

template <typename T>
T reduce_sum(const T* x, std::size_t n) {
  if (active_backend() == Backend::openmp) return openmp::reduce_sum(x, n);
  return serial::reduce_sum(x, n);
}

template <typename T>
void encode_sincos(const T* xs, const T* ys, const T* as, std::size_t n, std::size_t L,
                   T* gamma) {
  if (active_backend() == Backend::openmp)
    openmp::encode_sincos(xs, ys, as, n, L, gamma);
  else
    serial::encode_sincos(xs, ys, as, n, L, gamma);
}

template <typename T>
void adam_step(T* param, T* m, T* v, const T* grad, std::size_t n, T lr, T beta1, T beta2,
               T eps, T bias1, T bias2) {
  if (active_backend() == Backend::openmp)
    openmp::adam_step(param, m, v, grad, n, lr, beta1, beta2, eps, bias1, bias2);
  else
    serial::adam_step(param, m, v, grad, n, lr, beta1, beta2, eps, bias1, bias2);
}

#define PWINR_INSTANTIATE_DISPATCH(T)                                                        \
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

PWINR_INSTANTIATE_DISPATCH(float);
PWINR_INSTANTIATE_DISPATCH(double);

#undef PWINR_INSTANTIATE_DISPATCH

}  // namespace pwinr::kernels
