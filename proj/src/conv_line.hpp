#pragma once

// Per-line pieces of the separable convolution shared by both kernel
// backends. Each helper touches one output line; the backends only decide
// how lines are distributed, so serial and OpenMP results stay bitwise
// identical.

#include <cstddef>

namespace pwinr::kernels::detail {

inline std::size_t clamp_index(std::ptrdiff_t v, std::size_t hi) {
  if (v < 0) return 0;
  if (static_cast<std::size_t>(v) > hi) return hi;
  return static_cast<std::size_t>(v);
}

// Output row r of the along-rows pass: y[r,c] = sum_t taps[t]·x[clamp(r+t-k/2), c].
template <typename T>
inline void conv_row_pass(const T* x, T* y, std::size_t h, std::size_t w, const T* taps,
                          std::size_t k, std::size_t r) {
  const std::size_t c0 = k / 2;
  T* yrow = y + r * w;
  for (std::size_t c = 0; c < w; ++c) yrow[c] = T(0);
  for (std::size_t t = 0; t < k; ++t) {
    const std::size_t src =
        clamp_index(static_cast<std::ptrdiff_t>(r + t) - static_cast<std::ptrdiff_t>(c0),
                    h - 1);
    const T* xrow = x + src * w;
    const T tap = taps[t];
    for (std::size_t c = 0; c < w; ++c) yrow[c] += tap * xrow[c];
  }
}

// Row r of the along-columns pass.
template <typename T>
inline void conv_col_pass(const T* x, T* y, std::size_t w, const T* taps, std::size_t k,
                          std::size_t r) {
  const std::size_t c0 = k / 2;
  const T* xrow = x + r * w;
  T* yrow = y + r * w;
  for (std::size_t c = 0; c < w; ++c) {
    T acc = T(0);
    for (std::size_t t = 0; t < k; ++t) {
      const std::size_t src =
          clamp_index(static_cast<std::ptrdiff_t>(c + t) - static_cast<std::ptrdiff_t>(c0),
                      w - 1);
      acc += taps[t] * xrow[src];
    }
    yrow[c] = acc;
  }
}

// Gather-form adjoint of one clamped 1-D pass over a strided line. Interior
// samples see a correlation with the flipped taps; the two end samples also
// collect the mass the forward pass clamped onto them.
template <typename T>
inline void conv_line_adj(const T* gy, T* gx, std::size_t len, std::size_t stride,
                          const T* taps, std::size_t k) {
  const std::size_t c0 = k / 2;
  for (std::size_t r = 0; r < len; ++r) {
    T acc = T(0);
    for (std::size_t t = 0; t < k; ++t) {
      const std::ptrdiff_t i =
          static_cast<std::ptrdiff_t>(r + c0) - static_cast<std::ptrdiff_t>(t);
      if (i >= 0 && static_cast<std::size_t>(i) < len) acc += taps[t] * gy[i * stride];
    }
    if (r == 0) {
      const std::size_t imax = c0 < len ? c0 : len;
      for (std::size_t i = 0; i < imax; ++i) {
        for (std::size_t t = 0; t + i < c0; ++t) acc += taps[t] * gy[i * stride];
      }
    }
    if (r + 1 == len) {
      const std::size_t ilo = len > c0 ? len - c0 : 0;
      for (std::size_t i = ilo; i < len; ++i) {
        for (std::size_t t = len + c0 - i; t < k; ++t) acc += taps[t] * gy[i * stride];
      }
    }
    gx[r * stride] += acc;
  }
}

}  // namespace pwinr::kernels::detail
