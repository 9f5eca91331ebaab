#include "pwinr/encoding.hpp"

#include "pwinr/common.hpp"
#include "pwinr/kernels.hpp"

namespace pwinr {

namespace {

// (2j - (n-1)) / (n-1): exact -1 and +1 at the endpoints, 0 at the center
// of an odd-length axis. A single-sample axis maps to 0.
template <typename T>
T axis_coord(std::size_t j, std::size_t n) {
  if (n <= 1) return T(0);
  return (T(2) * static_cast<T>(j) - static_cast<T>(n - 1)) / static_cast<T>(n - 1);
}

}  // namespace

template <typename T>
T normalize_to_unit(T v, T lo, T hi) {
  if (!(lo <= hi)) throw ContractError("normalize_to_unit span is inverted");
  if (lo == hi) return T(0);
  return (T(2) * v - (hi + lo)) / (hi - lo);
}

template <typename T>
CoordBatch<T> grid_coords(std::size_t height, std::size_t width, std::size_t r0,
                          std::size_t r1, T angle_norm) {
  if (r0 >= r1 || r1 > height || width == 0)
    throw ContractError("grid_coords row range is empty or out of bounds");
  if (!(angle_norm >= T(-1) && angle_norm <= T(1)))
    throw ContractError("grid_coords angle must be normalized to [-1, 1]");

  CoordBatch<T> batch;
  const std::size_t n = (r1 - r0) * width;
  batch.x.resize(n);
  batch.y.resize(n);
  batch.alpha.assign(n, angle_norm);
  std::size_t s = 0;
  for (std::size_t r = r0; r < r1; ++r) {
    const T yv = axis_coord<T>(r, height);
    for (std::size_t c = 0; c < width; ++c, ++s) {
      batch.x[s] = axis_coord<T>(c, width);
      batch.y[s] = yv;
    }
  }
  return batch;
}

template <typename T>
EncodedBatch<T> positional_encode(const CoordBatch<T>& batch, std::size_t L) {
  if (L < 1) throw ContractError("positional_encode needs L >= 1");
  if (batch.y.size() != batch.count() || batch.alpha.size() != batch.count())
    throw DimensionError("coordinate channels disagree on sample count");

  EncodedBatch<T> out;
  out.embedding_size = L;
  out.gamma = Tensor<T>::matrix(batch.count(), 6 * L + 3);
  kernels::encode_sincos(batch.x.data(), batch.y.data(), batch.alpha.data(), batch.count(),
                         L, out.gamma.data());
  return out;
}

template float normalize_to_unit<float>(float, float, float);
template double normalize_to_unit<double>(double, double, double);
template CoordBatch<float> grid_coords<float>(std::size_t, std::size_t, std::size_t,
                                              std::size_t, float);
template CoordBatch<double> grid_coords<double>(std::size_t, std::size_t, std::size_t,
                                                std::size_t, double);
template EncodedBatch<float> positional_encode<float>(const CoordBatch<float>&, std::size_t);
template EncodedBatch<double> positional_encode<double>(const CoordBatch<double>&,
                                                        std::size_t);

}  // namespace pwinr
