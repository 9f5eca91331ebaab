#pragma once

#include <cstddef>
#include <vector>

#include "pwinr/tensor.hpp"

namespace pwinr {

// Network input coordinates q = (x, y, alpha), each normalized to [-1, 1].
// grid_coords enumerates a rectangular row range in row-major order.
template <typename T>
struct CoordBatch {
  std::vector<T> x;      // lateral, across image columns
  std::vector<T> y;      // axial, across rows of the FULL image
  std::vector<T> alpha;  // steering angle, constant per view

  std::size_t count() const { return x.size(); }
};

// Frequency embedding of a CoordBatch: row s is
// [q, sin(2^0·pi·q), cos(2^0·pi·q), ..., sin(2^{L-1}·pi·q), cos(2^{L-1}·pi·q)]
// stored N×(6L+3).
template <typename T>
struct EncodedBatch {
  Tensor<T> gamma;
  std::size_t embedding_size = 0;  // L

  std::size_t width() const { return 6 * embedding_size + 3; }
};

// Maps a value in [lo, hi] affinely onto [-1, 1]; a degenerate span maps
// to 0. Used for the steering angle over the stack's declared span.
template <typename T>
T normalize_to_unit(T v, T lo, T hi);

// Coordinates for rows [r0, r1) of a height×width pixel grid. y is
// normalized over the full image height even when encoding a stripe, so
// stripe training and full-image inference see identical coordinates.
template <typename T>
CoordBatch<T> grid_coords(std::size_t height, std::size_t width, std::size_t r0,
                          std::size_t r1, T angle_norm);

template <typename T>
EncodedBatch<T> positional_encode(const CoordBatch<T>& batch, std::size_t L);

}  // namespace pwinr
