#pragma once

#include <cstddef>
#include <vector>

#include "pwinr/tape.hpp"
#include "pwinr/tensor.hpp"

namespace pwinr {

// Anisotropic Gaussian point-spread function. The full 2-D kernel is the
// outer product of the axial (vertical, along depth rows) and lateral
// (horizontal, across columns) 1-D taps; each 1-D kernel is normalized to
// sum 1, so the outer product does too.
template <typename T>
struct PsfKernel {
  T axial_sigma = T(0);
  T lateral_sigma = T(0);
  std::size_t size = 0;  // odd
  std::vector<T> axial_taps;
  std::vector<T> lateral_taps;

  std::size_t radius() const { return size / 2; }
};

// taps[i] ∝ exp(-(i-c)²/(2σ²)), normalized. Defaults reflect the lower
// lateral resolution of plane-wave imaging: lateral blur twice the axial.
template <typename T>
PsfKernel<T> make_kernel(T axial_sigma = T(2), T lateral_sigma = T(4),
                         std::size_t size = 11);

// o′ = o ∗ k on an H×W image, vertical (axial) pass then horizontal
// (lateral) pass, edge-clamp padding.
template <typename T>
Tensor<T> render(const Tensor<T>& image, const PsfKernel<T>& kernel);

// Same operation recorded on a tape so training can differentiate through
// the rendering step.
template <typename T>
typename Tape<T>::NodeId render_tape(Tape<T>& tape, typename Tape<T>::NodeId image,
                                     const PsfKernel<T>& kernel);

}  // namespace pwinr
