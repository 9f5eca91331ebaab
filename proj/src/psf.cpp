#include "pwinr/psf.hpp"

#include <cmath>

#include "pwinr/common.hpp"
#include "pwinr/kernels.hpp"

namespace pwinr {

namespace {

template <typename T>
std::vector<T> gaussian_taps(T sigma, std::size_t size) {
  std::vector<T> taps(size);
  const T c = static_cast<T>(size - 1) / T(2);
  T sum = T(0);
  for (std::size_t i = 0; i < size; ++i) {
    const T d = static_cast<T>(i) - c;
    taps[i] = std::exp(-d * d / (T(2) * sigma * sigma));
    sum += taps[i];
  }
  for (auto& t : taps) t /= sum;
  return taps;
}

template <typename T>
void check_image(const Tensor<T>& image, const PsfKernel<T>& kernel) {
  if (image.rank() != 2) throw DimensionError("render expects an H×W image");
  if (image.rows() < kernel.radius() + 1 || image.cols() < kernel.radius() + 1)
    throw DimensionError("image smaller than kernel radius+1");
}

}  // namespace

template <typename T>
PsfKernel<T> make_kernel(T axial_sigma, T lateral_sigma, std::size_t size) {
  if (size % 2 == 0 || size == 0) throw ContractError("psf kernel size must be odd");
  if (!(axial_sigma > T(0)) || !(lateral_sigma > T(0)))
    throw ContractError("psf sigmas must be positive");

  PsfKernel<T> k;
  k.axial_sigma = axial_sigma;
  k.lateral_sigma = lateral_sigma;
  k.size = size;
  k.axial_taps = gaussian_taps(axial_sigma, size);
  k.lateral_taps = gaussian_taps(lateral_sigma, size);
  return k;
}

template <typename T>
Tensor<T> render(const Tensor<T>& image, const PsfKernel<T>& kernel) {
  check_image(image, kernel);
  const std::size_t h = image.rows(), w = image.cols();
  Tensor<T> tmp = Tensor<T>::matrix(h, w);
  Tensor<T> out = Tensor<T>::matrix(h, w);
  kernels::conv_rows(image.data(), tmp.data(), h, w, kernel.axial_taps.data(), kernel.size);
  kernels::conv_cols(tmp.data(), out.data(), h, w, kernel.lateral_taps.data(), kernel.size);
  ensure_finite(out, "render");
  return out;
}

template <typename T>
typename Tape<T>::NodeId render_tape(Tape<T>& tape, typename Tape<T>::NodeId image,
                                     const PsfKernel<T>& kernel) {
  check_image(tape.value(image), kernel);
  return tape.conv2d_separable(image, kernel.axial_taps, kernel.lateral_taps);
}

template struct PsfKernel<float>;
template struct PsfKernel<double>;
template PsfKernel<float> make_kernel<float>(float, float, std::size_t);
template PsfKernel<double> make_kernel<double>(double, double, std::size_t);
template Tensor<float> render<float>(const Tensor<float>&, const PsfKernel<float>&);
template Tensor<double> render<double>(const Tensor<double>&, const PsfKernel<double>&);
template Tape<float>::NodeId render_tape<float>(Tape<float>&, Tape<float>::NodeId,
                                                const PsfKernel<float>&);
template Tape<double>::NodeId render_tape<double>(Tape<double>&, Tape<double>::NodeId,
                                                  const PsfKernel<double>&);

}  // namespace pwinr
