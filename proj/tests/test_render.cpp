#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "pwinr/common.hpp"
#include "pwinr/psf.hpp"

using namespace pwinr;

namespace {

TensorD random_image(std::size_t h, std::size_t w, std::uint64_t seed) {
  TensorD img = TensorD::matrix(h, w);
  Pcg32 rng(seed);
  for (std::size_t i = 0; i < img.numel(); ++i) img[i] = rng.next_double();
  return img;
}

double total_variation(const TensorD& img) {
  double tv = 0.0;
  for (std::size_t r = 0; r < img.rows(); ++r)
    for (std::size_t c = 0; c + 1 < img.cols(); ++c)
      tv += std::fabs(img.at(r, c + 1) - img.at(r, c));
  for (std::size_t r = 0; r + 1 < img.rows(); ++r)
    for (std::size_t c = 0; c < img.cols(); ++c)
      tv += std::fabs(img.at(r + 1, c) - img.at(r, c));
  return tv;
}

}  // namespace

TEST_CASE("make_kernel: defaults build a unit-sum 11x11 outer product") {
  auto k = make_kernel<double>();
  CHECK(k.size == 11u);
  CHECK(k.axial_sigma == 2.0);
  CHECK(k.lateral_sigma == 4.0);

  double full_sum = 0.0;
  for (double a : k.axial_taps)
    for (double l : k.lateral_taps) full_sum += a * l;
  CHECK(full_sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("make_kernel: taps are symmetric and the outer product has rank 1") {
  auto k = make_kernel<double>();
  for (std::size_t i = 0; i < k.size; ++i) {
    CHECK(k.axial_taps[i] == doctest::Approx(k.axial_taps[k.size - 1 - i]).epsilon(1e-15));
    CHECK(k.lateral_taps[i] ==
          doctest::Approx(k.lateral_taps[k.size - 1 - i]).epsilon(1e-15));
  }
  // every 2x2 minor of an outer product vanishes
  for (std::size_t r = 0; r + 1 < k.size; r += 2) {
    for (std::size_t c = 0; c + 1 < k.size; c += 3) {
      const double minor = k.axial_taps[r] * k.lateral_taps[c] *
                               k.axial_taps[r + 1] * k.lateral_taps[c + 1] -
                           k.axial_taps[r] * k.lateral_taps[c + 1] *
                               k.axial_taps[r + 1] * k.lateral_taps[c];
      CHECK(minor == doctest::Approx(0.0).epsilon(1e-15));
    }
  }
}

TEST_CASE("make_kernel: equal sigmas give a transpose-symmetric kernel") {
  auto k = make_kernel<double>(3.0, 3.0, 9);
  for (std::size_t r = 0; r < k.size; ++r)
    for (std::size_t c = 0; c < k.size; ++c)
      CHECK(k.axial_taps[r] * k.lateral_taps[c] ==
            doctest::Approx(k.axial_taps[c] * k.lateral_taps[r]).epsilon(1e-15));
}

TEST_CASE("make_kernel: center tap equals the direct Gaussian formula") {
  auto k = make_kernel<double>(2.0, 4.0, 11);
  double sum = 0.0;
  for (int i = -5; i <= 5; ++i) sum += std::exp(-i * i / 8.0);
  CHECK(k.axial_taps[5] == doctest::Approx(1.0 / sum).epsilon(1e-14));
  // off-center tap too
  CHECK(k.axial_taps[3] == doctest::Approx(std::exp(-4.0 / 8.0) / sum).epsilon(1e-14));
}

TEST_CASE("make_kernel: contract violations") {
  CHECK_THROWS_AS(make_kernel<double>(2.0, 4.0, 10), ContractError);  // even
  CHECK_THROWS_AS(make_kernel<double>(0.0, 4.0, 11), ContractError);
  CHECK_THROWS_AS(make_kernel<double>(2.0, -1.0, 11), ContractError);
}

TEST_CASE("render: constant image is unchanged") {
  auto k = make_kernel<double>();
  TensorD img = TensorD::matrix(20, 24, 0.42);
  auto out = render(img, k);
  for (std::size_t i = 0; i < out.numel(); ++i)
    CHECK(out[i] == doctest::Approx(0.42).epsilon(1e-14));
}

TEST_CASE("render: impulse stamps the kernel") {
  auto k = make_kernel<double>();
  TensorD img = TensorD::matrix(31, 31);
  img.at(15, 15) = 1.0;
  auto out = render(img, k);
  for (int dr = -5; dr <= 5; ++dr)
    for (int dc = -5; dc <= 5; ++dc)
      CHECK(out.at(15 + dr, 15 + dc) ==
            doctest::Approx(k.axial_taps[5 + dr] * k.lateral_taps[5 + dc]).epsilon(1e-12));
  CHECK(out.at(15, 21) == 0.0);  // outside the kernel support
  CHECK(out.at(21, 15) == 0.0);
}

TEST_CASE("render: blurring reduces total variation") {
  auto k = make_kernel<double>();
  auto img = random_image(32, 32, 5);
  CHECK(total_variation(render(img, k)) < total_variation(img));
}

TEST_CASE("render: lateral -6 dB width exceeds axial width") {
  auto k = make_kernel<double>();
  TensorD img = TensorD::matrix(31, 31);
  img.at(15, 15) = 1.0;
  auto out = render(img, k);

  const double peak = out.at(15, 15);
  int lateral = 0, axial = 0;
  for (int i = 0; i < 31; ++i) {
    if (out.at(15, i) > 0.5 * peak) ++lateral;  // center row: across columns
    if (out.at(i, 15) > 0.5 * peak) ++axial;    // center column: down rows
  }
  CHECK(lateral > axial);
}

TEST_CASE("render: mean preserved when activity stays clear of the borders") {
  auto k = make_kernel<double>();
  TensorD img = TensorD::matrix(64, 64, 0.5);
  Pcg32 rng(9);
  // perturb only the interior, >= 2 radii from every edge
  for (std::size_t r = 12; r < 52; ++r)
    for (std::size_t c = 12; c < 52; ++c) img.at(r, c) += rng.next_double() * 0.3;

  auto out = render(img, k);
  double m0 = 0.0, m1 = 0.0;
  for (std::size_t i = 0; i < img.numel(); ++i) {
    m0 += img[i];
    m1 += out[i];
  }
  CHECK(m1 / img.numel() == doctest::Approx(m0 / img.numel()).epsilon(1e-6));
}

TEST_CASE("render: size-1 kernel is the identity") {
  auto k = make_kernel<float>(2.0f, 4.0f, 1);
  TensorF img = TensorF::matrix(8, 9);
  Pcg32 rng(11);
  for (std::size_t i = 0; i < img.numel(); ++i) img[i] = rng.next_float();
  auto out = render(img, k);
  CHECK(out == img);
}

TEST_CASE("render: undersized images are dimension errors") {
  auto k = make_kernel<double>();  // radius 5
  CHECK_THROWS_AS(render(TensorD::matrix(5, 20), k), DimensionError);
  CHECK_THROWS_AS(render(TensorD::matrix(20, 5), k), DimensionError);
  CHECK_NOTHROW(render(TensorD::matrix(6, 6), k));
  CHECK_THROWS_AS(render(TensorD({4, 4, 4}), k), DimensionError);
}

TEST_CASE("render_tape matches the direct path bitwise") {
  auto k = make_kernel<float>();
  TensorF img = TensorF::matrix(16, 14);
  Pcg32 rng(13);
  for (std::size_t i = 0; i < img.numel(); ++i) img[i] = rng.next_float();

  auto direct = render(img, k);
  Tape<float> tape;
  auto node = render_tape(tape, tape.constant(img), k);
  CHECK(tape.value(node) == direct);
}
