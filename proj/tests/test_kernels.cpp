#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>
#include <vector>

#include "pwinr/common.hpp"
#include "pwinr/kernels.hpp"

using namespace pwinr;
using namespace pwinr::kernels;

namespace {

std::vector<float> random_vec(std::size_t n, std::uint64_t seed) {
  Pcg32 rng(seed);
  std::vector<float> v(n);
  for (auto& x : v) x = rng.next_float() * 2.0f - 1.0f;
  return v;
}

std::vector<double> random_vecd(std::size_t n, std::uint64_t seed) {
  Pcg32 rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.next_double() * 2.0 - 1.0;
  return v;
}

bool bitwise_equal(const std::vector<float>& a, const std::vector<float>& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

// Runs fn once per backend and reports whether all written outputs match
// bit for bit. fn receives fresh copies of its output buffers each time.
template <typename Fn>
bool backends_agree(Fn&& fn) {
  set_backend(Backend::serial);
  auto ref = fn();
  set_backend(Backend::openmp);
  auto par = fn();
  set_backend(Backend::openmp);
  return bitwise_equal(ref, par);
}

// Scatter-form adjoint oracle for one clamped 1-D pass, the direct
// transpose of the forward definition.
void scatter_adj_line(const double* gy, double* gx, std::size_t len, const double* taps,
                      std::size_t k) {
  const std::ptrdiff_t c0 = static_cast<std::ptrdiff_t>(k / 2);
  for (std::size_t r = 0; r < len; ++r) {
    for (std::size_t t = 0; t < k; ++t) {
      std::ptrdiff_t i = static_cast<std::ptrdiff_t>(r + t) - c0;
      if (i < 0) i = 0;
      if (i >= static_cast<std::ptrdiff_t>(len)) i = static_cast<std::ptrdiff_t>(len) - 1;
      gx[i] += taps[t] * gy[r];
    }
  }
}

}  // namespace

TEST_CASE("backend switch") {
  set_backend(Backend::serial);
  if (openmp_compiled()) {
    CHECK(active_backend() == Backend::serial);
    set_backend(Backend::openmp);
    CHECK(active_backend() == Backend::openmp);
  } else {
    CHECK(active_backend() == Backend::serial);
  }
  set_backend(Backend::openmp);
}

TEST_CASE("affine family: serial and openmp agree bitwise") {
  const std::size_t n = 37, din = 19, dout = 23;
  auto x = random_vec(n * din, 1);
  auto w = random_vec(din * dout, 2);
  auto b = random_vec(dout, 3);
  auto gy = random_vec(n * dout, 4);
  auto gx0 = random_vec(n * din, 5);
  auto gw0 = random_vec(din * dout, 6);
  auto gb0 = random_vec(dout, 7);

  CHECK(backends_agree([&] {
    std::vector<float> y(n * dout);
    affine(x.data(), w.data(), b.data(), y.data(), n, din, dout);
    return y;
  }));
  CHECK(backends_agree([&] {
    auto gx = gx0;
    affine_grad_x(gy.data(), w.data(), gx.data(), n, din, dout);
    return gx;
  }));
  CHECK(backends_agree([&] {
    auto gw = gw0;
    affine_grad_w(x.data(), gy.data(), gw.data(), n, din, dout);
    return gw;
  }));
  CHECK(backends_agree([&] {
    auto gb = gb0;
    affine_grad_b(gy.data(), gb.data(), n, dout);
    return gb;
  }));
}

TEST_CASE("elementwise kernels: serial and openmp agree bitwise") {
  const std::size_t n = 4096 * 2 + 311;  // not a block multiple
  auto a = random_vec(n, 10);
  auto b = random_vec(n, 11);
  auto g = random_vec(n, 12);
  auto acc0 = random_vec(n, 13);
  // keep divisors away from zero
  std::vector<float> den(n);
  for (std::size_t i = 0; i < n; ++i) den[i] = 1.5f + b[i];

  for (auto op : {BinaryOp::add, BinaryOp::sub, BinaryOp::mul, BinaryOp::div}) {
    CHECK(backends_agree([&] {
      std::vector<float> y(n);
      binary(op, a.data(), den.data(), y.data(), n);
      return y;
    }));
  }
  CHECK(backends_agree([&] {
    std::vector<float> y(n);
    relu(a.data(), y.data(), n);
    return y;
  }));
  CHECK(backends_agree([&] {
    auto gx = acc0;
    relu_grad(a.data(), g.data(), gx.data(), n);
    return gx;
  }));
  CHECK(backends_agree([&] {
    std::vector<float> y(n);
    scale_add(a.data(), 0.37f, -2.5f, y.data(), n);
    return y;
  }));
  CHECK(backends_agree([&] {
    auto y = acc0;
    axpy(a.data(), -1.25f, y.data(), n);
    return y;
  }));
  CHECK(backends_agree([&] {
    auto y = acc0;
    mul_accum(a.data(), b.data(), y.data(), n);
    return y;
  }));
  CHECK(backends_agree([&] {
    auto gn = acc0;
    div_grad_num(g.data(), den.data(), gn.data(), n);
    return gn;
  }));
  CHECK(backends_agree([&] {
    auto gd = acc0;
    div_grad_den(g.data(), a.data(), den.data(), gd.data(), n);
    return gd;
  }));
}

TEST_CASE("conv passes: serial and openmp agree bitwise") {
  // Include a case smaller than the kernel so every output is clamped.
  struct Dim {
    std::size_t h, w, k;
  };
  for (auto [h, w, k] : {Dim{31, 17, 11}, Dim{5, 4, 11}, Dim{16, 16, 3}, Dim{9, 13, 1}}) {
    auto x = random_vec(h * w, 20 + h);
    auto taps = random_vec(k, 21 + k);
    auto gy = random_vec(h * w, 22 + h);
    auto gx0 = random_vec(h * w, 23 + w);

    CHECK(backends_agree([&, h = h, w = w, k = k] {
      std::vector<float> y(h * w);
      conv_rows(x.data(), y.data(), h, w, taps.data(), k);
      return y;
    }));
    CHECK(backends_agree([&, h = h, w = w, k = k] {
      std::vector<float> y(h * w);
      conv_cols(x.data(), y.data(), h, w, taps.data(), k);
      return y;
    }));
    CHECK(backends_agree([&, h = h, w = w, k = k] {
      auto gx = gx0;
      conv_rows_adj(gy.data(), gx.data(), h, w, taps.data(), k);
      return gx;
    }));
    CHECK(backends_agree([&, h = h, w = w, k = k] {
      auto gx = gx0;
      conv_cols_adj(gy.data(), gx.data(), h, w, taps.data(), k);
      return gx;
    }));
  }
}

TEST_CASE("conv adjoints match the scatter-form transpose") {
  set_backend(Backend::serial);
  for (std::size_t len : {std::size_t(1), std::size_t(3), std::size_t(5), std::size_t(6),
                          std::size_t(11), std::size_t(40)}) {
    for (std::size_t k : {std::size_t(1), std::size_t(3), std::size_t(5), std::size_t(11)}) {
      auto gy = random_vecd(len, 31 * len + k);
      auto taps = random_vecd(k, 17 * k + len);

      // Exercise via the column pass on a 1×len image.
      std::vector<double> got(len, 0.0), want(len, 0.0);
      conv_cols_adj(gy.data(), got.data(), 1, len, taps.data(), k);
      scatter_adj_line(gy.data(), want.data(), len, taps.data(), k);
      for (std::size_t i = 0; i < len; ++i)
        CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
    }
  }
  set_backend(Backend::openmp);
}

TEST_CASE("conv adjoint satisfies the dot-product identity") {
  set_backend(Backend::serial);
  const std::size_t h = 13, w = 9, k = 11;
  auto x = random_vecd(h * w, 41);
  auto g = random_vecd(h * w, 42);
  auto taps = random_vecd(k, 43);

  std::vector<double> y(h * w), adj(h * w, 0.0);

  // <conv_rows(x), g> == <x, conv_rows_adj(g)>
  conv_rows(x.data(), y.data(), h, w, taps.data(), k);
  conv_rows_adj(g.data(), adj.data(), h, w, taps.data(), k);
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t i = 0; i < h * w; ++i) {
    lhs += y[i] * g[i];
    rhs += x[i] * adj[i];
  }
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));

  // same for the column pass
  std::fill(adj.begin(), adj.end(), 0.0);
  conv_cols(x.data(), y.data(), h, w, taps.data(), k);
  conv_cols_adj(g.data(), adj.data(), h, w, taps.data(), k);
  lhs = rhs = 0.0;
  for (std::size_t i = 0; i < h * w; ++i) {
    lhs += y[i] * g[i];
    rhs += x[i] * adj[i];
  }
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  set_backend(Backend::openmp);
}

TEST_CASE("conv edge clamp matches direct evaluation") {
  set_backend(Backend::serial);
  const std::size_t h = 4, w = 6, k = 5;
  auto x = random_vecd(h * w, 51);
  auto taps = random_vecd(k, 52);
  std::vector<double> y(h * w);
  conv_rows(x.data(), y.data(), h, w, taps.data(), k);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      double want = 0.0;
      for (std::size_t t = 0; t < k; ++t) {
        std::ptrdiff_t src = static_cast<std::ptrdiff_t>(r + t) - 2;
        if (src < 0) src = 0;
        if (src >= static_cast<std::ptrdiff_t>(h)) src = h - 1;
        want += taps[t] * x[src * w + c];
      }
      CHECK(y[r * w + c] == doctest::Approx(want).epsilon(1e-12));
    }
  }
  set_backend(Backend::openmp);
}

TEST_CASE("reduce_sum: deterministic blocking, both backends, accurate") {
  for (std::size_t n : {std::size_t(1), std::size_t(4095), std::size_t(4096),
                        std::size_t(4097), std::size_t(3 * 4096 + 17)}) {
    auto x = random_vec(n, 60 + n);
    set_backend(Backend::serial);
    const float s0 = reduce_sum(x.data(), n);
    set_backend(Backend::openmp);
    const float s1 = reduce_sum(x.data(), n);
    CHECK(std::memcmp(&s0, &s1, sizeof(float)) == 0);

    long double want = 0.0L;
    for (float v : x) want += v;
    CHECK(s0 == doctest::Approx(static_cast<double>(want)).epsilon(1e-5));
  }
  CHECK(reduce_sum(static_cast<const float*>(nullptr), 0) == 0.0f);
}

TEST_CASE("encode_sincos row layout") {
  set_backend(Backend::serial);
  const std::size_t L = 2;
  const double xv = 0.3, yv = -0.7, av = 0.1;
  std::vector<double> gamma(6 * L + 3);
  encode_sincos(&xv, &yv, &av, 1, L, gamma.data());

  const double pi = 3.14159265358979323846;
  CHECK(gamma[0] == xv);
  CHECK(gamma[1] == yv);
  CHECK(gamma[2] == av);
  CHECK(gamma[3] == doctest::Approx(std::sin(pi * xv)).epsilon(1e-15));
  CHECK(gamma[4] == doctest::Approx(std::sin(pi * yv)).epsilon(1e-15));
  CHECK(gamma[5] == doctest::Approx(std::sin(pi * av)).epsilon(1e-15));
  CHECK(gamma[6] == doctest::Approx(std::cos(pi * xv)).epsilon(1e-15));
  CHECK(gamma[9] == doctest::Approx(std::sin(2 * pi * xv)).epsilon(1e-15));
  CHECK(gamma[12] == doctest::Approx(std::cos(2 * pi * xv)).epsilon(1e-15));
  set_backend(Backend::openmp);
}

TEST_CASE("encode_sincos and adam_step: serial and openmp agree bitwise") {
  const std::size_t n = 513;
  auto xs = random_vec(n, 70);
  auto ys = random_vec(n, 71);
  auto as = random_vec(n, 72);
  CHECK(backends_agree([&] {
    std::vector<float> gamma(n * (6 * 10 + 3));
    encode_sincos(xs.data(), ys.data(), as.data(), n, 10, gamma.data());
    return gamma;
  }));

  auto p0 = random_vec(n, 73);
  auto m0 = random_vec(n, 74);
  auto v0 = random_vec(n, 75);
  for (auto& v : v0) v = std::fabs(v);  // second moments are nonnegative
  auto grad = random_vec(n, 76);
  CHECK(backends_agree([&] {
    auto p = p0;
    auto m = m0;
    auto v = v0;
    adam_step(p.data(), m.data(), v.data(), grad.data(), n, 1e-3f, 0.9f, 0.999f, 1e-8f,
              0.1f, 0.001999f);
    std::vector<float> all;
    all.insert(all.end(), p.begin(), p.end());
    all.insert(all.end(), m.begin(), m.end());
    all.insert(all.end(), v.begin(), v.end());
    return all;
  }));
}

TEST_CASE("adam_step matches hand-stepped scalar update") {
  set_backend(Backend::serial);
  // One parameter, first step: m = 0.1·g, v = 0.001·g², bias terms for t=1.
  double p = 2.0, m = 0.0, v = 0.0;
  const double g = 0.5, lr = 0.01, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  adam_step(&p, &m, &v, &g, 1, lr, b1, b2, eps, 1.0 - b1, 1.0 - b2);

  const double m_want = 0.1 * g;
  const double v_want = 0.001 * g * g;
  const double step = lr * (m_want / (1.0 - b1)) / (std::sqrt(v_want / (1.0 - b2)) + eps);
  CHECK(m == doctest::Approx(m_want).epsilon(1e-15));
  CHECK(v == doctest::Approx(v_want).epsilon(1e-15));
  CHECK(p == doctest::Approx(2.0 - step).epsilon(1e-12));
  set_backend(Backend::openmp);
}
