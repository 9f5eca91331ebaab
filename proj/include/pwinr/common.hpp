#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace pwinr {

inline constexpr const char* kVersionString = "0.1.0";

// Error taxonomy shared by the whole library. The CLI maps these onto
// stable exit codes (see cli.hpp).
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Incompatible array shapes (matmul operands, image vs kernel, ...).
struct DimensionError : Error {
  using Error::Error;
};

// A precondition on an argument value was violated.
struct ContractError : Error {
  using Error::Error;
};

// A file failed structural validation (magic, version, CRC, layout).
struct FormatError : Error {
  using Error::Error;
};

// A forward pass or loss produced NaN/Inf.
struct NumericalError : Error {
  using Error::Error;
};

// Filesystem-level failure (missing file, short read, write error).
struct IoError : Error {
  using Error::Error;
};

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// PCG32: small, fully specified generator so that seeded runs are
// reproducible across platforms and the two u64 of state serialize
// directly into checkpoint files.
class Pcg32 {
 public:
  Pcg32() : Pcg32(0x853c49e6748fea9bULL) {}
  explicit Pcg32(std::uint64_t seed, std::uint64_t stream = 0xda3e39cb94b95bdbULL) {
    std::uint64_t s = seed;
    state_ = splitmix64(s);
    inc_ = (splitmix64(s) ^ stream) | 1ULL;
    next_u32();
  }

  std::uint32_t next_u32() {
    std::uint64_t old = state_;
    state_ = old * 6364136223846793005ULL + inc_;
    std::uint32_t xorshifted = static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
    std::uint32_t rot = static_cast<std::uint32_t>(old >> 59u);
    return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
  }

  // Unbiased bounded draw (Lemire rejection).
  std::uint32_t next_below(std::uint32_t bound) {
    if (bound <= 1) return 0;
    std::uint64_t m = static_cast<std::uint64_t>(next_u32()) * bound;
    auto lo = static_cast<std::uint32_t>(m);
    if (lo < bound) {
      std::uint32_t threshold = (0u - bound) % bound;
      while (lo < threshold) {
        m = static_cast<std::uint64_t>(next_u32()) * bound;
        lo = static_cast<std::uint32_t>(m);
      }
    }
    return static_cast<std::uint32_t>(m >> 32);
  }

  // Uniform in [0, 1).
  float next_float() { return static_cast<float>(next_u32() >> 8) * 0x1p-24f; }

  double next_double() {
    std::uint64_t hi = next_u32();
    std::uint64_t lo = next_u32();
    return static_cast<double>(((hi << 32) | lo) >> 11) * 0x1p-53;
  }

  template <typename T>
  T next_uniform();

  std::uint64_t state() const { return state_; }
  std::uint64_t inc() const { return inc_; }
  static Pcg32 from_state(std::uint64_t state, std::uint64_t inc) {
    Pcg32 g;
    g.state_ = state;
    g.inc_ = inc | 1ULL;
    return g;
  }

 private:
  std::uint64_t state_ = 0;
  std::uint64_t inc_ = 0;
};

template <>
inline float Pcg32::next_uniform<float>() {
  return next_float();
}
template <>
inline double Pcg32::next_uniform<double>() {
  return next_double();
}

// CRC-32 (IEEE 802.3, reflected, poly 0xEDB88320), as used by both file
// formats for payload integrity.
std::uint32_t crc32(const void* data, std::size_t length, std::uint32_t seed = 0);

}  // namespace pwinr
