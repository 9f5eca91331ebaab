#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "pwinr/tensor.hpp"

namespace pwinr {

// A stack of beamformed plane-wave images of one scene, one image per
// steering angle, pixels in dB within [dyn_min, dyn_max].
struct PlaneWaveStack {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<float> angles_deg;  // strictly ascending
  float axial_pitch_mm = 0.0f;    // mm per row
  float lateral_pitch_mm = 0.0f;  // mm per column
  float dyn_min = -60.0f;
  float dyn_max = 0.0f;
  std::vector<TensorF> images;  // one H×W dB image per angle
  std::string tag;              // provenance label; not serialized

  std::size_t view_count() const { return images.size(); }
  void validate() const;  // throws ContractError
};

// Stack file: "PWST" + version + dims + dynamic range + pitch + angle
// list + float32 dB images + CRC32. Round-trips byte-exactly; the loader
// clamps pixels into the declared dynamic range. Returns bytes written.
std::size_t save_stack(const PlaneWaveStack& stack, const std::string& path);
PlaneWaveStack load_stack(const std::string& path);

// Affine map dB -> [0,1] over [dyn_min, dyn_max], clamped; denormalize is
// the inverse on [0,1].
template <typename T>
Tensor<T> normalize_db(const Tensor<T>& db, T dyn_min, T dyn_max);
template <typename T>
Tensor<T> denormalize_db(const Tensor<T>& unit, T dyn_min, T dyn_max);

// Grayscale image export; input values in [0,1], clamped, quantized
// round-half-even. Returns bytes written.
enum class ImageFormat { pgm8, pgm16, png8 };
std::size_t export_image(const TensorF& image, const std::string& path, ImageFormat format);

// Synthetic test scene: point scatterers on a uniform background, each
// casting an angle-dependent shadow, plus anechoic disks and multiplicative
// speckle. Geometry in mm; the grid spans [0, W·lateral_pitch] laterally
// and [0, H·axial_pitch] in depth.
struct Scatterer {
  float x_mm = 0.0f;
  float z_mm = 0.0f;
  float amplitude_db = 0.0f;  // peak level
  float sigma_mm = 0.3f;      // Gaussian footprint
};

struct AnechoicDisk {
  float x_mm = 0.0f;
  float z_mm = 0.0f;
  float radius_mm = 0.0f;
  float floor_db = -60.0f;
};

struct ShadowModel {
  bool enabled = false;
  float width_mm = 0.5f;         // lateral Gaussian sigma at the scatterer
  float attenuation_db = 20.0f;  // darkening at the wedge center
};

struct PhantomSpec {
  std::size_t height = 0;
  std::size_t width = 0;
  float axial_pitch_mm = 0.2f;
  float lateral_pitch_mm = 0.2f;
  std::vector<float> angles_deg;
  float background_db = -40.0f;
  float dyn_min = -60.0f;
  float dyn_max = 0.0f;
  std::vector<Scatterer> scatterers;
  std::vector<AnechoicDisk> disks;
  ShadowModel shadow;
  float speckle = 0.0f;  // blend weight of unit-mean Rayleigh noise, [0,1]

  void validate() const;  // throws ContractError (geometry outside grid, ...)
};

// The stock 64×64, 8-angle scene the bundled tests and demos run on.
PhantomSpec default_phantom_spec();

// Line-oriented spec text: `grid H W`, `pitch AX LAT`, `angles ...` or
// `angles span LO HI N`, `background DB`, `dyn MIN MAX`, `speckle LEVEL`,
// `shadow WIDTH_MM ATTEN_DB`, `scatterer X Z AMP_DB SIGMA`,
// `disk X Z RADIUS FLOOR_DB`; `#` comments. Errors carry line numbers.
PhantomSpec parse_phantom_spec(const std::string& text);

PlaneWaveStack generate_phantom(const PhantomSpec& spec, std::uint64_t seed);

// Size comparison of a trained weight file against the stack it replaces,
// for a declared storage encoding of the stack.
enum class StackEncoding { float32, uint8 };
struct CompressionReport {
  std::size_t model_bytes = 0;
  std::size_t stack_bytes = 0;
  double ratio = 0.0;  // stack_bytes / model_bytes
};
CompressionReport compression_report(std::size_t weight_file_bytes,
                                     const PlaneWaveStack& stack, StackEncoding encoding);

}  // namespace pwinr
