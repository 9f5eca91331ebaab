#include "pwinr/data_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "pwinr/common.hpp"
#include "wire.hpp"

namespace pwinr {

namespace {

constexpr std::uint32_t kStackFormatVersion = 1;

double db_to_lin(double db) { return std::pow(10.0, db / 20.0); }

std::string basename_of(const std::string& path) {
  const std::size_t slash = path.find_last_of('/');
  std::string name = slash == std::string::npos ? path : path.substr(slash + 1);
  const std::size_t dot = name.find_last_of('.');
  return dot == std::string::npos ? name : name.substr(0, dot);
}

}  // namespace

void PlaneWaveStack::validate() const {
  if (height == 0 || width == 0) throw ContractError("stack dimensions must be positive");
  if (images.empty()) throw ContractError("stack has no views");
  if (angles_deg.size() != images.size())
    throw ContractError("stack angle count does not match image count");
  for (std::size_t i = 1; i < angles_deg.size(); ++i) {
    if (!(angles_deg[i] > angles_deg[i - 1]))
      throw ContractError("stack angles must be strictly ascending");
  }
  if (!(dyn_max > dyn_min)) throw ContractError("stack dynamic range is empty");
  if (!(axial_pitch_mm > 0.0f) || !(lateral_pitch_mm > 0.0f))
    throw ContractError("stack pixel pitch must be positive");
  for (const TensorF& img : images) {
    if (img.rank() != 2 || img.rows() != height || img.cols() != width)
      throw ContractError("stack image shape does not match declared dimensions");
  }
}

std::size_t save_stack(const PlaneWaveStack& stack, const std::string& path) {
  stack.validate();
  wire::Writer w;
  w.magic("PWST");
  w.u32(kStackFormatVersion);
  w.u32(static_cast<std::uint32_t>(stack.height));
  w.u32(static_cast<std::uint32_t>(stack.width));
  w.u32(static_cast<std::uint32_t>(stack.view_count()));
  w.f32(stack.dyn_min);
  w.f32(stack.dyn_max);
  w.f32(stack.axial_pitch_mm);
  w.f32(stack.lateral_pitch_mm);
  for (float a : stack.angles_deg) w.f32(a);
  for (const TensorF& img : stack.images) {
    for (std::size_t i = 0; i < img.numel(); ++i) w.f32(img[i]);
  }
  w.append_crc(8);
  wire::write_file(path, w.bytes());
  return w.size();
}

PlaneWaveStack load_stack(const std::string& path) {
  const auto bytes = wire::read_file(path);
  wire::Reader r(bytes);
  r.expect_magic("PWST");
  const std::uint32_t version = r.u32();
  if (version != kStackFormatVersion)
    throw FormatError("unsupported stack format version " + std::to_string(version));
  r.check_crc(8);

  PlaneWaveStack stack;
  stack.height = r.u32();
  stack.width = r.u32();
  const std::uint32_t views = r.u32();
  const std::uint64_t pixels = static_cast<std::uint64_t>(stack.height) * stack.width;
  if (views > r.remaining() / 4 || (views != 0 && pixels > r.remaining() / 4 / views))
    throw FormatError("declared dimensions exceed the file size");
  stack.dyn_min = r.f32();
  stack.dyn_max = r.f32();
  stack.axial_pitch_mm = r.f32();
  stack.lateral_pitch_mm = r.f32();
  stack.angles_deg.resize(views);
  for (float& a : stack.angles_deg) a = r.f32();
  stack.images.reserve(views);
  for (std::uint32_t v = 0; v < views; ++v) {
    TensorF img = TensorF::matrix(stack.height, stack.width);
    for (std::size_t i = 0; i < img.numel(); ++i)
      img[i] = std::clamp(r.f32(), stack.dyn_min, stack.dyn_max);
    stack.images.push_back(std::move(img));
  }
  r.u32();  // CRC, already checked
  r.expect_end();
  stack.tag = basename_of(path);

  try {
    stack.validate();
  } catch (const ContractError& e) {
    throw FormatError(std::string("stack file invalid: ") + e.what());
  }
  return stack;
}

template <typename T>
Tensor<T> normalize_db(const Tensor<T>& db, T dyn_min, T dyn_max) {
  if (!(dyn_max > dyn_min)) throw ContractError("dynamic range is empty");
  Tensor<T> out(db.shape());
  const T span = dyn_max - dyn_min;
  for (std::size_t i = 0; i < db.numel(); ++i) {
    out[i] = std::clamp((db[i] - dyn_min) / span, T(0), T(1));
  }
  return out;
}

template <typename T>
Tensor<T> denormalize_db(const Tensor<T>& unit, T dyn_min, T dyn_max) {
  if (!(dyn_max > dyn_min)) throw ContractError("dynamic range is empty");
  Tensor<T> out(unit.shape());
  for (std::size_t i = 0; i < unit.numel(); ++i) {
    out[i] = dyn_min + std::clamp(unit[i], T(0), T(1)) * (dyn_max - dyn_min);
  }
  return out;
}

template Tensor<float> normalize_db<float>(const Tensor<float>&, float, float);
template Tensor<double> normalize_db<double>(const Tensor<double>&, double, double);
template Tensor<float> denormalize_db<float>(const Tensor<float>&, float, float);
template Tensor<double> denormalize_db<double>(const Tensor<double>&, double, double);

namespace {

// Round-half-even quantization of a [0,1] value onto [0, maxval].
std::uint32_t quantize(float v, std::uint32_t maxval) {
  const double scaled = std::clamp(static_cast<double>(v), 0.0, 1.0) * maxval;
  return static_cast<std::uint32_t>(std::nearbyint(scaled));
}

void be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void png_chunk(std::vector<std::uint8_t>& out, const char (&type)[5],
               const std::vector<std::uint8_t>& data) {
  be32(out, static_cast<std::uint32_t>(data.size()));
  std::vector<std::uint8_t> body(type, type + 4);
  body.insert(body.end(), data.begin(), data.end());
  out.insert(out.end(), body.begin(), body.end());
  be32(out, crc32(body.data(), body.size()));
}

std::vector<std::uint8_t> encode_png8(const TensorF& image) {
  const std::size_t h = image.rows(), w = image.cols();

  // one filter byte (0 = none) per scanline, then the raw row
  std::vector<std::uint8_t> raw;
  raw.reserve(h * (w + 1));
  for (std::size_t r = 0; r < h; ++r) {
    raw.push_back(0);
    for (std::size_t c = 0; c < w; ++c)
      raw.push_back(static_cast<std::uint8_t>(quantize(image.at(r, c), 255)));
  }

  uLongf comp_len = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> comp(comp_len);
  if (compress2(comp.data(), &comp_len, raw.data(), static_cast<uLong>(raw.size()),
                Z_BEST_COMPRESSION) != Z_OK) {
    throw IoError("png deflate failed");
  }
  comp.resize(comp_len);

  std::vector<std::uint8_t> ihdr;
  be32(ihdr, static_cast<std::uint32_t>(w));
  be32(ihdr, static_cast<std::uint32_t>(h));
  ihdr.push_back(8);  // bit depth
  ihdr.push_back(0);  // color type: grayscale
  ihdr.push_back(0);  // compression
  ihdr.push_back(0);  // filter
  ihdr.push_back(0);  // interlace

  std::vector<std::uint8_t> out = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
  png_chunk(out, "IHDR", ihdr);
  png_chunk(out, "IDAT", comp);
  png_chunk(out, "IEND", {});
  return out;
}

}  // namespace

std::size_t export_image(const TensorF& image, const std::string& path, ImageFormat format) {
  if (image.rank() != 2 || image.numel() == 0)
    throw DimensionError("image export expects a nonempty matrix");

  std::vector<std::uint8_t> bytes;
  switch (format) {
    case ImageFormat::pgm8:
    case ImageFormat::pgm16: {
      const bool wide = format == ImageFormat::pgm16;
      const std::uint32_t maxval = wide ? 65535 : 255;
      std::ostringstream header;
      header << "P5\n" << image.cols() << " " << image.rows() << "\n" << maxval << "\n";
      const std::string h = header.str();
      bytes.assign(h.begin(), h.end());
      for (std::size_t i = 0; i < image.numel(); ++i) {
        const std::uint32_t q = quantize(image[i], maxval);
        if (wide) bytes.push_back(static_cast<std::uint8_t>(q >> 8));  // PGM is big-endian
        bytes.push_back(static_cast<std::uint8_t>(q));
      }
      break;
    }
    case ImageFormat::png8:
      bytes = encode_png8(image);
      break;
  }
  wire::write_file(path, bytes);
  return bytes.size();
}

void PhantomSpec::validate() const {
  if (height == 0 || width == 0) throw ContractError("phantom grid must be nonempty");
  if (!(axial_pitch_mm > 0.0f) || !(lateral_pitch_mm > 0.0f))
    throw ContractError("phantom pixel pitch must be positive");
  if (angles_deg.empty()) throw ContractError("phantom needs at least one angle");
  for (std::size_t i = 1; i < angles_deg.size(); ++i) {
    if (!(angles_deg[i] > angles_deg[i - 1]))
      throw ContractError("phantom angles must be strictly ascending");
  }
  if (!(dyn_max > dyn_min)) throw ContractError("phantom dynamic range is empty");
  if (!(speckle >= 0.0f && speckle <= 1.0f))
    throw ContractError("phantom speckle level must be in [0,1]");

  const float x_max = static_cast<float>(width) * lateral_pitch_mm;
  const float z_max = static_cast<float>(height) * axial_pitch_mm;
  for (const Scatterer& s : scatterers) {
    if (s.x_mm < 0 || s.x_mm > x_max || s.z_mm < 0 || s.z_mm > z_max)
      throw ContractError("scatterer outside the phantom grid");
    if (!(s.sigma_mm > 0.0f)) throw ContractError("scatterer footprint must be positive");
  }
  for (const AnechoicDisk& d : disks) {
    if (d.x_mm - d.radius_mm < 0 || d.x_mm + d.radius_mm > x_max ||
        d.z_mm - d.radius_mm < 0 || d.z_mm + d.radius_mm > z_max)
      throw ContractError("anechoic disk outside the phantom grid");
    if (!(d.radius_mm > 0.0f)) throw ContractError("disk radius must be positive");
  }
  if (shadow.enabled && (!(shadow.width_mm > 0.0f) || !(shadow.attenuation_db > 0.0f)))
    throw ContractError("shadow width and attenuation must be positive");
}

PhantomSpec default_phantom_spec() {
  PhantomSpec spec;
  spec.height = 64;
  spec.width = 64;
  spec.axial_pitch_mm = 0.2f;
  spec.lateral_pitch_mm = 0.2f;
  for (int i = 0; i < 8; ++i) spec.angles_deg.push_back(-16.0f + 32.0f * i / 7.0f);
  spec.background_db = -40.0f;
  spec.scatterers = {
      {4.0f, 3.2f, 0.0f, 0.35f},
      {8.8f, 4.8f, -4.0f, 0.30f},
      {6.4f, 7.6f, -2.0f, 0.40f},
      {3.0f, 9.6f, -8.0f, 0.30f},
  };
  spec.disks = {{10.0f, 9.8f, 1.4f, -60.0f}};
  spec.shadow = {true, 0.5f, 18.0f};
  spec.speckle = 0.15f;
  return spec;
}

PhantomSpec parse_phantom_spec(const std::string& text) {
  PhantomSpec spec;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;

  auto fail = [&](const std::string& why) {
    throw FormatError("phantom spec line " + std::to_string(lineno) + ": " + why);
  };

  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream toks(line);
    std::string key;
    if (!(toks >> key)) continue;  // blank line

    auto num = [&](const char* what) {
      float v;
      if (!(toks >> v)) fail(std::string("expected number for ") + what);
      return v;
    };

    if (key == "grid") {
      const float h = num("grid height"), w = num("grid width");
      if (h < 1 || w < 1) fail("grid dimensions must be at least 1");
      spec.height = static_cast<std::size_t>(h);
      spec.width = static_cast<std::size_t>(w);
    } else if (key == "pitch") {
      spec.axial_pitch_mm = num("axial pitch");
      spec.lateral_pitch_mm = num("lateral pitch");
    } else if (key == "angles") {
      spec.angles_deg.clear();
      std::string first;
      if (!(toks >> first)) fail("angles needs values");
      if (first == "span") {
        const float lo = num("span low"), hi = num("span high"), n = num("span count");
        if (n < 2) fail("angle span needs at least 2 views");
        for (int i = 0; i < static_cast<int>(n); ++i)
          spec.angles_deg.push_back(lo + (hi - lo) * i / (static_cast<int>(n) - 1));
      } else {
        try {
          spec.angles_deg.push_back(std::stof(first));
        } catch (const std::exception&) {
          fail("expected number for angle");
        }
        float v;
        while (toks >> v) spec.angles_deg.push_back(v);
      }
    } else if (key == "background") {
      spec.background_db = num("background level");
    } else if (key == "dyn") {
      spec.dyn_min = num("range minimum");
      spec.dyn_max = num("range maximum");
    } else if (key == "speckle") {
      spec.speckle = num("speckle level");
    } else if (key == "shadow") {
      spec.shadow.enabled = true;
      spec.shadow.width_mm = num("shadow width");
      spec.shadow.attenuation_db = num("shadow attenuation");
    } else if (key == "scatterer") {
      Scatterer s;
      s.x_mm = num("scatterer x");
      s.z_mm = num("scatterer z");
      s.amplitude_db = num("scatterer amplitude");
      s.sigma_mm = num("scatterer sigma");
      spec.scatterers.push_back(s);
    } else if (key == "disk") {
      AnechoicDisk d;
      d.x_mm = num("disk x");
      d.z_mm = num("disk z");
      d.radius_mm = num("disk radius");
      d.floor_db = num("disk floor");
      spec.disks.push_back(d);
    } else {
      fail("unknown keyword '" + key + "'");
    }
  }

  spec.validate();
  return spec;
}

PlaneWaveStack generate_phantom(const PhantomSpec& spec, std::uint64_t seed) {
  spec.validate();

  PlaneWaveStack stack;
  stack.height = spec.height;
  stack.width = spec.width;
  stack.angles_deg = spec.angles_deg;
  stack.axial_pitch_mm = spec.axial_pitch_mm;
  stack.lateral_pitch_mm = spec.lateral_pitch_mm;
  stack.dyn_min = spec.dyn_min;
  stack.dyn_max = spec.dyn_max;
  stack.tag = "phantom";

  const double background = db_to_lin(spec.background_db);
  const double shadow_depth = 1.0 - db_to_lin(-static_cast<double>(spec.shadow.attenuation_db));
  const double depth_span = static_cast<double>(spec.height) * spec.axial_pitch_mm;
  // unit-mean Rayleigh: sigma·sqrt(pi/2) = 1
  const double rayleigh_sigma = std::sqrt(2.0 / 3.14159265358979323846);

  for (std::size_t ai = 0; ai < spec.angles_deg.size(); ++ai) {
    const double tan_a = std::tan(spec.angles_deg[ai] * 3.14159265358979323846 / 180.0);
    // Independent speckle per view. The stream ids must differ well above
    // bit 0: the generator forces its increment odd, so raw consecutive
    // indices (2k, 2k+1) would collapse onto one stream.
    Pcg32 rng(seed, 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(ai) + 1));
    TensorF img = TensorF::matrix(spec.height, spec.width);

    for (std::size_t r = 0; r < spec.height; ++r) {
      const double z = (static_cast<double>(r) + 0.5) * spec.axial_pitch_mm;
      for (std::size_t c = 0; c < spec.width; ++c) {
        const double x = (static_cast<double>(c) + 0.5) * spec.lateral_pitch_mm;

        double lin = background;
        for (const Scatterer& s : spec.scatterers) {
          const double dx = x - s.x_mm, dz = z - s.z_mm;
          lin += db_to_lin(s.amplitude_db) *
                 std::exp(-(dx * dx + dz * dz) / (2.0 * s.sigma_mm * s.sigma_mm));
        }

        if (spec.shadow.enabled) {
          for (const Scatterer& s : spec.scatterers) {
            const double dz = z - s.z_mm;
            if (dz <= 0) continue;
            // the wedge tracks the propagation direction and widens with depth
            const double d = x - (s.x_mm + tan_a * dz);
            const double sigma_w = spec.shadow.width_mm * (1.0 + dz / depth_span);
            lin *= 1.0 - shadow_depth * std::exp(-d * d / (2.0 * sigma_w * sigma_w));
          }
        }

        for (const AnechoicDisk& dsk : spec.disks) {
          const double dx = x - dsk.x_mm, dz = z - dsk.z_mm;
          if (dx * dx + dz * dz <= static_cast<double>(dsk.radius_mm) * dsk.radius_mm)
            lin = db_to_lin(dsk.floor_db);
        }

        if (spec.speckle > 0.0f) {
          const double u = rng.next_double();
          const double rayleigh = rayleigh_sigma * std::sqrt(-2.0 * std::log(1.0 - u));
          lin *= (1.0 - spec.speckle) + spec.speckle * rayleigh;
        }

        const double db = 20.0 * std::log10(std::max(lin, 1e-12));
        img.at(r, c) = std::clamp(static_cast<float>(db), spec.dyn_min, spec.dyn_max);
      }
    }
    stack.images.push_back(std::move(img));
  }
  return stack;
}

CompressionReport compression_report(std::size_t weight_file_bytes,
                                     const PlaneWaveStack& stack, StackEncoding encoding) {
  if (weight_file_bytes == 0) throw ContractError("weight file size must be positive");
  stack.validate();
  const std::size_t per_sample = encoding == StackEncoding::float32 ? 4 : 1;
  CompressionReport report;
  report.model_bytes = weight_file_bytes;
  report.stack_bytes = stack.view_count() * stack.height * stack.width * per_sample;
  report.ratio = static_cast<double>(report.stack_bytes) / static_cast<double>(report.model_bytes);
  return report;
}

}  // namespace pwinr
