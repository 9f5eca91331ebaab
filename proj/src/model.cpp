#include "pwinr/model.hpp"

#include <cmath>
#include <utility>

#include "pwinr/common.hpp"
#include "pwinr/kernels.hpp"
#include "wire.hpp"

namespace pwinr {

namespace {
constexpr std::uint32_t kWeightFormatVersion = 1;
}

std::pair<std::size_t, std::size_t> ArchDescriptor::stage_dims(std::size_t l) const {
  const std::size_t in_w = input_width();
  if (l == num_layers) return {width, 1};  // linear output head
  std::size_t in = l == 0 ? in_w : width;
  if (l + 1 == skip_index) in += in_w;  // hidden layer skip_index sees [h | gamma]
  return {in, width};
}

std::size_t ArchDescriptor::parameter_count() const {
  std::size_t total = 0;
  for (std::size_t l = 0; l < stage_count(); ++l) {
    const auto [in, out] = stage_dims(l);
    total += in * out + out;
  }
  return total;
}

void ArchDescriptor::validate() const {
  if (width < 1) throw ContractError("arch width must be >= 1");
  if (num_layers < 2) throw ContractError("arch needs at least 2 hidden layers");
  if (skip_index <= 1 || skip_index > num_layers)
    throw ContractError("arch skip index must satisfy 1 < skip <= num_layers");
  if (embedding_size < 1) throw ContractError("arch embedding size must be >= 1");
}

template <typename T>
std::size_t ModelParams<T>::parameter_count() const {
  std::size_t total = 0;
  for (const auto& w : weights) total += w.numel();
  for (const auto& b : biases) total += b.numel();
  return total;
}

template <typename T>
ModelParams<T> init_params(const ArchDescriptor& arch, std::uint64_t seed) {
  arch.validate();
  ModelParams<T> params;
  params.arch = arch;
  params.seed = seed;
  Pcg32 rng(seed);
  for (std::size_t l = 0; l < arch.stage_count(); ++l) {
    const auto [in, out] = arch.stage_dims(l);
    const T bound = std::sqrt(T(6) / static_cast<T>(in));
    Tensor<T> w = Tensor<T>::matrix(in, out);
    for (std::size_t i = 0; i < w.numel(); ++i)
      w[i] = (T(2) * rng.next_uniform<T>() - T(1)) * bound;
    params.weights.push_back(std::move(w));
    params.biases.emplace_back(std::vector<std::size_t>{out});
  }
  return params;
}

namespace {

template <typename T>
void check_gamma(const ModelParams<T>& params, const Tensor<T>& gamma) {
  if (gamma.rank() != 2 || gamma.cols() != params.arch.input_width())
    throw DimensionError("encoded batch width does not match the architecture");
  if (params.weights.size() != params.arch.stage_count() ||
      params.biases.size() != params.arch.stage_count())
    throw DimensionError("parameter list does not match the architecture");
  for (std::size_t l = 0; l < params.arch.stage_count(); ++l) {
    const auto [in, out] = params.arch.stage_dims(l);
    if (params.weights[l].rows() != in || params.weights[l].cols() != out ||
        params.biases[l].numel() != out)
      throw DimensionError("parameter shapes do not match the architecture");
  }
}

}  // namespace

template <typename T>
Tensor<T> forward(const ModelParams<T>& params, const Tensor<T>& gamma) {
  check_gamma(params, gamma);
  const ArchDescriptor& arch = params.arch;
  const std::size_t n = gamma.rows();

  Tensor<T> h = gamma;
  for (std::size_t l = 0; l < arch.stage_count(); ++l) {
    if (l + 1 == arch.skip_index) {
      // [h | gamma]
      const std::size_t ch = h.cols(), cg = gamma.cols();
      Tensor<T> cat = Tensor<T>::matrix(n, ch + cg);
      for (std::size_t r = 0; r < n; ++r) {
        const T* ph = h.data() + r * ch;
        const T* pg = gamma.data() + r * cg;
        T* dst = cat.data() + r * (ch + cg);
        for (std::size_t c = 0; c < ch; ++c) dst[c] = ph[c];
        for (std::size_t c = 0; c < cg; ++c) dst[ch + c] = pg[c];
      }
      h = std::move(cat);
    }
    const auto [in, out] = arch.stage_dims(l);
    Tensor<T> y = Tensor<T>::matrix(n, out);
    kernels::affine(h.data(), params.weights[l].data(), params.biases[l].data(), y.data(),
                    n, in, out);
    if (l != arch.stage_count() - 1)
      kernels::relu(y.data(), y.data(), y.numel());
    h = std::move(y);
  }
  ensure_finite(h, "model forward");
  return h;
}

template <typename T>
TapedForward<T> forward_tape(Tape<T>& tape, const ModelParams<T>& params,
                             typename Tape<T>::NodeId gamma) {
  check_gamma(params, tape.value(gamma));
  const ArchDescriptor& arch = params.arch;

  TapedForward<T> result;
  auto h = gamma;
  for (std::size_t l = 0; l < arch.stage_count(); ++l) {
    if (l + 1 == arch.skip_index) h = tape.concat_cols(h, gamma);
    auto w = tape.parameter(params.weights[l]);
    auto b = tape.parameter(params.biases[l]);
    result.weight_nodes.push_back(w);
    result.bias_nodes.push_back(b);
    h = tape.affine(h, w, b);
    if (l != arch.stage_count() - 1) h = tape.relu(h);
  }
  result.output = h;
  return result;
}

std::size_t save_weights(const ModelParams<float>& params, const std::string& path) {
  params.arch.validate();
  wire::Writer out;
  out.magic("PWIN");
  out.u32(kWeightFormatVersion);
  out.u32(params.arch.num_layers);
  out.u32(params.arch.width);
  out.u32(params.arch.skip_index);
  out.u32(params.arch.embedding_size);
  out.u64(params.seed);
  for (std::size_t l = 0; l < params.arch.stage_count(); ++l) {
    for (std::size_t i = 0; i < params.weights[l].numel(); ++i)
      out.f32(params.weights[l][i]);
    for (std::size_t i = 0; i < params.biases[l].numel(); ++i) out.f32(params.biases[l][i]);
  }
  out.append_crc(8);  // descriptor, seed, and blobs
  wire::write_file(path, out.bytes());
  return out.size();
}

ModelParams<float> load_weights(const std::string& path) {
  const auto bytes = wire::read_file(path);
  wire::Reader in(bytes);
  in.expect_magic("PWIN");
  if (in.u32() != kWeightFormatVersion) throw FormatError("unsupported weight version");

  ModelParams<float> params;
  params.arch.num_layers = in.u32();
  params.arch.width = in.u32();
  params.arch.skip_index = in.u32();
  params.arch.embedding_size = in.u32();
  try {
    params.arch.validate();
  } catch (const ContractError& e) {
    throw FormatError(std::string("weight file carries an invalid descriptor: ") + e.what());
  }
  in.check_crc(8);
  params.seed = in.u64();
  for (std::size_t l = 0; l < params.arch.stage_count(); ++l) {
    const auto [din, dout] = params.arch.stage_dims(l);
    Tensor<float> w = Tensor<float>::matrix(din, dout);
    for (std::size_t i = 0; i < w.numel(); ++i) w[i] = in.f32();
    params.weights.push_back(std::move(w));
    Tensor<float> b({dout});
    for (std::size_t i = 0; i < dout; ++i) b[i] = in.f32();
    params.biases.push_back(std::move(b));
  }
  in.u32();  // checksum, already verified
  in.expect_end();
  return params;
}

template struct ModelParams<float>;
template struct ModelParams<double>;
template ModelParams<float> init_params<float>(const ArchDescriptor&, std::uint64_t);
template ModelParams<double> init_params<double>(const ArchDescriptor&, std::uint64_t);
template Tensor<float> forward<float>(const ModelParams<float>&, const Tensor<float>&);
template Tensor<double> forward<double>(const ModelParams<double>&, const Tensor<double>&);
template TapedForward<float> forward_tape<float>(Tape<float>&, const ModelParams<float>&,
                                                 Tape<float>::NodeId);
template TapedForward<double> forward_tape<double>(Tape<double>&, const ModelParams<double>&,
                                                   Tape<double>::NodeId);

}  // namespace pwinr
