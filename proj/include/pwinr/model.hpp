#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pwinr/tape.hpp"
#include "pwinr/tensor.hpp"

namespace pwinr {

// Network shape: num_layers hidden layers of `width` neurons with ReLU, a
// skip connection feeding the frequency embedding into hidden layer
// skip_index (1-based) alongside the previous activation, and a linear
// scalar output layer.
struct ArchDescriptor {
  std::uint32_t num_layers = 8;
  std::uint32_t width = 256;
  std::uint32_t skip_index = 5;
  std::uint32_t embedding_size = 10;  // L

  std::size_t input_width() const { return 6 * static_cast<std::size_t>(embedding_size) + 3; }

  // Affine stages in order: hidden layers 1..num_layers, then the output
  // layer. Returns {in, out} of stage ℓ (0-based).
  std::pair<std::size_t, std::size_t> stage_dims(std::size_t l) const;
  std::size_t stage_count() const { return num_layers + 1; }

  std::size_t parameter_count() const;
  void validate() const;  // throws ContractError

  bool operator==(const ArchDescriptor&) const = default;
};

template <typename T>
struct ModelParams {
  ArchDescriptor arch;
  std::uint64_t seed = 0;
  std::vector<Tensor<T>> weights;  // stage order, each [in × out]
  std::vector<Tensor<T>> biases;   // stage order, each [out]

  std::size_t parameter_count() const;
};

// He-uniform weights (bound sqrt(6/fan_in)) from one seeded stream, zero
// biases. Deterministic per (arch, seed).
template <typename T>
ModelParams<T> init_params(const ArchDescriptor& arch, std::uint64_t seed);

// Plain forward pass: gamma [N × (6L+3)] -> intensities [N × 1].
template <typename T>
Tensor<T> forward(const ModelParams<T>& params, const Tensor<T>& gamma);

// Forward pass recorded on a tape, with every weight and bias registered
// as a gradient-carrying parameter node.
template <typename T>
struct TapedForward {
  std::vector<typename Tape<T>::NodeId> weight_nodes;
  std::vector<typename Tape<T>::NodeId> bias_nodes;
  typename Tape<T>::NodeId output = 0;  // [N × 1]
};

template <typename T>
TapedForward<T> forward_tape(Tape<T>& tape, const ModelParams<T>& params,
                             typename Tape<T>::NodeId gamma);

// Weight file: "PWIN" + version + descriptor + seed + float32 blobs + CRC.
// Round-trips byte-exactly. Returns the byte count written.
std::size_t save_weights(const ModelParams<float>& params, const std::string& path);
ModelParams<float> load_weights(const std::string& path);

}  // namespace pwinr
