#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pwinr/common.hpp"
#include "pwinr/data_io.hpp"
#include "pwinr/model.hpp"
#include "pwinr/objective.hpp"
#include "pwinr/tensor.hpp"

namespace pwinr {

// Optimization settings. One training step fits one horizontal stripe of
// one view: the model is evaluated on the stripe plus a halo of
// kernel-radius rows so the rendering convolution is exact on the stripe
// interior, and the loss compares the interior against the stored image.
struct TrainConfig {
  std::size_t iterations = 10'000;
  std::size_t stripes_per_image = 10;
  double learning_rate = 5e-4;
  double lr_end = 5e-5;  // exponential decay target at the final iteration
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;

  // View subset: an explicit index list wins; otherwise view_count views
  // are sampled at uniform stride (0 = every eligible view). With
  // holdout_orthogonal the 0°-nearest view is excluded from training.
  std::vector<std::size_t> view_list;
  std::size_t view_count = 0;
  bool holdout_orthogonal = false;

  std::size_t checkpoint_every = 0;  // steps between checkpoints; 0 = never
  std::string checkpoint_path;

  ArchDescriptor arch;
  LossConfig loss;
  float psf_axial_sigma = 2.0f;
  float psf_lateral_sigma = 4.0f;
  std::size_t psf_size = 11;

  void validate(const PlaneWaveStack& stack) const;  // throws ContractError
};

// Learning rate after `iteration` completed steps: learning_rate decaying
// exponentially to lr_end at the last step.
double decayed_lr(const TrainConfig& cfg, std::size_t iteration);

// Index of the 0°-nearest view in a symmetric ascending angle span: the
// middle entry (lower of the two for even counts).
std::size_t orthogonal_view(std::size_t total);

// `requested` view indices sampled at uniform stride over the eligible
// views (all of them, minus the orthogonal one under holdout). Pure
// function of its arguments; round-to-nearest keeps both endpoints.
std::vector<std::size_t> select_views(std::size_t total, std::size_t requested, bool holdout);

// The view subset a config picks from a stack of `total` views.
std::vector<std::size_t> resolve_views(std::size_t total, const TrainConfig& cfg);

// Interior row ranges [r0, r1) of `stripes` horizontal stripes covering
// `height` rows exactly once; earlier stripes absorb the remainder.
std::vector<std::pair<std::size_t, std::size_t>> stripe_bounds(std::size_t height,
                                                               std::size_t stripes);

// Everything a resumed run needs: parameters, Adam moments, step counter,
// shuffle rng, the running loss record, and the in-progress epoch order.
struct TrainState {
  ModelParams<float> params;
  std::vector<TensorF> m_weights, v_weights;  // per stage, shaped like weights
  std::vector<TensorF> m_biases, v_biases;
  std::size_t iteration = 0;
  Pcg32 rng;
  std::vector<float> loss_history;
  std::vector<std::uint32_t> epoch_order;  // (view, stripe) pairs, current epoch
};

TrainState init_train_state(const PlaneWaveStack& stack, const TrainConfig& cfg);

// One optimization step; returns the recorded loss. Throws NumericalError
// naming (iteration, angle, stripe) if the loss stops being finite.
float train_step(TrainState& state, const PlaneWaveStack& stack, const TrainConfig& cfg);

struct TrainingReport {
  std::vector<float> loss_history;
  double wall_seconds = 0.0;
  std::size_t parameter_count = 0;
  std::vector<std::size_t> view_indices;
};

// Runs state forward to cfg.iterations, writing periodic checkpoints when
// configured. Resuming a loaded state with the same config reproduces the
// uninterrupted trajectory exactly.
TrainingReport train(TrainState& state, const PlaneWaveStack& stack, const TrainConfig& cfg);

// Fresh-state convenience wrapper.
std::pair<ModelParams<float>, TrainingReport> train(const PlaneWaveStack& stack,
                                                    const TrainConfig& cfg);

// Checkpoint file: "PWCK" + version + descriptor + seed + weights + Adam
// moments + iteration + rng state + loss history + epoch order + CRC32.
std::size_t save_checkpoint(const TrainState& state, const std::string& path);
TrainState load_checkpoint(const std::string& path);

}  // namespace pwinr
