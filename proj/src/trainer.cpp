#include "pwinr/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "pwinr/encoding.hpp"
#include "pwinr/kernels.hpp"
#include "pwinr/psf.hpp"
#include "pwinr/tape.hpp"
#include "wire.hpp"

namespace pwinr {

namespace {

constexpr std::uint32_t kCheckpointFormatVersion = 1;

// Distinct stream for the shuffle rng so it cannot collide with weight
// initialization, which hashes the same user seed.
constexpr std::uint64_t kShuffleStream = 0x7062772d73687566ULL;

}  // namespace

void TrainConfig::validate(const PlaneWaveStack& stack) const {
  stack.validate();
  arch.validate();
  loss.validate();
  if (iterations == 0) throw ContractError("training needs at least one iteration");
  if (stripes_per_image == 0 || stripes_per_image > stack.height)
    throw ContractError("stripes per image must be in [1, image height]");
  if (!(learning_rate >= 0.0)) throw ContractError("learning rate must be nonnegative");
  if (!(lr_end > 0.0)) throw ContractError("learning-rate decay target must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw ContractError("adam betas must be in [0, 1)");
  if (!(epsilon > 0.0)) throw ContractError("adam epsilon must be positive");
  if (psf_size % 2 == 0 || psf_size == 0) throw ContractError("psf size must be odd");
  if (!(psf_axial_sigma > 0.0f) || !(psf_lateral_sigma > 0.0f))
    throw ContractError("psf sigmas must be positive");

  // every stripe interior must still fit the ssim window
  const std::size_t smallest = stack.height / stripes_per_image;
  if (smallest < loss.ssim_window || stack.width < loss.ssim_window)
    throw ContractError("stripe interior smaller than the ssim window");

  resolve_views(stack.view_count(), *this);  // throws if the subset is invalid
}

double decayed_lr(const TrainConfig& cfg, std::size_t iteration) {
  if (cfg.learning_rate <= 0.0) return 0.0;
  if (cfg.iterations <= 1) return cfg.learning_rate;
  const double progress =
      static_cast<double>(iteration) / static_cast<double>(cfg.iterations - 1);
  return cfg.learning_rate * std::pow(cfg.lr_end / cfg.learning_rate, progress);
}

std::size_t orthogonal_view(std::size_t total) {
  if (total == 0) throw ContractError("empty view list");
  return (total - 1) / 2;
}

std::vector<std::size_t> select_views(std::size_t total, std::size_t requested,
                                      bool holdout) {
  std::vector<std::size_t> eligible;
  eligible.reserve(total);
  const std::size_t skip = holdout ? orthogonal_view(total) : total;
  for (std::size_t i = 0; i < total; ++i) {
    if (i != skip) eligible.push_back(i);
  }
  if (requested == 0 || requested > eligible.size())
    throw ContractError("requested view count not in [1, available views]");
  if (requested == eligible.size()) return eligible;
  if (requested == 1) return {eligible.front()};

  const double stride = static_cast<double>(eligible.size() - 1) /
                        static_cast<double>(requested - 1);
  std::vector<std::size_t> out;
  out.reserve(requested);
  for (std::size_t i = 0; i < requested; ++i)
    out.push_back(eligible[static_cast<std::size_t>(std::llround(i * stride))]);
  return out;
}

std::vector<std::size_t> resolve_views(std::size_t total, const TrainConfig& cfg) {
  if (!cfg.view_list.empty()) {
    for (std::size_t i = 0; i < cfg.view_list.size(); ++i) {
      if (cfg.view_list[i] >= total) throw ContractError("view index out of range");
      if (i > 0 && cfg.view_list[i] <= cfg.view_list[i - 1])
        throw ContractError("view list must be strictly ascending");
      if (cfg.holdout_orthogonal && cfg.view_list[i] == orthogonal_view(total))
        throw ContractError("view list includes the held-out view");
    }
    return cfg.view_list;
  }
  const std::size_t available = total - (cfg.holdout_orthogonal ? 1 : 0);
  const std::size_t requested = cfg.view_count == 0 ? available : cfg.view_count;
  return select_views(total, requested, cfg.holdout_orthogonal);
}

std::vector<std::pair<std::size_t, std::size_t>> stripe_bounds(std::size_t height,
                                                               std::size_t stripes) {
  if (stripes == 0 || stripes > height)
    throw ContractError("stripe count must be in [1, height]");
  const std::size_t base = height / stripes;
  const std::size_t extra = height % stripes;
  std::vector<std::pair<std::size_t, std::size_t>> bounds;
  bounds.reserve(stripes);
  std::size_t r0 = 0;
  for (std::size_t s = 0; s < stripes; ++s) {
    const std::size_t rows = base + (s < extra ? 1 : 0);
    bounds.emplace_back(r0, r0 + rows);
    r0 += rows;
  }
  return bounds;
}

TrainState init_train_state(const PlaneWaveStack& stack, const TrainConfig& cfg) {
  cfg.validate(stack);
  TrainState state;
  state.params = init_params<float>(cfg.arch, cfg.seed);
  state.m_weights.reserve(state.params.weights.size());
  for (std::size_t s = 0; s < state.params.weights.size(); ++s) {
    state.m_weights.emplace_back(state.params.weights[s].shape());
    state.v_weights.emplace_back(state.params.weights[s].shape());
    state.m_biases.emplace_back(state.params.biases[s].shape());
    state.v_biases.emplace_back(state.params.biases[s].shape());
  }
  state.rng = Pcg32(cfg.seed, kShuffleStream);
  return state;
}

float train_step(TrainState& state, const PlaneWaveStack& stack, const TrainConfig& cfg) {
  const auto views = resolve_views(stack.view_count(), cfg);
  const std::size_t stripes = cfg.stripes_per_image;
  const std::size_t epoch_len = views.size() * stripes;

  // (re)shuffle at epoch boundaries
  if (state.iteration % epoch_len == 0 || state.epoch_order.size() != epoch_len) {
    state.epoch_order.resize(epoch_len);
    for (std::size_t i = 0; i < epoch_len; ++i)
      state.epoch_order[i] = static_cast<std::uint32_t>(i);
    for (std::size_t i = epoch_len - 1; i > 0; --i) {
      const std::uint32_t j = state.rng.next_below(static_cast<std::uint32_t>(i + 1));
      std::swap(state.epoch_order[i], state.epoch_order[j]);
    }
  }

  const std::uint32_t pick = state.epoch_order[state.iteration % epoch_len];
  const std::size_t angle_index = views[pick / stripes];
  const std::size_t stripe = pick % stripes;

  const auto kernel =
      make_kernel<float>(cfg.psf_axial_sigma, cfg.psf_lateral_sigma, cfg.psf_size);
  const auto [r0, r1] = stripe_bounds(stack.height, stripes)[stripe];
  const std::size_t halo_lo = std::min(r0, kernel.radius());
  const std::size_t halo_hi = std::min(stack.height - r1, kernel.radius());
  const std::size_t block_rows = (r1 + halo_hi) - (r0 - halo_lo);

  const float angle_norm = normalize_to_unit(stack.angles_deg[angle_index],
                                             stack.angles_deg.front(),
                                             stack.angles_deg.back());
  const auto coords =
      grid_coords<float>(stack.height, stack.width, r0 - halo_lo, r1 + halo_hi, angle_norm);
  auto encoded = positional_encode(coords, cfg.arch.embedding_size);

  const TensorF& full = stack.images[angle_index];
  TensorF gt = TensorF::matrix(r1 - r0, stack.width);
  for (std::size_t i = 0; i < gt.numel(); ++i) gt[i] = full[r0 * stack.width + i];
  gt = normalize_db(gt, stack.dyn_min, stack.dyn_max);

  float loss = 0.0f;
  TapedForward<float> taped;
  Tape<float> tape;
  try {
    auto gamma = tape.constant(std::move(encoded.gamma));
    taped = forward_tape(tape, state.params, gamma);
    auto image = tape.reshape(taped.output, block_rows, stack.width);
    auto rendered = render_tape(tape, image, kernel);
    auto interior = tape.crop_rows(rendered, halo_lo, halo_lo + (r1 - r0));
    auto loss_node = combined_loss_node(tape, interior, tape.constant(gt), cfg.loss);
    tape.backward(loss_node);
    loss = tape.value(loss_node)[0];
    if (!std::isfinite(loss)) throw NumericalError("loss is not finite");
  } catch (const NumericalError& e) {
    throw NumericalError("training step " + std::to_string(state.iteration) + " (angle " +
                         std::to_string(angle_index) + ", stripe " + std::to_string(stripe) +
                         "): " + e.what());
  }

  const std::size_t t = state.iteration + 1;
  const auto lr = static_cast<float>(decayed_lr(cfg, state.iteration));
  const auto beta1 = static_cast<float>(cfg.beta1);
  const auto beta2 = static_cast<float>(cfg.beta2);
  const auto bias1 = static_cast<float>(1.0 - std::pow(cfg.beta1, static_cast<double>(t)));
  const auto bias2 = static_cast<float>(1.0 - std::pow(cfg.beta2, static_cast<double>(t)));
  for (std::size_t s = 0; s < state.params.weights.size(); ++s) {
    kernels::adam_step(state.params.weights[s].data(), state.m_weights[s].data(),
                       state.v_weights[s].data(), tape.grad(taped.weight_nodes[s]).data(),
                       state.params.weights[s].numel(), lr, beta1, beta2,
                       static_cast<float>(cfg.epsilon), bias1, bias2);
    kernels::adam_step(state.params.biases[s].data(), state.m_biases[s].data(),
                       state.v_biases[s].data(), tape.grad(taped.bias_nodes[s]).data(),
                       state.params.biases[s].numel(), lr, beta1, beta2,
                       static_cast<float>(cfg.epsilon), bias1, bias2);
  }

  state.loss_history.push_back(loss);
  ++state.iteration;
  return loss;
}

TrainingReport train(TrainState& state, const PlaneWaveStack& stack, const TrainConfig& cfg) {
  cfg.validate(stack);
  const auto start = std::chrono::steady_clock::now();
  while (state.iteration < cfg.iterations) {
    train_step(state, stack, cfg);
    if (cfg.checkpoint_every > 0 && !cfg.checkpoint_path.empty() &&
        state.iteration % cfg.checkpoint_every == 0) {
      save_checkpoint(state, cfg.checkpoint_path);
    }
  }
  const auto end = std::chrono::steady_clock::now();

  TrainingReport report;
  report.loss_history = state.loss_history;
  report.wall_seconds = std::chrono::duration<double>(end - start).count();
  report.parameter_count = state.params.parameter_count();
  report.view_indices = resolve_views(stack.view_count(), cfg);
  return report;
}

std::pair<ModelParams<float>, TrainingReport> train(const PlaneWaveStack& stack,
                                                    const TrainConfig& cfg) {
  TrainState state = init_train_state(stack, cfg);
  TrainingReport report = train(state, stack, cfg);
  return {std::move(state.params), std::move(report)};
}

namespace {

void write_blob(wire::Writer& w, const TensorF& t) {
  for (std::size_t i = 0; i < t.numel(); ++i) w.f32(t[i]);
}

TensorF read_blob(wire::Reader& r, std::vector<std::size_t> shape) {
  TensorF t(std::move(shape));
  for (std::size_t i = 0; i < t.numel(); ++i) t[i] = r.f32();
  return t;
}

}  // namespace

std::size_t save_checkpoint(const TrainState& state, const std::string& path) {
  const ArchDescriptor& arch = state.params.arch;
  wire::Writer w;
  w.magic("PWCK");
  w.u32(kCheckpointFormatVersion);
  w.u32(arch.num_layers);
  w.u32(arch.width);
  w.u32(arch.skip_index);
  w.u32(arch.embedding_size);
  w.u64(state.params.seed);
  for (std::size_t s = 0; s < arch.stage_count(); ++s) {
    write_blob(w, state.params.weights[s]);
    write_blob(w, state.params.biases[s]);
  }
  for (std::size_t s = 0; s < arch.stage_count(); ++s) {
    write_blob(w, state.m_weights[s]);
    write_blob(w, state.v_weights[s]);
    write_blob(w, state.m_biases[s]);
    write_blob(w, state.v_biases[s]);
  }
  w.u64(state.iteration);
  w.u64(state.rng.state());
  w.u64(state.rng.inc());
  w.u64(state.loss_history.size());
  for (float v : state.loss_history) w.f32(v);
  w.u64(state.epoch_order.size());
  for (std::uint32_t v : state.epoch_order) w.u32(v);
  w.append_crc(8);
  wire::write_file(path, w.bytes());
  return w.size();
}

TrainState load_checkpoint(const std::string& path) {
  const auto bytes = wire::read_file(path);
  wire::Reader r(bytes);
  r.expect_magic("PWCK");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointFormatVersion)
    throw FormatError("unsupported checkpoint format version " + std::to_string(version));
  r.check_crc(8);

  TrainState state;
  ArchDescriptor arch;
  arch.num_layers = r.u32();
  arch.width = r.u32();
  arch.skip_index = r.u32();
  arch.embedding_size = r.u32();
  try {
    arch.validate();
  } catch (const ContractError& e) {
    throw FormatError(std::string("checkpoint carries an invalid descriptor: ") + e.what());
  }
  state.params.arch = arch;
  state.params.seed = r.u64();
  for (std::size_t s = 0; s < arch.stage_count(); ++s) {
    const auto [in, out] = arch.stage_dims(s);
    state.params.weights.push_back(read_blob(r, {in, out}));
    state.params.biases.push_back(read_blob(r, {out}));
  }
  for (std::size_t s = 0; s < arch.stage_count(); ++s) {
    const auto [in, out] = arch.stage_dims(s);
    state.m_weights.push_back(read_blob(r, {in, out}));
    state.v_weights.push_back(read_blob(r, {in, out}));
    state.m_biases.push_back(read_blob(r, {out}));
    state.v_biases.push_back(read_blob(r, {out}));
  }
  state.iteration = r.u64();
  const std::uint64_t rng_state = r.u64();
  const std::uint64_t rng_inc = r.u64();
  state.rng = Pcg32::from_state(rng_state, rng_inc);
  auto counted = [&r](const char* what) {
    const std::uint64_t n = r.u64();
    if (n > r.remaining() / 4)
      throw FormatError(std::string("declared ") + what + " count exceeds the file size");
    return static_cast<std::size_t>(n);
  };
  state.loss_history.resize(counted("loss history"));
  for (float& v : state.loss_history) v = r.f32();
  state.epoch_order.resize(counted("epoch order"));
  for (std::uint32_t& v : state.epoch_order) v = r.u32();
  r.u32();  // CRC, already checked
  r.expect_end();
  return state;
}

}  // namespace pwinr
