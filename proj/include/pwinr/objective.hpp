#pragma once

#include <cstddef>

#include "pwinr/tape.hpp"
#include "pwinr/tensor.hpp"

namespace pwinr {

// Training-loss configuration: loss = lambda·(1 − mean SSIM) + (1−lambda)·MSE.
// SSIM uses a Gaussian window and the standard stabilizing constants
// C1 = (k1·R)², C2 = (k2·R)² for data range R.
struct LossConfig {
  double lambda = 0.75;
  std::size_t ssim_window = 11;
  double ssim_sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double data_range = 1.0;

  void validate() const;  // throws ContractError
};

// Tape builders; pred and gt are H×W image nodes on the same tape, and the
// result is a scalar (or H×W map) node. Gradients flow through pred/gt if
// those nodes carry them.
template <typename T>
typename Tape<T>::NodeId mse_loss_node(Tape<T>& tape, typename Tape<T>::NodeId pred,
                                       typename Tape<T>::NodeId gt);

template <typename T>
typename Tape<T>::NodeId ssim_map_node(Tape<T>& tape, typename Tape<T>::NodeId pred,
                                       typename Tape<T>::NodeId gt, const LossConfig& cfg);

template <typename T>
typename Tape<T>::NodeId ssim_loss_node(Tape<T>& tape, typename Tape<T>::NodeId pred,
                                        typename Tape<T>::NodeId gt, const LossConfig& cfg);

template <typename T>
typename Tape<T>::NodeId combined_loss_node(Tape<T>& tape, typename Tape<T>::NodeId pred,
                                            typename Tape<T>::NodeId gt,
                                            const LossConfig& cfg);

// Plain evaluations built on the same graph code, so the two paths cannot
// drift apart.
template <typename T>
T mse_loss(const Tensor<T>& pred, const Tensor<T>& gt);

template <typename T>
Tensor<T> ssim_map(const Tensor<T>& pred, const Tensor<T>& gt, const LossConfig& cfg);

template <typename T>
T ssim_loss(const Tensor<T>& pred, const Tensor<T>& gt, const LossConfig& cfg);

template <typename T>
T combined_loss(const Tensor<T>& pred, const Tensor<T>& gt, const LossConfig& cfg);

}  // namespace pwinr
