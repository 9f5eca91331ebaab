#include "pwinr/objective.hpp"

#include <cmath>
#include <vector>

#include "pwinr/common.hpp"

namespace pwinr {

void LossConfig::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ContractError("loss lambda must be in [0,1]");
  if (ssim_window % 2 == 0 || ssim_window == 0)
    throw ContractError("ssim window must be odd");
  if (!(ssim_sigma > 0.0)) throw ContractError("ssim sigma must be positive");
  if (!(data_range > 0.0)) throw ContractError("ssim data range must be positive");
}

namespace {

template <typename T>
void check_pair(const Tensor<T>& pred, const Tensor<T>& gt) {
  if (pred.rank() != 2 || !pred.same_shape(gt))
    throw DimensionError("loss expects two H×W images of equal shape");
}

template <typename T>
std::vector<T> window_taps(const LossConfig& cfg) {
  std::vector<T> taps(cfg.ssim_window);
  const T sigma = static_cast<T>(cfg.ssim_sigma);
  const T c = static_cast<T>(cfg.ssim_window - 1) / T(2);
  T sum = T(0);
  for (std::size_t i = 0; i < taps.size(); ++i) {
    const T d = static_cast<T>(i) - c;
    taps[i] = std::exp(-d * d / (T(2) * sigma * sigma));
    sum += taps[i];
  }
  for (auto& t : taps) t /= sum;
  return taps;
}

}  // namespace

template <typename T>
typename Tape<T>::NodeId mse_loss_node(Tape<T>& tape, typename Tape<T>::NodeId pred,
                                       typename Tape<T>::NodeId gt) {
  check_pair(tape.value(pred), tape.value(gt));
  auto diff = tape.sub(pred, gt);
  return tape.mean_all(tape.mul(diff, diff));
}

template <typename T>
typename Tape<T>::NodeId ssim_map_node(Tape<T>& tape, typename Tape<T>::NodeId pred,
                                       typename Tape<T>::NodeId gt, const LossConfig& cfg) {
  cfg.validate();
  const Tensor<T>& p = tape.value(pred);
  check_pair(p, tape.value(gt));
  if (p.rows() < cfg.ssim_window || p.cols() < cfg.ssim_window)
    throw DimensionError("image smaller than the ssim window");

  const std::vector<T> w = window_taps<T>(cfg);
  const T c1 = static_cast<T>(cfg.k1 * cfg.data_range) * static_cast<T>(cfg.k1 * cfg.data_range);
  const T c2 = static_cast<T>(cfg.k2 * cfg.data_range) * static_cast<T>(cfg.k2 * cfg.data_range);

  // Windowed first and second moments via the separable Gaussian window.
  auto win = [&](typename Tape<T>::NodeId img) { return tape.conv2d_separable(img, w, w); };
  auto mu_p = win(pred);
  auto mu_g = win(gt);
  auto mu_pp = tape.mul(mu_p, mu_p);
  auto mu_gg = tape.mul(mu_g, mu_g);
  auto mu_pg = tape.mul(mu_p, mu_g);
  auto var_p = tape.sub(win(tape.mul(pred, pred)), mu_pp);
  auto var_g = tape.sub(win(tape.mul(gt, gt)), mu_gg);
  auto cov = tape.sub(win(tape.mul(pred, gt)), mu_pg);

  auto num = tape.mul(tape.add_scalar(tape.scale(mu_pg, T(2)), c1),
                      tape.add_scalar(tape.scale(cov, T(2)), c2));
  auto den = tape.mul(tape.add_scalar(tape.add(mu_pp, mu_gg), c1),
                      tape.add_scalar(tape.add(var_p, var_g), c2));
  return tape.div(num, den);
}

template <typename T>
typename Tape<T>::NodeId ssim_loss_node(Tape<T>& tape, typename Tape<T>::NodeId pred,
                                        typename Tape<T>::NodeId gt, const LossConfig& cfg) {
  // 1 − mean SSIM
  auto mean = tape.mean_all(ssim_map_node(tape, pred, gt, cfg));
  return tape.add_scalar(tape.scale(mean, T(-1)), T(1));
}

template <typename T>
typename Tape<T>::NodeId combined_loss_node(Tape<T>& tape, typename Tape<T>::NodeId pred,
                                            typename Tape<T>::NodeId gt,
                                            const LossConfig& cfg) {
  cfg.validate();
  const T lambda = static_cast<T>(cfg.lambda);
  auto ssim_part = tape.scale(ssim_loss_node(tape, pred, gt, cfg), lambda);
  auto mse_part = tape.scale(mse_loss_node(tape, pred, gt), T(1) - lambda);
  return tape.add(ssim_part, mse_part);
}

template <typename T>
T mse_loss(const Tensor<T>& pred, const Tensor<T>& gt) {
  Tape<T> tape;
  return tape.value(mse_loss_node(tape, tape.constant(pred), tape.constant(gt)))[0];
}

template <typename T>
Tensor<T> ssim_map(const Tensor<T>& pred, const Tensor<T>& gt, const LossConfig& cfg) {
  Tape<T> tape;
  return tape.value(ssim_map_node(tape, tape.constant(pred), tape.constant(gt), cfg));
}

template <typename T>
T ssim_loss(const Tensor<T>& pred, const Tensor<T>& gt, const LossConfig& cfg) {
  Tape<T> tape;
  return tape.value(ssim_loss_node(tape, tape.constant(pred), tape.constant(gt), cfg))[0];
}

template <typename T>
T combined_loss(const Tensor<T>& pred, const Tensor<T>& gt, const LossConfig& cfg) {
  Tape<T> tape;
  return tape.value(combined_loss_node(tape, tape.constant(pred), tape.constant(gt), cfg))[0];
}

#define PWINR_INSTANTIATE_OBJECTIVE(T)                                                       \
  template Tape<T>::NodeId mse_loss_node<T>(Tape<T>&, Tape<T>::NodeId, Tape<T>::NodeId);    \
  template Tape<T>::NodeId ssim_map_node<T>(Tape<T>&, Tape<T>::NodeId, Tape<T>::NodeId,     \
                                            const LossConfig&);                             \
  template Tape<T>::NodeId ssim_loss_node<T>(Tape<T>&, Tape<T>::NodeId, Tape<T>::NodeId,    \
                                             const LossConfig&);                            \
  template Tape<T>::NodeId combined_loss_node<T>(Tape<T>&, Tape<T>::NodeId,                 \
                                                 Tape<T>::NodeId, const LossConfig&);       \
  template T mse_loss<T>(const Tensor<T>&, const Tensor<T>&);                               \
  template Tensor<T> ssim_map<T>(const Tensor<T>&, const Tensor<T>&, const LossConfig&);    \
  template T ssim_loss<T>(const Tensor<T>&, const Tensor<T>&, const LossConfig&);           \
  template T combined_loss<T>(const Tensor<T>&, const Tensor<T>&, const LossConfig&)

PWINR_INSTANTIATE_OBJECTIVE(float);
PWINR_INSTANTIATE_OBJECTIVE(double);

#undef PWINR_INSTANTIATE_OBJECTIVE

}  // namespace pwinr
