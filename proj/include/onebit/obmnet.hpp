#pragma once

// OBMNet: gradient descent on the logistic one-bit likelihood, unrolled into
// L layers whose only trainable parameters are the per-layer step sizes.
// Layer l maps x -> x + alpha_l G^T sigma(-G x) with G = diag(y) H_hat; the
// c sqrt(2 rho) factor is dropped because the output is renormalized.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "onebit/model.hpp"

namespace onebit {

struct ObmnetParams {
  std::vector<double> alphas;
  Modulation modulation = Modulation::kQpsk;
  int users = 0;
  int antennas = 0;
  // training metadata; zero for parameters loaded from file
  std::uint64_t seed = 0;
  std::size_t batches = 0;

  std::size_t layers() const { return alphas.size(); }
};

/// x^(L) starting from x^(0) = 0. `g` is 2N x 2K.
RVector obmnet_forward(const RMatrix& g, std::span<const double> alphas);

/// Norms below this leave the output untouched.
inline constexpr double kDegenerateNorm = 1e-12;

/// sqrt(K) x / ||x||, or x itself when ||x|| < kDegenerateNorm.
RVector normalize_output(const RVector& x, int users);

double reconstruction_loss(const RVector& estimate, const RVector& target);

struct LossGradient {
  double loss = 0.0;
  std::vector<double> grad;  // d loss / d alpha_l
};

/// Loss ||normalize(forward(G)) - target||^2 and its exact gradient with
/// respect to the step sizes, by reverse accumulation through the layers.
LossGradient loss_and_grad_alphas(const RMatrix& g,
                                  std::span<const double> alphas,
                                  const RVector& target);

std::vector<double> grad_alphas(const RMatrix& g, std::span<const double> alphas,
                                const RVector& target);

struct TrainConfig {
  int users = 4;
  int antennas = 32;
  Modulation modulation = Modulation::kQpsk;
  int layers = 10;
  std::size_t batch_size = 1000;
  double learning_rate = 1e-2;
  std::size_t num_batches = 10000;
  double snr_low_db = 0.0;
  double snr_high_db = 15.0;
  std::uint64_t seed = 1;
  double initial_alpha = 0.1;
  // Stop once the mean loss of a 100-batch window improves on the previous
  // window by less than 0.1%.
  bool early_stop = true;
  std::size_t early_stop_window = 100;
  double early_stop_tolerance = 1e-3;
};

/// Defaults for a modulation: [0, 15] dB training SNR for QPSK, [10, 30] dB
/// for 16-QAM.
TrainConfig default_train_config(Modulation modulation, int users, int antennas,
                                 int layers);

void validate(const TrainConfig& cfg);

struct TrainProgress {
  std::size_t batch = 0;
  double loss = 0.0;
  double window_mean = 0.0;
};

/// Adam (beta1 0.9, beta2 0.999, eps 1e-8) on the mean batch loss; every
/// sample draws a fresh channel, symbol vector and noise. Deterministic for a
/// given seed. Throws TrainingDiverged if the running mean loss exceeds ten
/// times the first batch loss.
ObmnetParams train(const TrainConfig& cfg,
                   const std::function<void(const TrainProgress&)>& on_batch = {});

/// Normalized soft outputs for a batch sharing one channel estimate.
/// `y` is 2N x B (real-lifted one-bit observations, one column per vector);
/// returns 2K x B.
RMatrix obmnet_soft_batch(const RMatrix& h_hat_real, const RMatrix& y,
                          std::span<const double> alphas);

/// Sliced real-lifted decisions (2K x B).
RMatrix detect_batch(const RMatrix& h_hat_real, const RMatrix& y,
                     const ObmnetParams& params,
                     const Constellation& constellation);

/// Text format: header `obmnet v1 <modulation> K=<K> N=<N> L=<L>` followed by
/// one step size per line.
ObmnetParams load_params(const std::filesystem::path& path);
void save_params(const ObmnetParams& params, const std::filesystem::path& path);

}  // namespace onebit
