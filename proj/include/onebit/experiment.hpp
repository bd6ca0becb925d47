#pragma once

// Monte Carlo drivers: BER sweeps over SNR for any stage-1 receiver with an
// optional nearest-neighbor second stage, and per-vector timing runs.

#include <cstdint>
#include <optional>
#include <vector>

#include "onebit/config.hpp"
#include "onebit/model.hpp"
#include "onebit/obmnet.hpp"
#include "onebit/report.hpp"

namespace onebit {

/// sqrt(1 - tau^2) H + tau E with E i.i.d. CN(0, 1). E is drawn even when
/// tau = 0 so the generator advances identically for every tau.
CMatrix perturb_csi(const CMatrix& h, double tau, Rng& rng);

/// Gray-coded bit errors between two real-lifted symbol vectors whose entries
/// are constellation levels.
std::uint64_t bit_errors(const RVector& decided, const RVector& truth,
                         const Constellation& constellation);

/// Bits carried by one K-user symbol vector.
std::size_t bits_per_vector(const Constellation& constellation, int users);

/// One row per (SNR, receiver) for stage 1 (M = 1), plus one per stage-2 M.
/// Loads OBMNet step sizes from cfg.obmnet_params when needed.
BerReport run_ber(const ExperimentConfig& cfg);

/// Same, with the OBMNet step sizes given directly.
BerReport run_ber(const ExperimentConfig& cfg, const std::optional<ObmnetParams>& params);

/// Median per-vector detection time for every receiver and batch size. Each
/// repetition draws one channel shared by at least 250 received vectors,
/// builds the combiner (or lifts the channel for OBMNet) once, then detects
/// the vectors in batches; all of that is timed.
std::vector<TimingRow> run_timing(const ExperimentConfig& cfg);
std::vector<TimingRow> run_timing(const ExperimentConfig& cfg,
                                  const std::optional<ObmnetParams>& params);

}  // namespace onebit
