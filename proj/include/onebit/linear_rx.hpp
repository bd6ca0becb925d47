#pragma once

// Linear first-stage receivers: conventional (MRC, ZF, MMSE), quantization
// aware (AQNM-MMSE, WFQ) and Bussgang-based (BMRC, BZF, BMMSE) combiners,
// followed by per-user equalization, norm rescaling and slicing.

#include <array>
#include <optional>
#include <string_view>

#include "onebit/model.hpp"

namespace onebit {

enum class CombinerKind { kMrc, kZf, kMmse, kAqnmMmse, kWfq, kBmrc, kBzf, kBmmse };

inline constexpr std::array<CombinerKind, 8> kAllCombinerKinds = {
    CombinerKind::kMrc,      CombinerKind::kZf,  CombinerKind::kMmse,
    CombinerKind::kAqnmMmse, CombinerKind::kWfq, CombinerKind::kBmrc,
    CombinerKind::kBzf,      CombinerKind::kBmmse};

/// Inverse signal-to-quantization-noise ratio of a one-bit ADC.
inline constexpr double kAqnmAlpha = 0.3634;
inline constexpr double kAqnmKappa = 1.0 - kAqnmAlpha;

std::string_view to_string(CombinerKind kind);
std::optional<CombinerKind> parse_combiner_kind(std::string_view name);
bool is_bussgang(CombinerKind kind);

/// Sigma_r = H H^H + N0 I.
CMatrix received_covariance(const CMatrix& h, double n0);

/// Arcsine law: E[y y^H] = (2/pi) arcsin(D^-1/2 Sigma_r D^-1/2), with the
/// arcsine applied separately to real and imaginary parts.
CMatrix arcsine_law(const CMatrix& sigma_r);

/// Bussgang linearization y = A x + n of the one-bit channel.
struct BussgangModel {
  CMatrix received_cov;       // Sigma_r
  RVector gain;               // diagonal of V = sqrt(2/pi) diag(Sigma_r)^-1/2
  CMatrix effective_channel;  // A = V H
  CMatrix noise_cov;          // Sigma_n
};

/// Requires every diagonal entry of Sigma_r to be positive; throws
/// SingularMatrixError otherwise (only possible when N0 = 0).
BussgangModel bussgang_model(const CMatrix& h, double n0);

struct Combiner {
  CombinerKind kind;
  CMatrix w;                  // K x N
  CMatrix effective_channel;  // H for conventional kinds, A for Bussgang kinds
  CVector equalizer;          // per-user divisor applied after W y
};

/// Throws SingularMatrixError if a required inverse is (numerically) singular.
Combiner build_combiner(CombinerKind kind, const CMatrix& h, double n0);

struct LinearDetection {
  CVector soft;     // rescaled estimate, ||soft||^2 = K
  CVector symbols;  // sliced constellation points
};

/// sqrt(K) v / ||v||; returns v unchanged when ||v|| == 0.
CVector rescale_to_users(const CVector& v);

LinearDetection detect_linear(const Combiner& combiner, const CVector& y,
                              const Constellation& constellation);

/// Batched variant: column b of `y` is one received vector. Returns the
/// rescaled soft estimates (K x B); slicing is left to the caller.
CMatrix detect_linear_soft(const Combiner& combiner, const CMatrix& y);

}  // namespace onebit
