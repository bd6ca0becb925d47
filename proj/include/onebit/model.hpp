#pragma once

// System model for uplink massive MIMO with one-bit ADCs: constellations,
// Rayleigh channels, the sign quantizer and the complex-to-real lifting used
// by every detector in this library.

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace onebit {

using cd = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

/// All randomness flows through an explicitly passed engine.
using Rng = std::mt19937_64;

enum class Modulation { kQpsk, kQam16 };

std::string_view to_string(Modulation m);
/// Accepts "qpsk" and "16qam" (case-insensitive, "16-qam" also allowed).
Modulation parse_modulation(std::string_view name);

/// Square constellation with unit average symbol energy.
///
/// The real and imaginary parts of every point take values in `levels`
/// (ascending). `boundaries` holds the decision thresholds, one between each
/// pair of adjacent levels.
struct Constellation {
  Modulation kind;
  std::vector<cd> points;
  std::vector<double> levels;
  std::vector<double> boundaries;

  /// Gray-coded bits carried by one real coordinate.
  int bits_per_level() const;
  std::size_t level_index(double level) const;

  /// Nearest real level; an exact tie goes to the larger level.
  double slice(double v) const;
  cd slice(cd v) const;
  /// Gray label of `levels[index]`, most significant bit first.
  std::uint32_t gray_label(std::size_t index) const;
};

Constellation make_constellation(Modulation kind);

/// N x K complex channel together with its 2N x 2K real lifting.
class ChannelMatrix {
 public:
  explicit ChannelMatrix(CMatrix h);

  const CMatrix& complex() const { return complex_; }
  const RMatrix& real() const { return real_; }
  int users() const { return static_cast<int>(complex_.cols()); }
  int antennas() const { return static_cast<int>(complex_.rows()); }

 private:
  CMatrix complex_;
  RMatrix real_;
};

/// [[Re A, -Im A], [Im A, Re A]]
RMatrix lift_matrix(const CMatrix& a);
/// [Re v; Im v]
RVector lift_vector(const CVector& v);
CVector unlift_vector(const RVector& v);

/// Matrix with i.i.d. CN(0, variance) entries.
CMatrix complex_gaussian(Eigen::Index rows, Eigen::Index cols,
                         double variance, Rng& rng);

ChannelMatrix sample_channel(int users, int antennas, std::uint64_t seed);
ChannelMatrix sample_channel(int users, int antennas, Rng& rng);

/// sign(Re r) + j sign(Im r), with sign(0) = +1.
CVector one_bit_quantize(const CVector& r);
RVector one_bit_quantize(const RVector& r);

struct TxRxSample {
  CVector x;  // transmitted symbols
  CVector z;  // noise
  CVector r;  // unquantized received signal
  CVector y;  // one-bit output, entries in {+-1 +-j}
  double n0 = 1.0;

  double snr() const { return 1.0 / n0; }
};

CVector random_symbols(const Constellation& c, int users, Rng& rng);
TxRxSample transmit(const CMatrix& h, const CVector& x, double n0, Rng& rng);

inline double n0_from_snr_db(double snr_db) {
  return std::pow(10.0, -snr_db / 10.0);
}

/// Mixes a master seed with stream coordinates (splitmix64 finalizer), so
/// every trial owns an independent, reproducible engine.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                          std::uint64_t b = 0, std::uint64_t c = 0);

}  // namespace onebit
