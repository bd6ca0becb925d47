#include "onebit/model.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace onebit {

std::string_view to_string(Modulation m) {
  switch (m) {
    case Modulation::kQpsk:
      return "qpsk";
    case Modulation::kQam16:
      return "16qam";
  }
  return "unknown";
}

Modulation parse_modulation(std::string_view name) {
  std::string s;
  for (char ch : name) {
    if (ch == '-' || ch == '_') continue;
    s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  }
  if (s == "qpsk") return Modulation::kQpsk;
  if (s == "16qam" || s == "qam16") return Modulation::kQam16;
  throw std::invalid_argument("unknown modulation '" + std::string(name) +
                              "' (expected qpsk or 16qam)");
}

Constellation make_constellation(Modulation kind) {
  Constellation c;
  c.kind = kind;
  if (kind == Modulation::kQpsk) {
    const double a = 1.0 / std::sqrt(2.0);
    c.levels = {-a, a};
    c.boundaries = {0.0};
  } else {
    const double a = 1.0 / std::sqrt(10.0);
    c.levels = {-3 * a, -a, a, 3 * a};
    c.boundaries = {-2 * a, 0.0, 2 * a};
  }
  for (double re : c.levels) {
    for (double im : c.levels) c.points.emplace_back(re, im);
  }
  return c;
}

int Constellation::bits_per_level() const {
  return levels.size() == 2 ? 1 : 2;
}

std::size_t Constellation::level_index(double level) const {
  auto it = std::find(levels.begin(), levels.end(), level);
  if (it == levels.end()) {
    throw std::invalid_argument("value is not a constellation level");
  }
  return static_cast<std::size_t>(it - levels.begin());
}

double Constellation::slice(double v) const {
  // Levels are separated by the boundaries; v == boundary picks the upper level.
  std::size_t i = 0;
  while (i < boundaries.size() && v >= boundaries[i]) ++i;
  return levels[i];
}

cd Constellation::slice(cd v) const {
  return {slice(v.real()), slice(v.imag())};
}

std::uint32_t Constellation::gray_label(std::size_t index) const {
  const auto i = static_cast<std::uint32_t>(index);
  return i ^ (i >> 1);
}

ChannelMatrix::ChannelMatrix(CMatrix h) : complex_(std::move(h)) {
  if (complex_.rows() < complex_.cols() || complex_.cols() < 1) {
    throw std::invalid_argument("channel must satisfy 1 <= K <= N");
  }
  real_ = lift_matrix(complex_);
}

RMatrix lift_matrix(const CMatrix& a) {
  const Eigen::Index n = a.rows();
  const Eigen::Index k = a.cols();
  RMatrix out(2 * n, 2 * k);
  out.topLeftCorner(n, k) = a.real();
  out.topRightCorner(n, k) = -a.imag();
  out.bottomLeftCorner(n, k) = a.imag();
  out.bottomRightCorner(n, k) = a.real();
  return out;
}

RVector lift_vector(const CVector& v) {
  RVector out(2 * v.size());
  out.head(v.size()) = v.real();
  out.tail(v.size()) = v.imag();
  return out;
}

CVector unlift_vector(const RVector& v) {
  if (v.size() % 2 != 0) {
    throw std::invalid_argument("real vector must have even length");
  }
  const Eigen::Index k = v.size() / 2;
  CVector out(k);
  for (Eigen::Index i = 0; i < k; ++i) out(i) = cd(v(i), v(k + i));
  return out;
}

CMatrix complex_gaussian(Eigen::Index rows, Eigen::Index cols, double variance,
                         Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const double s = std::sqrt(variance / 2.0);
  CMatrix out(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double re = normal(rng);
      const double im = normal(rng);
      out(i, j) = cd(s * re, s * im);
    }
  }
  return out;
}

ChannelMatrix sample_channel(int users, int antennas, Rng& rng) {
  if (users < 1 || antennas < users) {
    throw std::invalid_argument("sample_channel requires 1 <= K <= N");
  }
  return ChannelMatrix(complex_gaussian(antennas, users, 1.0, rng));
}

ChannelMatrix sample_channel(int users, int antennas, std::uint64_t seed) {
  Rng rng(seed);
  return sample_channel(users, antennas, rng);
}

namespace {
inline double sign_of(double a) { return a >= 0.0 ? 1.0 : -1.0; }
}  // namespace

CVector one_bit_quantize(const CVector& r) {
  CVector y(r.size());
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    y(i) = cd(sign_of(r(i).real()), sign_of(r(i).imag()));
  }
  return y;
}

RVector one_bit_quantize(const RVector& r) {
  return r.unaryExpr([](double a) { return sign_of(a); });
}

CVector random_symbols(const Constellation& c, int users, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, c.points.size() - 1);
  CVector x(users);
  for (int k = 0; k < users; ++k) x(k) = c.points[pick(rng)];
  return x;
}

TxRxSample transmit(const CMatrix& h, const CVector& x, double n0, Rng& rng) {
  if (h.cols() != x.size()) {
    throw std::invalid_argument("transmit: H has " + std::to_string(h.cols()) +
                                " columns but x has " +
                                std::to_string(x.size()) + " entries");
  }
  if (!(n0 >= 0.0)) throw std::invalid_argument("transmit: N0 must be >= 0");
  TxRxSample s;
  s.x = x;
  s.n0 = n0;
  s.z = complex_gaussian(h.rows(), 1, n0, rng);
  s.r = h * x + s.z;
  s.y = one_bit_quantize(s.r);
  return s;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                          std::uint64_t b, std::uint64_t c) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = mix(master);
  h = mix(h ^ a);
  h = mix(h ^ b);
  h = mix(h ^ c);
  return h;
}

}  // namespace onebit
