#pragma once

// Maximum-likelihood detection for the real-valued one-bit model
// y = sign(H x + z): the probit (log Phi) likelihood, its logistic surrogate
// (a sum of softplus terms), the surrogate's gradient, exhaustive search and
// plain gradient descent on the relaxed surrogate.

#include <cstddef>
#include <functional>
#include <span>

#include "onebit/model.hpp"

namespace onebit {

/// Logistic approximation constant: Phi(t) ~ sigma(1.702 t).
inline constexpr double kProbitLogitScale = 1.702;

double normal_cdf(double t);
/// log Phi(t), accurate to ~1e-12 relative even deep in the lower tail.
double log_phi(double t);

double sigmoid(double t);
/// log(1 + e^t) without overflow.
double softplus(double t);

/// Sign-folded channel estimate G = diag(y) H_hat, stored transposed
/// (column n of `gt` is row g_n) so per-row dot products are contiguous.
struct MlProblem {
  RMatrix h_hat;  // 2N x 2K real-lifted channel estimate
  RVector y;      // 2N one-bit observations
  RMatrix gt;     // 2K x 2N, transpose of G
  double snr = 1.0;

  /// c sqrt(2 rho)
  double scale() const;
  Eigen::Index dim() const { return gt.rows(); }
};

MlProblem make_ml_problem(const RMatrix& h_hat_real, const RVector& y_real,
                          double snr);

/// sum_n log Phi(sqrt(2 rho) g_n^T x); larger is more likely.
double conventional_ml_objective(const RVector& x, const MlProblem& p);
/// sum_n log(1 + exp(-c sqrt(2 rho) g_n^T x)); smaller is more likely.
double robust_ml_objective(const RVector& x, const MlProblem& p);
/// -c sqrt(2 rho) G^T sigma(-c sqrt(2 rho) G x)
RVector robust_gradient(const RVector& x, const MlProblem& p);

/// Cost to minimize over real-lifted symbol vectors of length 2K.
using Objective = std::function<double(const RVector&)>;

inline constexpr std::size_t kMaxExactSearchSize = std::size_t{1} << 20;

struct ExactSearchResult {
  RVector x;  // real-lifted minimizer
  double cost = 0.0;
  std::size_t evaluated = 0;
};

/// Enumerates all |M|^K complex symbol vectors (as |levels|^(2K) real
/// vectors, coordinate 0 most significant, levels ascending) and returns the
/// first minimizer in that order. Throws SearchSpaceTooLarge above 2^20.
ExactSearchResult exact_search(const Objective& cost,
                               const Constellation& constellation, int users);

/// Gradient descent on the relaxed surrogate from x = 0:
/// x <- x + alpha_l c sqrt(2 rho) G^T sigma(-c sqrt(2 rho) G x).
RVector gd_solve(const MlProblem& p, std::span<const double> step_sizes);

}  // namespace onebit
