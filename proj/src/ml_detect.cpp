#include "onebit/ml_detect.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "onebit/errors.hpp"

namespace onebit {

double normal_cdf(double t) {
  return 0.5 * std::erfc(-t / std::numbers::sqrt2);
}

double log_phi(double t) {
  if (t >= 0.0) return std::log1p(-0.5 * std::erfc(t / std::numbers::sqrt2));
  if (t >= -20.0) return std::log(0.5 * std::erfc(-t / std::numbers::sqrt2));
  // Lower tail: Phi(t) = phi(x) R(x), x = -t, with the Mills ratio R from its
  // continued fraction 1 / (x + 1 / (x + 2 / (x + 3 / ...))).
  const double x = -t;
  double f = x;
  for (int k = 60; k >= 1; --k) f = x + k / f;
  return -0.5 * x * x - 0.5 * std::log(2.0 * std::numbers::pi) - std::log(f);
}

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double softplus(double t) {
  if (t > 0.0) return t + std::log1p(std::exp(-t));
  return std::log1p(std::exp(t));
}

double MlProblem::scale() const {
  return kProbitLogitScale * std::sqrt(2.0 * snr);
}

MlProblem make_ml_problem(const RMatrix& h_hat_real, const RVector& y_real,
                          double snr) {
  if (h_hat_real.rows() != y_real.size()) {
    throw std::invalid_argument("make_ml_problem: H has " +
                                std::to_string(h_hat_real.rows()) +
                                " rows but y has " +
                                std::to_string(y_real.size()) + " entries");
  }
  MlProblem p;
  p.h_hat = h_hat_real;
  p.y = y_real;
  p.gt = (y_real.asDiagonal() * h_hat_real).transpose();
  p.snr = snr;
  return p;
}

double conventional_ml_objective(const RVector& x, const MlProblem& p) {
  const double a = std::sqrt(2.0 * p.snr);
  double sum = 0.0;
  for (Eigen::Index n = 0; n < p.gt.cols(); ++n) {
    sum += log_phi(a * p.gt.col(n).dot(x));
  }
  return sum;
}

double robust_ml_objective(const RVector& x, const MlProblem& p) {
  const double s = p.scale();
  double sum = 0.0;
  for (Eigen::Index n = 0; n < p.gt.cols(); ++n) {
    sum += softplus(-s * p.gt.col(n).dot(x));
  }
  return sum;
}

RVector robust_gradient(const RVector& x, const MlProblem& p) {
  const double s = p.scale();
  RVector g = RVector::Zero(p.dim());
  for (Eigen::Index n = 0; n < p.gt.cols(); ++n) {
    g.noalias() += sigmoid(-s * p.gt.col(n).dot(x)) * p.gt.col(n);
  }
  return -s * g;
}

ExactSearchResult exact_search(const Objective& cost,
                               const Constellation& constellation, int users) {
  if (users < 1) throw std::invalid_argument("exact_search: K must be >= 1");
  const std::size_t levels = constellation.levels.size();
  const std::size_t dims = 2 * static_cast<std::size_t>(users);
  std::size_t total = 1;
  for (std::size_t i = 0; i < dims; ++i) {
    if (total > kMaxExactSearchSize / levels) {
      throw SearchSpaceTooLarge("exact_search: " + std::to_string(levels) +
                                "^" + std::to_string(dims) +
                                " candidates exceed the 2^20 guard");
    }
    total *= levels;
  }

  std::vector<std::size_t> digit(dims, 0);
  RVector x(static_cast<Eigen::Index>(dims));
  for (std::size_t i = 0; i < dims; ++i) x(i) = constellation.levels[0];

  ExactSearchResult best;
  for (std::size_t n = 0; n < total; ++n) {
    const double c = cost(x);
    if (n == 0 || c < best.cost) {
      best.cost = c;
      best.x = x;
    }
    ++best.evaluated;
    // odometer increment, last coordinate fastest
    for (std::size_t i = dims; i-- > 0;) {
      if (++digit[i] < levels) {
        x(i) = constellation.levels[digit[i]];
        break;
      }
      digit[i] = 0;
      x(i) = constellation.levels[0];
    }
  }
  return best;
}

RVector gd_solve(const MlProblem& p, std::span<const double> step_sizes) {
  RVector x = RVector::Zero(p.dim());
  for (double alpha : step_sizes) {
    x -= alpha * robust_gradient(x, p);
  }
  return x;
}

}  // namespace onebit
