#include "onebit/linear_rx.hpp"

#include <algorithm>
#include <numbers>
#include <string>

#include "onebit/errors.hpp"

namespace onebit {

namespace {

constexpr double kMinRcond = 1e-13;

CMatrix solve_checked(const CMatrix& a, const CMatrix& b, const char* what) {
  Eigen::PartialPivLU<CMatrix> lu(a);
  const double rc = lu.rcond();
  if (!(rc > kMinRcond)) {
    throw SingularMatrixError(std::string(what) +
                              ": matrix is singular (rcond=" +
                              std::to_string(rc) + ")");
  }
  return lu.solve(b);
}

// H^H M^-1 for Hermitian M, computed as (M^-1 H)^H.
CMatrix hermitian_right_solve(const CMatrix& h, const CMatrix& m,
                              const char* what) {
  return solve_checked(m, h, what).adjoint();
}

// (G^H G + reg I)^-1 G^H
CMatrix left_inverse(const CMatrix& g, double reg, const char* what) {
  CMatrix gram = g.adjoint() * g;
  gram.diagonal().array() += reg;
  return solve_checked(gram, g.adjoint(), what);
}

RVector diag_real(const CMatrix& m) { return m.diagonal().real(); }

double clamp_unit(double v) { return std::clamp(v, -1.0, 1.0); }

}  // namespace

std::string_view to_string(CombinerKind kind) {
  switch (kind) {
    case CombinerKind::kMrc:
      return "MRC";
    case CombinerKind::kZf:
      return "ZF";
    case CombinerKind::kMmse:
      return "MMSE";
    case CombinerKind::kAqnmMmse:
      return "AQNM_MMSE";
    case CombinerKind::kWfq:
      return "WFQ";
    case CombinerKind::kBmrc:
      return "BMRC";
    case CombinerKind::kBzf:
      return "BZF";
    case CombinerKind::kBmmse:
      return "BMMSE";
  }
  return "UNKNOWN";
}

std::optional<CombinerKind> parse_combiner_kind(std::string_view name) {
  for (CombinerKind k : kAllCombinerKinds) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

bool is_bussgang(CombinerKind kind) {
  return kind == CombinerKind::kBmrc || kind == CombinerKind::kBzf ||
         kind == CombinerKind::kBmmse;
}

CMatrix received_covariance(const CMatrix& h, double n0) {
  CMatrix s = h * h.adjoint();
  s.diagonal().array() += n0;
  return s;
}

CMatrix arcsine_law(const CMatrix& sigma_r) {
  const RVector d = diag_real(sigma_r);
  if ((d.array() <= 0.0).any()) {
    throw SingularMatrixError("arcsine_law: diag(Sigma_r) has a zero entry");
  }
  const RVector inv_sqrt = d.array().rsqrt();
  const Eigen::Index n = sigma_r.rows();
  CMatrix out(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (i == j) {
        // normalized diagonal is exactly 1, arcsin(1) = pi/2
        out(i, j) = 1.0;
        continue;
      }
      const cd c = sigma_r(i, j) * (inv_sqrt(i) * inv_sqrt(j));
      out(i, j) = (2.0 / std::numbers::pi) *
                  cd(std::asin(clamp_unit(c.real())), std::asin(clamp_unit(c.imag())));
    }
  }
  return out;
}

BussgangModel bussgang_model(const CMatrix& h, double n0) {
  BussgangModel m;
  m.received_cov = received_covariance(h, n0);
  const RVector d = diag_real(m.received_cov);
  if ((d.array() <= 0.0).any()) {
    throw SingularMatrixError(
        "bussgang_model: diag(Sigma_r) has a zero entry (N0 = 0 and a zero "
        "channel row)");
  }
  const RVector inv_sqrt = d.array().rsqrt();
  m.gain = std::sqrt(2.0 / std::numbers::pi) * inv_sqrt;
  m.effective_channel = m.gain.cast<cd>().asDiagonal() * h;

  // Sigma_n = (2/pi) [arcsin(C) - C + N0 diag(Sigma_r)^-1], C normalized Sigma_r
  const Eigen::Index n = h.rows();
  CMatrix c = inv_sqrt.cast<cd>().asDiagonal() * m.received_cov *
              inv_sqrt.cast<cd>().asDiagonal();
  c.diagonal().setOnes();
  m.noise_cov = arcsine_law(m.received_cov) - (2.0 / std::numbers::pi) * c;
  for (Eigen::Index i = 0; i < n; ++i) {
    m.noise_cov(i, i) += (2.0 / std::numbers::pi) * n0 / d(i);
  }
  return m;
}

Combiner build_combiner(CombinerKind kind, const CMatrix& h, double n0) {
  Combiner c;
  c.kind = kind;
  const Eigen::Index k = h.cols();

  switch (kind) {
    case CombinerKind::kMrc:
      c.w = h.adjoint();
      c.effective_channel = h;
      break;
    case CombinerKind::kZf:
      c.w = left_inverse(h, 0.0, "ZF");
      c.effective_channel = h;
      break;
    case CombinerKind::kMmse:
      c.w = left_inverse(h, n0, "MMSE");
      c.effective_channel = h;
      break;
    case CombinerKind::kAqnmMmse: {
      const CMatrix sigma_r = received_covariance(h, n0);
      // H H^H + Sigma_d / kappa^2 + N0 I with Sigma_d = alpha kappa diag(Sigma_r)
      CMatrix m = sigma_r;
      m.diagonal() += (kAqnmAlpha / kAqnmKappa) * sigma_r.diagonal();
      c.w = hermitian_right_solve(h, m, "AQNM_MMSE");
      c.effective_channel = h;
      break;
    }
    case CombinerKind::kWfq: {
      const CMatrix sigma_r = received_covariance(h, n0);
      CMatrix m = kAqnmKappa * sigma_r;
      m.diagonal() += kAqnmAlpha * sigma_r.diagonal();
      c.w = hermitian_right_solve(h, m, "WFQ");
      c.effective_channel = h;
      break;
    }
    case CombinerKind::kBmrc:
    case CombinerKind::kBzf:
    case CombinerKind::kBmmse: {
      const CMatrix sigma_r = received_covariance(h, n0);
      const RVector d = diag_real(sigma_r);
      if ((d.array() <= 0.0).any()) {
        throw SingularMatrixError(std::string(to_string(kind)) +
                                  ": diag(Sigma_r) has a zero entry");
      }
      const RVector gain = std::sqrt(2.0 / std::numbers::pi) * d.array().rsqrt();
      c.effective_channel = gain.cast<cd>().asDiagonal() * h;
      if (kind == CombinerKind::kBmrc) {
        c.w = c.effective_channel.adjoint();
      } else if (kind == CombinerKind::kBzf) {
        c.w = left_inverse(c.effective_channel, 0.0, "BZF");
      } else {
        c.w = hermitian_right_solve(c.effective_channel, arcsine_law(sigma_r),
                                    "BMMSE");
      }
      break;
    }
  }

  c.equalizer = CVector::Ones(k);
  if (kind != CombinerKind::kZf && kind != CombinerKind::kBzf) {
    for (Eigen::Index u = 0; u < k; ++u) {
      const cd g = (c.w.row(u) * c.effective_channel.col(u)).value();
      if (g == cd(0.0, 0.0)) {
        throw SingularMatrixError(std::string(to_string(kind)) +
                                  ": zero equalization gain for user " +
                                  std::to_string(u));
      }
      c.equalizer(u) = g;
    }
  }
  return c;
}

CVector rescale_to_users(const CVector& v) {
  const double norm = v.norm();
  if (norm == 0.0) return v;
  return (std::sqrt(static_cast<double>(v.size())) / norm) * v;
}

LinearDetection detect_linear(const Combiner& combiner, const CVector& y,
                              const Constellation& constellation) {
  if (y.size() != combiner.w.cols()) {
    throw std::invalid_argument("detect_linear: y has wrong length");
  }
  const CVector equalized =
      (combiner.w * y).cwiseQuotient(combiner.equalizer);
  LinearDetection out;
  out.soft = rescale_to_users(equalized);
  out.symbols.resize(out.soft.size());
  for (Eigen::Index k = 0; k < out.soft.size(); ++k) {
    out.symbols(k) = constellation.slice(out.soft(k));
  }
  return out;
}

CMatrix detect_linear_soft(const Combiner& combiner, const CMatrix& y) {
  CMatrix x = combiner.w * y;
  const double sqrt_k = std::sqrt(static_cast<double>(x.rows()));
  for (Eigen::Index b = 0; b < x.cols(); ++b) {
    x.col(b) = x.col(b).cwiseQuotient(combiner.equalizer);
    const double norm = x.col(b).norm();
    if (norm > 0.0) x.col(b) *= sqrt_k / norm;
  }
  return x;
}

}  // namespace onebit
