#pragma once

// Residual neural tangent kernel on the unit sphere: the normalized depth
// recursion (production path), the literal K/B/C recursion (cross-check),
// depth-limit kernels, degeneration diagnostics and Gram-matrix assembly.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rntk/errors.hpp"
#include "rntk/special.hpp"

namespace rntk {

/// Depth L and residual scaling alpha = C * L^(-gamma), with beta = (1 + alpha^2) / (2 alpha^2).
class KernelConfig {
 public:
  KernelConfig(int depth, double gamma, double scale_c) : depth_(depth), gamma_(gamma), scale_c_(scale_c) {
    if (depth < 1) throw PreconditionError("KernelConfig: depth must be >= 1");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw PreconditionError("KernelConfig: gamma must lie in [0, 1]");
    if (!(scale_c > 0.0) || !std::isfinite(scale_c)) {
      throw PreconditionError("KernelConfig: scale C must be positive and finite");
    }
    alpha_ = alpha_for(depth, gamma, scale_c);
    beta_ = (1.0 + alpha_ * alpha_) / (2.0 * alpha_ * alpha_);
  }

  /// Depth-independent alpha (gamma = 0, C = alpha).
  static KernelConfig constant_alpha(int depth, double alpha) { return {depth, 0.0, alpha}; }

  static double alpha_for(int depth, double gamma, double scale_c) {
    return gamma == 0.0 ? scale_c : scale_c * std::pow(static_cast<double>(depth), -gamma);
  }

  int depth() const noexcept { return depth_; }
  double gamma() const noexcept { return gamma_; }
  double scale_c() const noexcept { return scale_c_; }
  double alpha() const noexcept { return alpha_; }
  double beta() const noexcept { return beta_; }

 private:
  int depth_;
  double gamma_;
  double scale_c_;
  double alpha_ = 0.0;
  double beta_ = 0.0;
};

/// Full record of one kernel evaluation: u_seq[l] = u_{l,L} for l = 0..L,
/// p_factors[l-1] = P_{l+1,L} for l = 1..L, and the kernel value r^{(L)}.
struct RntkTrace {
  std::vector<double> u_seq;
  std::vector<double> p_factors;
  double value = 0.0;
};

namespace detail {

// kappa1(u) - u = (sqrt(1 - u^2) - u arccos u) / pi >= 0, evaluated without
// cancellation so the u-sequence stays non-decreasing in floating point.
inline double kappa1_gap(double u) {
  return std::max(0.0, (std::sqrt(std::fma(-u, u, 1.0)) - u * std::acos(u)) / kPi);
}

inline double advance_u(double u, double shrink) { return std::min(1.0, u + shrink * kappa1_gap(u)); }

}  // namespace detail

/// r^{(L)}(u0) with the full trace retained. Diagonal inputs (u0 == 1) short-circuit to 1.
inline RntkTrace rntk_value(double u0, const KernelConfig& cfg) {
  u0 = clamp_correlation(u0);
  const int L = cfg.depth();
  RntkTrace tr;
  tr.u_seq.assign(L + 1, 1.0);
  tr.p_factors.assign(L, 1.0);
  if (u0 == 1.0) {
    tr.value = 1.0;
    return tr;
  }
  const double a2 = cfg.alpha() * cfg.alpha();
  const double shrink = a2 / (1.0 + a2);
  tr.u_seq[0] = u0;
  for (int l = 1; l <= L; ++l) tr.u_seq[l] = detail::advance_u(tr.u_seq[l - 1], shrink);

  // P_{L+1,L} = 1;  P_{l+1,L} = P_{l+2,L} (1 + a^2 kappa0(u_l)) / (1 + a^2).
  for (int l = L - 1; l >= 1; --l) {
    tr.p_factors[l - 1] = tr.p_factors[l] * (1.0 + a2 * kappa0(tr.u_seq[l])) / (1.0 + a2);
  }
  double sum = 0.0;
  for (int l = 1; l <= L; ++l) {
    const double u = tr.u_seq[l - 1];
    sum += tr.p_factors[l - 1] * (kappa1(u) + u * kappa0(u));
  }
  tr.value = sum / (2.0 * L);
  return tr;
}

/// r^{(L)}(u0) without materializing the trace; same recursion as rntk_value.
inline double rntk_eval(double u0, const KernelConfig& cfg) {
  u0 = clamp_correlation(u0);
  if (u0 == 1.0) return 1.0;
  const int L = cfg.depth();
  const double a2 = cfg.alpha() * cfg.alpha();
  const double shrink = a2 / (1.0 + a2);
  // S_1 = v_0, S_{j+1} = S_j f(u_j) + v_j gives S_L = sum_l P_{l+1,L} v_{l-1}.
  double u = u0;
  double acc = 0.0;
  for (int l = 0; l < L; ++l) {
    const double k0 = kappa0(u);
    if (l > 0) acc *= (1.0 + a2 * k0) / (1.0 + a2);
    acc += kappa1(u) + u * k0;
    u = detail::advance_u(u, shrink);
  }
  return acc / (2.0 * L);
}

/// Literal K_l / B_l / C_L recursion. Only usable while (1 + alpha^2)^L is representable.
/// u0 == 1 short-circuits as in rntk_value: K_l / growth_l rounds just below 1 there and
/// kappa0's infinite slope would turn that into ~1e-8 error.
inline double rntk_value_raw(double u0, const KernelConfig& cfg) {
  u0 = clamp_correlation(u0);
  const int L = cfg.depth();
  const double a2 = cfg.alpha() * cfg.alpha();
  if (L * std::log1p(a2) >= 700.0) {
    throw RangeError("rntk_value_raw: (1 + alpha^2)^L overflows; use rntk_value");
  }
  if (u0 == 1.0) return 1.0;
  std::vector<double> K(L + 1), growth(L + 1);
  K[0] = u0;
  growth[0] = 1.0;
  for (int l = 1; l <= L; ++l) {
    K[l] = K[l - 1] + a2 * growth[l - 1] * kappa1(clamp_correlation(K[l - 1] / growth[l - 1]));
    growth[l] = growth[l - 1] * (1.0 + a2);
  }
  std::vector<double> B(L + 2);
  B[L + 1] = 1.0;
  for (int l = L; l >= 1; --l) {
    B[l] = B[l + 1] * (1.0 + a2 * kappa0(clamp_correlation(K[l - 1] / growth[l - 1])));
  }
  const double C_L = 1.0 / (2.0 * L * growth[L - 1]);
  double sum = 0.0;
  for (int l = 1; l <= L; ++l) {
    const double u = clamp_correlation(K[l - 1] / growth[l - 1]);
    sum += B[l + 1] * (growth[l - 1] * kappa1(u) + K[l - 1] * kappa0(u));
  }
  return C_L * sum;
}

/// Infinite-depth limit for constant alpha: 1 on the diagonal, 1/4 elsewhere.
inline double limit_kernel_constant(double u0) {
  u0 = clamp_correlation(u0);
  return u0 == 1.0 ? 1.0 : 0.25;
}

/// Infinite-depth limit for alpha = L^(-gamma), gamma in (1/2, 1]: the one-hidden-layer kernel
/// r^{(1)}(u) = (kappa1(u) + u kappa0(u)) / 2.
inline double limit_kernel_fast_decay(double u0) {
  u0 = clamp_correlation(u0);
  return 0.5 * (kappa1(u0) + u0 * kappa0(u0));
}

// ---------------------------------------------------------------------------
// Degeneration diagnostics.

/// phi1(rho) - rho together with its sandwich bounds
/// sqrt(2)/(3 pi beta) (1-rho)^{3/2} <= phi1(rho) - rho <= sqrt(2)/(8 beta) (1-rho)^{3/2}.
struct Phi1Gap {
  double gap;
  double lower;
  double upper;
};

inline Phi1Gap phi1_gap(double rho, double alpha) {
  rho = clamp_correlation(rho);
  const double a2 = alpha * alpha;
  const double beta = (1.0 + a2) / (2.0 * a2);
  const double e32 = std::pow(1.0 - rho, 1.5);
  return {a2 / (1.0 + a2) * detail::kappa1_gap(rho), std::sqrt(2.0) / (3.0 * kPi * beta) * e32,
          std::sqrt(2.0) / (8.0 * beta) * e32};
}

struct DegenerationReport {
  double beta = 0.0;
  /// Bracket [lo, hi] from the depth analysis and the chosen integer ceil(lo).
  double n_alpha_lo = 0.0;
  double n_alpha_hi = 0.0;
  int n_alpha = 0;
  std::vector<double> u_seq;
  /// cos(2 pi beta (1 - ((n + N_alpha)/(n + N_alpha + 1))^3)) for n = 0..L.
  std::vector<double> lower_bounds;
  /// 1 - 18 pi^2 beta^2 / (n + 3 pi beta)^2 for n = 0..L.
  std::vector<double> quadratic_lower_bounds;
  bool lower_bound_holds = true;
  bool quadratic_bound_holds = true;
  std::optional<int> first_violation;
};

inline DegenerationReport degeneration_diagnostics(const KernelConfig& cfg, double u0) {
  u0 = clamp_correlation(u0);
  if (u0 == 1.0) throw PreconditionError("degeneration_diagnostics: requires u0 < 1");
  DegenerationReport rep;
  const double beta = cfg.beta();
  rep.beta = beta;
  const double ratio_cbrt = std::cbrt((2.0 * beta - 1.0) / (2.0 * beta));
  rep.n_alpha_lo = 1.0 / (1.0 - ratio_cbrt) - 2.0;
  rep.n_alpha_hi = rep.n_alpha_lo + 1.0;
  rep.n_alpha = static_cast<int>(std::ceil(rep.n_alpha_lo));

  rep.u_seq = rntk_value(u0, cfg).u_seq;
  const int L = cfg.depth();
  const double N = rep.n_alpha;
  rep.lower_bounds.resize(L + 1);
  rep.quadratic_lower_bounds.resize(L + 1);
  for (int n = 0; n <= L; ++n) {
    const double q = (n + N) / (n + N + 1.0);
    rep.lower_bounds[n] = std::cos(2.0 * kPi * beta * (1.0 - q * q * q));
    const double s = n + 3.0 * kPi * beta;
    rep.quadratic_lower_bounds[n] = 1.0 - 18.0 * kPi * kPi * beta * beta / (s * s);
    if (rep.u_seq[n] < rep.lower_bounds[n]) {
      if (rep.lower_bound_holds) rep.first_violation = n;
      rep.lower_bound_holds = false;
    }
    if (rep.u_seq[n] < rep.quadratic_lower_bounds[n]) rep.quadratic_bound_holds = false;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Gram matrices.

/// Scalar profile g of a dot-product kernel k(x, x') = g(<x, x'>).
using DotKernel = std::function<double(double)>;

inline DotKernel rntk_kernel(const KernelConfig& cfg) {
  return [cfg](double u) { return rntk_eval(u, cfg); };
}

/// Tolerance on | ||x|| - 1 | for points handed to Gram assembly.
inline constexpr double kUnitNormTol = 1e-8;

/// Rows of `points` are the inputs. Throws DomainError naming the first non-unit row.
inline void check_unit_rows(const Eigen::MatrixXd& points) {
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const double nrm = points.row(i).norm();
    if (!(std::abs(nrm - 1.0) <= kUnitNormTol)) {
      throw DomainError("point " + std::to_string(i) + " is not unit-norm (norm " + std::to_string(nrm) + ")");
    }
  }
}

/// Symmetric Gram matrix of a dot-product kernel with lazily computed lambda_min.
class KernelMatrix {
 public:
  explicit KernelMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries)) {}

  Eigen::Index n() const noexcept { return entries_.rows(); }
  const Eigen::MatrixXd& entries() const noexcept { return entries_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return entries_(i, j); }

  double min_eigenvalue() const {
    if (!min_eigenvalue_) {
      if (n() == 0) throw PreconditionError("min_eigenvalue of an empty matrix");
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(entries_, Eigen::EigenvaluesOnly);
      min_eigenvalue_ = es.eigenvalues()(0);
    }
    return *min_eigenvalue_;
  }

 private:
  Eigen::MatrixXd entries_;
  mutable std::optional<double> min_eigenvalue_;
};

namespace detail {

// Identical rows get correlation exactly 1; their rounded dot product can sit
// just below 1, where kappa0 has infinite slope.
template <class RowA, class RowB>
double pair_correlation(const RowA& a, const RowB& b, double dot) {
  return a == b ? 1.0 : clamp_correlation(dot);
}

}  // namespace detail

/// Gram matrix of g(<x_i, x_j>): each unordered pair evaluated once, diagonal set to g(1).
inline KernelMatrix kernel_matrix(const Eigen::MatrixXd& points, const DotKernel& g) {
  check_unit_rows(points);
  const Eigen::Index n = points.rows();
  Eigen::MatrixXd K(n, n);
  const double diag = g(1.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    K(i, i) = diag;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = g(detail::pair_correlation(points.row(i), points.row(j), points.row(i).dot(points.row(j))));
      K(i, j) = v;
      K(j, i) = v;
    }
  }
  return KernelMatrix(std::move(K));
}

inline KernelMatrix kernel_matrix(const Eigen::MatrixXd& points, const KernelConfig& cfg) {
  return kernel_matrix(points, rntk_kernel(cfg));
}

/// Rectangular matrix g(<a_i, b_j>).
inline Eigen::MatrixXd cross_kernel_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const DotKernel& g) {
  check_unit_rows(a);
  check_unit_rows(b);
  const Eigen::MatrixXd dots = a * b.transpose();
  Eigen::MatrixXd out(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) out(i, j) = g(detail::pair_correlation(a.row(i), b.row(j), dots(i, j)));
  }
  return out;
}

}  // namespace rntk
