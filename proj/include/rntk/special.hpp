#pragma once

// Scalar special functions: the ReLU arc-cosine kernels kappa0/kappa1 and their
// Maclaurin series, signed log-Gamma/Beta valid for negative non-integer
// arguments, normalized Gegenbauer polynomials and sphere constants.

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "rntk/errors.hpp"

namespace rntk {

inline constexpr double kPi = std::numbers::pi;

/// Index of the sphere S^n embedded in R^{n+1}. Inputs in ambient dimension d
/// live on SphereDim{d - 1}.
class SphereDim {
 public:
  explicit SphereDim(int n) : n_(n) {
    if (n < 1) throw PreconditionError("SphereDim: n must be >= 1, got " + std::to_string(n));
  }
  static SphereDim from_ambient(int d) { return SphereDim(d - 1); }

  int n() const noexcept { return n_; }
  int ambient() const noexcept { return n_ + 1; }

  friend bool operator==(SphereDim, SphereDim) = default;

 private:
  int n_;
};

/// Inner products farther than this outside [-1, 1] are rejected rather than clamped.
inline constexpr double kCorrelationRejectTol = 1e-6;

/// Clamp a correlation into [-1, 1]. Floating-point drift up to 1e-6 is absorbed;
/// anything larger, or a non-finite value, is a DomainError.
inline double clamp_correlation(double u) {
  if (!std::isfinite(u)) throw DomainError("correlation is not finite");
  if (u > 1.0 + kCorrelationRejectTol || u < -1.0 - kCorrelationRejectTol) {
    throw DomainError("correlation " + std::to_string(u) + " outside [-1, 1]");
  }
  return u > 1.0 ? 1.0 : (u < -1.0 ? -1.0 : u);
}

/// kappa0(u) = (pi - arccos u) / pi, the degree-0 arc-cosine kernel.
inline double kappa0(double u) {
  u = clamp_correlation(u);
  return (kPi - std::acos(u)) / kPi;
}

/// kappa1(u) = (u (pi - arccos u) + sqrt(1 - u^2)) / pi, the degree-1 arc-cosine kernel.
inline double kappa1(double u) {
  u = clamp_correlation(u);
  return (u * (kPi - std::acos(u)) + std::sqrt(std::fma(-u, u, 1.0))) / kPi;
}

// ---------------------------------------------------------------------------
// Gamma and Beta with sign tracking.

/// |value| = exp(log_abs), value = sign * exp(log_abs). sign == 0 encodes an exact zero.
struct SignedLog {
  double log_abs = 0.0;
  int sign = 1;

  double value() const { return sign == 0 ? 0.0 : sign * std::exp(log_abs); }
};

inline bool is_nonpositive_integer(double x) { return x <= 0.0 && x == std::floor(x); }

namespace detail {

// sin(pi x) with argument reduction so that large |x| keeps its accuracy.
inline double sin_pi(double x) {
  double r = std::fmod(x, 2.0);
  if (r < 0) r += 2.0;
  if (r > 1.0) return -std::sin(kPi * (r - 1.0));
  return std::sin(kPi * r);
}

}  // namespace detail

/// log|Gamma(x)| with the sign of Gamma(x). Negative non-integers go through the
/// reflection formula Gamma(x) = pi / (sin(pi x) Gamma(1 - x)).
inline SignedLog log_gamma_signed(double x) {
  if (!std::isfinite(x)) throw DomainError("log_gamma: argument is not finite");
  if (is_nonpositive_integer(x)) {
    throw PoleError("log_gamma: pole at " + std::to_string(x));
  }
  if (x > 0.0) return {std::lgamma(x), 1};
  const double s = detail::sin_pi(x);
  return {std::log(kPi) - std::log(std::abs(s)) - std::lgamma(1.0 - x), s > 0 ? 1 : -1};
}

/// log|Gamma(x)|.
inline double log_gamma(double x) { return log_gamma_signed(x).log_abs; }

inline double gamma_fn(double x) { return log_gamma_signed(x).value(); }

/// B(a, b) = Gamma(a) Gamma(b) / Gamma(a + b) in signed-log form. When a + b is a
/// non-positive integer the denominator is infinite and the result is exactly 0.
inline SignedLog log_beta_signed(double a, double b) {
  const SignedLog ga = log_gamma_signed(a);
  const SignedLog gb = log_gamma_signed(b);
  if (is_nonpositive_integer(a + b)) return {-INFINITY, 0};
  const SignedLog gab = log_gamma_signed(a + b);
  return {ga.log_abs + gb.log_abs - gab.log_abs, ga.sign * gb.sign * gab.sign};
}

inline double beta(double a, double b) { return log_beta_signed(a, b).value(); }

// ---------------------------------------------------------------------------
// Maclaurin series of kappa0 / kappa1.

/// Coefficients c_0..c_N of a truncated power series sum_j c_j u^j.
struct SeriesCoeffs {
  std::vector<double> coeffs;
  int truncation_order = 0;

  double evaluate(double u) const {
    double acc = 0.0;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * u + *it;
    return acc;
  }
};

namespace detail {

// (2n)! / (4^n (n!)^2) = Gamma(n + 1/2) / (sqrt(pi) Gamma(n + 1)); via log-Gamma,
// the factorial form overflows past n ~ 85.
inline double central_binomial_ratio(int n) {
  return std::exp(std::lgamma(n + 0.5) - std::lgamma(n + 1.0) - 0.5 * std::log(kPi));
}

inline void check_order(int order) {
  if (order < 0) throw PreconditionError("series order must be >= 0");
}

}  // namespace detail

/// kappa0(u) = 1/2 + (1/pi) sum_n (2n)! u^{2n+1} / (4^n (n!)^2 (2n+1)).
inline SeriesCoeffs kappa0_maclaurin(int order) {
  detail::check_order(order);
  SeriesCoeffs s{std::vector<double>(order + 1, 0.0), order};
  s.coeffs[0] = 0.5;
  for (int n = 0; 2 * n + 1 <= order; ++n) {
    s.coeffs[2 * n + 1] = detail::central_binomial_ratio(n) / (kPi * (2 * n + 1));
  }
  return s;
}

/// kappa1(u) = 1/pi + u/2 + (1/2pi) sum_n (2n)! u^{2n+2} / (4^n n! (n+1)! (2n+1)).
inline SeriesCoeffs kappa1_maclaurin(int order) {
  detail::check_order(order);
  SeriesCoeffs s{std::vector<double>(order + 1, 0.0), order};
  s.coeffs[0] = 1.0 / kPi;
  if (order >= 1) s.coeffs[1] = 0.5;
  for (int n = 0; 2 * n + 2 <= order; ++n) {
    s.coeffs[2 * n + 2] =
        detail::central_binomial_ratio(n) / ((n + 1.0) * (2 * n + 1) * 2.0 * kPi);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Gegenbauer polynomials and sphere geometry.

/// Zonal (Gegenbauer) polynomial P_{k,n} of S^n normalized so that P_{k,n}(1) = 1,
/// orthogonal under the weight (1 - t^2)^{(n-2)/2}. Uses the three-term recurrence
///   (k + n - 1) P_{k+1} = (2k + n - 1) t P_k - k P_{k-1},
/// which for n = 1 reduces to the Chebyshev recurrence T_{k+1} = 2t T_k - T_{k-1}.
inline double gegenbauer(int k, SphereDim dim, double t) {
  if (k < 0) throw PreconditionError("gegenbauer: degree must be >= 0");
  t = clamp_correlation(t);
  if (k == 0) return 1.0;
  const double n = dim.n();
  double prev = 1.0;
  double cur = t;
  for (int j = 1; j < k; ++j) {
    const double next = ((2.0 * j + n - 1.0) * t * cur - j * prev) / (j + n - 1.0);
    prev = cur;
    cur = next;
  }
  return cur;
}

/// All P_{0..K,n}(t) in one pass.
inline std::vector<double> gegenbauer_all(int max_degree, SphereDim dim, double t) {
  if (max_degree < 0) throw PreconditionError("gegenbauer_all: degree must be >= 0");
  t = clamp_correlation(t);
  std::vector<double> p(max_degree + 1);
  p[0] = 1.0;
  if (max_degree >= 1) p[1] = t;
  const double n = dim.n();
  for (int j = 1; j < max_degree; ++j) {
    p[j + 1] = ((2.0 * j + n - 1.0) * t * p[j] - j * p[j - 1]) / (j + n - 1.0);
  }
  return p;
}

/// Surface measure of S^n: 2 pi^{(n+1)/2} / Gamma((n+1)/2).
inline double sphere_volume(SphereDim dim) {
  const double h = 0.5 * (dim.n() + 1);
  return 2.0 * std::exp(h * std::log(kPi) - std::lgamma(h));
}

/// Number of linearly independent degree-k spherical harmonics on S^n:
/// (2k + n - 1) Gamma(k + n - 1) / (k! Gamma(n)).
inline double a_coeff(int k, SphereDim dim) {
  if (k < 0) throw PreconditionError("a_coeff: degree must be >= 0");
  if (k == 0) return 1.0;
  const double n = dim.n();
  // Equal to (2k + n - 1) / (k + n - 1) * binom(k + n - 1, k); the running product
  // below is an integer at every step, so it is exact while it fits in 53 bits.
  double binom = 1.0;
  for (int j = 1; j <= k; ++j) {
    binom = binom * (n - 1.0 + j) / j;
    if (binom * (2.0 * k + n - 1.0) > 0x1p53) {
      return std::exp(std::log(2.0 * k + n - 1.0) + std::lgamma(k + n - 1.0) - std::lgamma(k + 1.0) -
                      std::lgamma(n));
    }
  }
  return binom * (2.0 * k + n - 1.0) / (k + n - 1.0);
}

}  // namespace rntk
