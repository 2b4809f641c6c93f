#pragma once

// Mercer analysis of dot-product kernels on S^n: Gegenbauer coefficients by
// quadrature and in closed form, the coefficient -> eigenvalue map, the
// one-hidden-layer RNTK spectrum and a numerical positive-definiteness check.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "rntk/errors.hpp"
#include "rntk/kernel.hpp"
#include "rntk/quadrature.hpp"
#include "rntk/special.hpp"

namespace rntk {

/// g(u) = sum_{k=0}^{K} c_k P_{k,n}(u).
struct GegenbauerExpansion {
  SphereDim n;
  std::vector<double> coeffs;

  int truncation() const { return static_cast<int>(coeffs.size()) - 1; }

  double evaluate(double u) const {
    const std::vector<double> p = gegenbauer_all(truncation(), n, u);
    double acc = 0.0;
    for (std::size_t k = 0; k < coeffs.size(); ++k) acc += coeffs[k] * p[k];
    return acc;
  }
};

/// Mercer eigenvalues lambda_k, each with multiplicity a_coeff(k, n).
struct EigenSpectrum {
  SphereDim n;
  std::vector<double> eigenvalues;
  std::vector<double> multiplicities;
};

inline constexpr int kDefaultTruncation = 40;

namespace detail {

inline void check_truncation(int K) {
  if (K < 0) throw PreconditionError("truncation K must be >= 0");
}

// Projections <g, P_k>_w / <P_k, P_k>_w for k = 0..K on one rule. The norms are
// integrated by the same rule so the result does not depend on a_coeff.
inline std::vector<double> project(const DotKernel& g, SphereDim dim, int K, int points_per_panel) {
  const QuadratureRule rule = gegenbauer_weight_rule(dim, points_per_panel);
  std::vector<double> num(K + 1, 0.0), den(K + 1, 0.0);
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double t = rule.nodes[i];
    const double gw = rule.weights[i] * g(t);
    const std::vector<double> p = gegenbauer_all(K, dim, t);
    for (int k = 0; k <= K; ++k) {
      num[k] += gw * p[k];
      den[k] += rule.weights[i] * p[k] * p[k];
    }
  }
  for (int k = 0; k <= K; ++k) num[k] /= den[k];
  return num;
}

}  // namespace detail

/// Gegenbauer coefficients of g on S^n by graded Gauss-Legendre quadrature in the
/// angle. Starts at 4K + 40 nodes per panel and doubles until the largest change
/// is below 1e-8 relative to max |c_k|.
inline GegenbauerExpansion expand_kernel(const DotKernel& g, SphereDim dim, int K) {
  detail::check_truncation(K);
  constexpr double kRelTol = 1e-8;
  constexpr int kMaxDoublings = 4;
  int q = 4 * K + 40;
  std::vector<double> prev = detail::project(g, dim, K, q);
  double last_change = 0.0;
  for (int it = 0; it < kMaxDoublings; ++it) {
    q *= 2;
    std::vector<double> cur = detail::project(g, dim, K, q);
    double scale = 0.0, change = 0.0;
    for (int k = 0; k <= K; ++k) {
      scale = std::max(scale, std::abs(cur[k]));
      change = std::max(change, std::abs(cur[k] - prev[k]));
    }
    last_change = scale > 0.0 ? change / scale : change;
    if (last_change <= kRelTol) return {dim, std::move(cur)};
    prev = std::move(cur);
  }
  throw AccuracyError("expand_kernel: quadrature did not converge (relative change " +
                      std::to_string(last_change) + ")");
}

/// kappa0 = 1/2 + (1/2pi^2) sum_{k odd} a_coeff(k, n) B(k/2, (n+1)/2)^2 P_{k,n}.
inline GegenbauerExpansion kappa0_coeffs_closed(SphereDim dim, int K) {
  detail::check_truncation(K);
  const double h = 0.5 * (dim.n() + 1);
  std::vector<double> c(K + 1, 0.0);
  c[0] = 0.5;
  for (int k = 1; k <= K; k += 2) {
    const double b = beta(0.5 * k, h);
    c[k] = a_coeff(k, dim) * b * b / (2.0 * kPi * kPi);
  }
  return {dim, std::move(c)};
}

/// kappa1 = P_{1,n}/2 + (1/2pi^2) sum_{k even} (a_coeff(k, n)/(n+1)) B((k-1)/2, (n+3)/2)^2 P_{k,n}.
/// The k = 0 term needs B(-1/2, .), handled by the reflection formula.
inline GegenbauerExpansion kappa1_coeffs_closed(SphereDim dim, int K) {
  detail::check_truncation(K);
  const double np1 = dim.n() + 1.0;
  std::vector<double> c(K + 1, 0.0);
  if (K >= 1) c[1] = 0.5;
  for (int k = 0; k <= K; k += 2) {
    const double b = beta(0.5 * (k - 1), 0.5 * (dim.n() + 3));
    c[k] = a_coeff(k, dim) / np1 * b * b / (2.0 * kPi * kPi);
  }
  return {dim, std::move(c)};
}

/// lambda_k = c_k vol(S^n) / a_coeff(k, n).
inline EigenSpectrum coeffs_to_eigenvalues(const GegenbauerExpansion& e) {
  EigenSpectrum s{e.n, {}, {}};
  const double vol = sphere_volume(e.n);
  for (int k = 0; k <= e.truncation(); ++k) {
    const double a = a_coeff(k, e.n);
    s.eigenvalues.push_back(e.coeffs[k] * vol / a);
    s.multiplicities.push_back(a);
  }
  return s;
}

/// Closed-form spectrum of r^{(1)}(u) = (kappa1(u) + u kappa0(u)) / 2 on S^n.
inline EigenSpectrum rntk1_eigenvalues(SphereDim dim, int K) {
  if (K < 1) throw PreconditionError("rntk1_eigenvalues: K must be >= 1");
  const double d = dim.n();
  const double vol = sphere_volume(dim);
  const double pre = vol / (4.0 * kPi * kPi);
  auto b2 = [](double a, double b) {
    const double v = beta(a, b);
    return v * v;
  };
  EigenSpectrum s{dim, {}, {}};
  for (int k = 0; k <= K; ++k) {
    double lam = 0.0;
    if (k == 0) {
      lam = pre * (b2(0.5, 0.5 * (d + 1)) + b2(-0.5, 0.5 * (d + 3)) / (d + 1));
    } else if (k == 1) {
      lam = vol / (2.0 * (d + 1));
    } else if (k % 2 == 0) {
      const double den = 2.0 * k + d - 1;
      lam = pre * (b2(0.5 * (k + 1), 0.5 * (d + 1)) * (k + d - 1) / den +
                   b2(0.5 * (k - 1), 0.5 * (d + 1)) * k / den + b2(0.5 * (k - 1), 0.5 * (d + 3)) / (d + 1));
    }
    s.eigenvalues.push_back(lam);
    s.multiplicities.push_back(a_coeff(k, dim));
  }
  return s;
}

struct PositiveDefinitenessReport {
  double min_eigenvalue = 0.0;
  double threshold = 0.0;
  bool is_pd = false;
};

/// lambda_min of the RNTK Gram matrix against the threshold 1e-10 * n.
/// Points whose inner product rounds to 1 count as duplicates.
inline PositiveDefinitenessReport positive_definiteness_report(const Eigen::MatrixXd& points,
                                                               const KernelConfig& cfg) {
  check_unit_rows(points);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < points.rows(); ++j) {
      if (clamp_correlation(points.row(i).dot(points.row(j))) == 1.0) {
        throw PreconditionError("duplicate points " + std::to_string(i) + " and " + std::to_string(j));
      }
    }
  }
  const KernelMatrix K = kernel_matrix(points, cfg);
  PositiveDefinitenessReport r;
  r.min_eigenvalue = K.min_eigenvalue();
  r.threshold = 1e-10 * static_cast<double>(points.rows());
  r.is_pd = r.min_eigenvalue > r.threshold;
  return r;
}

}  // namespace rntk
