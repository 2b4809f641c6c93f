#pragma once

// Gauss-Legendre rules and a graded composite rule for integrals against the
// Gegenbauer weight (1 - t^2)^{(n-2)/2} on [-1, 1].
//
// Integrals are taken in the angle: t = cos(theta) turns
//   int g(t) h(t) (1 - t^2)^{(n-2)/2} dt   into   int_0^pi g(cos th) h(cos th) sin^{n-1}(th) d th.
// The arc-cosine kernels have square-root endpoint behaviour in t but are smooth
// in theta. Deep kernels develop a boundary layer of width ~1/L at theta = 0,
// so panels are refined geometrically towards that end.

#include <boost/math/special_functions/legendre.hpp>

#include <cmath>
#include <functional>
#include <vector>

#include "rntk/errors.hpp"
#include "rntk/special.hpp"

namespace rntk {

/// Nodes and weights of an N-point rule on [-1, 1].
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// N-point Gauss-Legendre rule. Nodes from Boost's Legendre zeros,
/// weights w_i = 2 / ((1 - x_i^2) P_N'(x_i)^2).
inline QuadratureRule gauss_legendre(int order) {
  if (order < 1) throw PreconditionError("gauss_legendre: order must be >= 1");
  const std::vector<double> pos = boost::math::legendre_p_zeros<double>(order);
  QuadratureRule rule;
  rule.nodes.reserve(order);
  rule.weights.reserve(order);
  auto weight = [order](double x) {
    const double dp = boost::math::legendre_p_prime(order, x);
    return 2.0 / ((1.0 - x * x) * dp * dp);
  };
  // pos holds the non-negative zeros in increasing order (including 0 for odd N).
  for (auto it = pos.rbegin(); it != pos.rend(); ++it) {
    if (*it == 0.0) continue;
    rule.nodes.push_back(-*it);
    rule.weights.push_back(weight(*it));
  }
  for (double x : pos) {
    rule.nodes.push_back(x);
    rule.weights.push_back(weight(x));
  }
  return rule;
}

/// Panel breakpoints on [0, pi]: pi * 2^{-j} for j = grading_levels..1, then pi.
inline std::vector<double> graded_theta_breakpoints(int grading_levels) {
  std::vector<double> b{0.0};
  for (int j = grading_levels; j >= 1; --j) b.push_back(kPi * std::ldexp(1.0, -j));
  b.push_back(kPi);
  return b;
}

/// Nodes t_i = cos(theta_i) with weights absorbing sin^{n-1}(theta) d theta, so that
/// sum_i w_i h(t_i) approximates int_{-1}^{1} h(t) (1 - t^2)^{(n-2)/2} dt.
inline QuadratureRule gegenbauer_weight_rule(SphereDim dim, int points_per_panel, int grading_levels = 16) {
  const QuadratureRule base = gauss_legendre(points_per_panel);
  const std::vector<double> br = graded_theta_breakpoints(grading_levels);
  QuadratureRule rule;
  const int p = dim.n() - 1;
  for (std::size_t s = 0; s + 1 < br.size(); ++s) {
    const double mid = 0.5 * (br[s] + br[s + 1]);
    const double half = 0.5 * (br[s + 1] - br[s]);
    for (std::size_t i = 0; i < base.nodes.size(); ++i) {
      const double th = mid + half * base.nodes[i];
      rule.nodes.push_back(std::cos(th));
      rule.weights.push_back(half * base.weights[i] * std::pow(std::sin(th), p));
    }
  }
  return rule;
}

/// int_{-1}^{1} h(t) (1 - t^2)^{(n-2)/2} dt on a fixed rule.
inline double weighted_integral(const std::function<double(double)>& h, SphereDim dim, int points_per_panel,
                                int grading_levels = 16) {
  const QuadratureRule rule = gegenbauer_weight_rule(dim, points_per_panel, grading_levels);
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) acc += rule.weights[i] * h(rule.nodes[i]);
  return acc;
}

}  // namespace rntk
