#pragma once

#include <Eigen/Dense>

#include <random>

#include "rntk/errors.hpp"

namespace rntk {

/// All experiment randomness is drawn from this engine, seeded once per run.
using Rng = std::mt19937_64;

/// `count` i.i.d. points uniform on the unit sphere in R^{ambient_dim}, one per row,
/// obtained by normalizing standard Gaussian vectors.
inline Eigen::MatrixXd uniform_sphere(Eigen::Index count, int ambient_dim, Rng& rng) {
  if (ambient_dim < 2) throw PreconditionError("uniform_sphere: ambient dimension must be >= 2");
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd x(count, ambient_dim);
  for (Eigen::Index i = 0; i < count; ++i) {
    double nrm = 0.0;
    do {
      for (int j = 0; j < ambient_dim; ++j) x(i, j) = gauss(rng);
      nrm = x.row(i).norm();
    } while (nrm == 0.0);
    x.row(i) /= nrm;
  }
  return x;
}

/// Matrix of i.i.d. N(0, 1) entries.
inline Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = gauss(rng);
  }
  return m;
}

}  // namespace rntk
