#pragma once

// Ridgeless kernel regression from a zero initial predictor: closed-form gradient
// flow, discrete gradient descent, excess risk and holdout early stopping.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "rntk/errors.hpp"
#include "rntk/kernel.hpp"
#include "rntk/sampling.hpp"

namespace rntk {

/// Inputs are rows of train_x / test_x. test_y_clean holds f*(x) at the test inputs.
struct RegressionProblem {
  Eigen::MatrixXd train_x;
  Eigen::VectorXd train_y;
  Eigen::MatrixXd test_x;
  Eigen::VectorXd test_y_clean;
  double noise_sigma = 0.0;

  void validate() const {
    if (train_x.rows() < 1 || test_x.rows() < 1) throw PreconditionError("RegressionProblem: empty split");
    if (train_y.size() != train_x.rows() || test_y_clean.size() != test_x.rows()) {
      throw PreconditionError("RegressionProblem: target length does not match inputs");
    }
    if (train_x.cols() != test_x.cols()) throw PreconditionError("RegressionProblem: dimension mismatch");
    if (!(noise_sigma >= 0.0)) throw PreconditionError("RegressionProblem: noise_sigma must be >= 0");
    check_unit_rows(train_x);
    check_unit_rows(test_x);
  }
};

/// Predictor f_t = sum_i coefficients_i k(., x_i). `epoch` is set for descent states.
struct FlowState {
  double time = 0.0;
  std::optional<int> epoch;
  Eigen::VectorXd train_predictions;
  Eigen::VectorXd coefficients;
};

/// Fit/evaluate machinery for one problem and one kernel. The train Gram matrix and
/// the test-by-train cross matrix are assembled once.
class KernelRegression {
 public:
  KernelRegression(RegressionProblem problem, DotKernel g)
      : problem_(std::move(problem)), g_(std::move(g)), gram_(Eigen::MatrixXd()) {
    problem_.validate();
    gram_ = kernel_matrix(problem_.train_x, g_);
    cross_ = cross_kernel_matrix(problem_.test_x, problem_.train_x, g_);
  }

  KernelRegression(RegressionProblem problem, const KernelConfig& cfg)
      : KernelRegression(std::move(problem), rntk_kernel(cfg)) {}

  const RegressionProblem& problem() const noexcept { return problem_; }
  const KernelMatrix& gram() const noexcept { return gram_; }
  Eigen::Index n_train() const noexcept { return problem_.train_x.rows(); }

  double max_eigenvalue() const { return eig().eigenvalues()(n_train() - 1); }
  double min_eigenvalue() const { return eig().eigenvalues()(0); }

  /// f_t(X) = (I - e^{-tK}) y and c_t = K^{-1}(I - e^{-tK}) y through K = Q diag(lambda) Q^T.
  std::vector<FlowState> gradient_flow(const std::vector<double>& times) const {
    if (!std::is_sorted(times.begin(), times.end())) throw PreconditionError("gradient_flow: times must ascend");
    const auto& es = eig();
    const double lmin = es.eigenvalues()(0);
    if (lmin < 1e-10 * static_cast<double>(n_train())) {
      throw IllConditionedError("kernel matrix is ill-conditioned: lambda_min = " + std::to_string(lmin), lmin);
    }
    const Eigen::VectorXd qty = es.eigenvectors().transpose() * problem_.train_y;
    std::vector<FlowState> out;
    out.reserve(times.size());
    for (double t : times) {
      if (!(t >= 0.0)) throw PreconditionError("gradient_flow: times must be >= 0");
      Eigen::VectorXd fit(qty.size()), coef(qty.size());
      for (Eigen::Index i = 0; i < qty.size(); ++i) {
        const double lam = es.eigenvalues()(i);
        const double x = t * lam;
        const double one_minus = -std::expm1(-x);
        fit(i) = one_minus * qty(i);
        // (1 - e^{-t lam}) / lam, with the t -> 0 limit t.
        coef(i) = (x == 0.0 ? t : one_minus / lam) * qty(i);
      }
      out.push_back({t, std::nullopt, es.eigenvectors() * fit, es.eigenvectors() * coef});
    }
    return out;
  }

  /// c <- c + lr (y - K c) from c = 0. Records epoch 0, every `stride`-th epoch and the last.
  std::vector<FlowState> gradient_descent(double lr, int epochs, int stride = 1) const {
    if (!(lr > 0.0)) throw PreconditionError("gradient_descent: lr must be > 0");
    if (epochs < 0 || stride < 1) throw PreconditionError("gradient_descent: epochs >= 0 and stride >= 1 required");
    const double lmax = max_eigenvalue();
    if (!(lr * lmax < 2.0)) {
      throw PreconditionError("gradient_descent: lr * lambda_max = " + std::to_string(lr * lmax) +
                              " >= 2; reduce lr");
    }
    const Eigen::MatrixXd& K = gram_.entries();
    const Eigen::VectorXd& y = problem_.train_y;
    Eigen::VectorXd c = Eigen::VectorXd::Zero(y.size());
    Eigen::VectorXd fit = Eigen::VectorXd::Zero(y.size());
    std::vector<FlowState> out;
    std::vector<double> loss_hist;
    auto record = [&](int e) { out.push_back({lr * e, e, fit, c}); };
    record(0);
    for (int e = 1; e <= epochs; ++e) {
      c.noalias() += lr * (y - fit);
      fit.noalias() = K * c;
      const double loss = 0.5 * (fit - y).squaredNorm() / static_cast<double>(y.size());
      loss_hist.push_back(loss);
      if (!std::isfinite(loss) ||
          (loss_hist.size() > 10 && loss > 10.0 * loss_hist[loss_hist.size() - 11])) {
        throw DivergenceError("gradient_descent diverged at epoch " + std::to_string(e) + "; use a smaller lr");
      }
      if (e % stride == 0 || e == epochs) record(e);
    }
    return out;
  }

  Eigen::VectorXd test_predictions(const FlowState& s) const { return cross_ * s.coefficients; }

  double excess_risk(const FlowState& s) const {
    return (test_predictions(s) - problem_.test_y_clean).squaredNorm() / static_cast<double>(cross_.rows());
  }

  /// (1/2n) ||f(X) - y||^2.
  double train_loss(const FlowState& s) const {
    return 0.5 * (s.train_predictions - problem_.train_y).squaredNorm() / static_cast<double>(n_train());
  }

 private:
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>& eig() const {
    if (!eig_) eig_.emplace(gram_.entries());
    return *eig_;
  }

  RegressionProblem problem_;
  DotKernel g_;
  KernelMatrix gram_;
  Eigen::MatrixXd cross_;
  mutable std::optional<Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>> eig_;
};

inline std::vector<FlowState> fit_gradient_flow(const RegressionProblem& p, const KernelConfig& cfg,
                                                const std::vector<double>& times) {
  return KernelRegression(p, cfg).gradient_flow(times);
}

inline std::vector<FlowState> fit_gradient_descent(const RegressionProblem& p, const KernelConfig& cfg, double lr,
                                                   int epochs, int stride = 1) {
  return KernelRegression(p, cfg).gradient_descent(lr, epochs, stride);
}

/// Mean over test points of (f_t(x) - f*(x))^2.
inline double excess_risk(const FlowState& s, const RegressionProblem& p, const KernelConfig& cfg) {
  p.validate();
  const Eigen::MatrixXd cross = cross_kernel_matrix(p.test_x, p.train_x, rntk_kernel(cfg));
  return (cross * s.coefficients - p.test_y_clean).squaredNorm() / static_cast<double>(p.test_x.rows());
}

struct EarlyStoppingResult {
  std::size_t index = 0;
  FlowState state;
  std::vector<double> holdout_mse;
};

/// Holds out round(holdout_fraction * n) training points (seeded shuffle), refits
/// the flow on the rest at every recorded time and keeps the state with the lowest
/// holdout MSE. Ties go to the earliest time.
inline EarlyStoppingResult early_stopping_select(const std::vector<FlowState>& states, const RegressionProblem& p,
                                                 const DotKernel& g, double holdout_fraction,
                                                 std::uint64_t seed) {
  if (states.size() < 2) throw PreconditionError("early_stopping_select: need at least 2 states");
  if (!(holdout_fraction > 0.0 && holdout_fraction < 0.5)) {
    throw PreconditionError("early_stopping_select: holdout_fraction must lie in (0, 1/2)");
  }
  const Eigen::Index n = p.train_x.rows();
  if (n < 4) throw PreconditionError("early_stopping_select: need at least 4 training points");

  std::vector<Eigen::Index> idx(n);
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  Rng rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  const Eigen::Index n_hold =
      std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::lround(holdout_fraction * n)), 1, n - 1);

  RegressionProblem fitp;
  fitp.noise_sigma = p.noise_sigma;
  fitp.train_x.resize(n - n_hold, p.train_x.cols());
  fitp.train_y.resize(n - n_hold);
  fitp.test_x.resize(n_hold, p.train_x.cols());
  fitp.test_y_clean.resize(n_hold);  // holdout labels are the observed (noisy) targets
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index src = idx[i];
    if (i < n_hold) {
      fitp.test_x.row(i) = p.train_x.row(src);
      fitp.test_y_clean(i) = p.train_y(src);
    } else {
      fitp.train_x.row(i - n_hold) = p.train_x.row(src);
      fitp.train_y(i - n_hold) = p.train_y(src);
    }
  }

  std::vector<double> times;
  for (const auto& s : states) times.push_back(s.time);
  const KernelRegression reg(std::move(fitp), g);
  const std::vector<FlowState> refits = reg.gradient_flow(times);

  EarlyStoppingResult res;
  for (std::size_t i = 0; i < refits.size(); ++i) {
    res.holdout_mse.push_back(reg.excess_risk(refits[i]));
    if (res.holdout_mse[i] < res.holdout_mse[res.index]) res.index = i;
  }
  res.state = states[res.index];
  return res;
}

inline EarlyStoppingResult early_stopping_select(const std::vector<FlowState>& states, const RegressionProblem& p,
                                                 const KernelConfig& cfg, double holdout_fraction,
                                                 std::uint64_t seed) {
  return early_stopping_select(states, p, rntk_kernel(cfg), holdout_fraction, seed);
}

}  // namespace rntk
