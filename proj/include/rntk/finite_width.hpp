#pragma once

// Finite-width residual network
//   x_0 = A x / sqrt(m),  h_l = sqrt(2/m) W_l x_{l-1},
//   x_l = x_{l-1} + (alpha / sqrt(m)) V_l relu(h_l),  f(x) = v^T x_L,
// with hand-written reverse mode, the empirical RNK over the trainable W_l, V_l,
// mirror pairing and full-batch gradient descent.
//
// Activations of a batch are stored column-wise (m x N).

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "rntk/errors.hpp"
#include "rntk/kernel.hpp"
#include "rntk/regression.hpp"
#include "rntk/sampling.hpp"

namespace rntk {

class FiniteNet {
 public:
  /// All parameters i.i.d. N(0, 1), drawn in the order A, (W_1, V_1), ..., (W_L, V_L), v.
  static FiniteNet random(int width, int input_dim, int depth, double alpha, std::uint64_t seed) {
    if (width < 1 || input_dim < 1 || depth < 1) throw PreconditionError("FiniteNet: sizes must be >= 1");
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw PreconditionError("FiniteNet: alpha must be >= 0");
    FiniteNet net;
    net.alpha = alpha;
    net.seed = seed;
    Rng rng(seed);
    net.A = gaussian_matrix(width, input_dim, rng);
    for (int l = 0; l < depth; ++l) {
      net.W.push_back(gaussian_matrix(width, width, rng));
      net.V.push_back(gaussian_matrix(width, width, rng));
    }
    net.v = gaussian_matrix(width, 1, rng).col(0);
    return net;
  }

  int width() const { return static_cast<int>(A.rows()); }
  int input_dim() const { return static_cast<int>(A.cols()); }
  int depth() const { return static_cast<int>(W.size()); }

  double alpha = 0.0;
  std::uint64_t seed = 0;
  Eigen::MatrixXd A;
  std::vector<Eigen::MatrixXd> W;
  std::vector<Eigen::MatrixXd> V;
  Eigen::VectorXd v;
};

/// Forward activations of a batch: xs[l] = x_l (l = 0..L), hs[l-1] = h_l, ss[l-1] = relu(h_l).
struct BatchForward {
  std::vector<Eigen::MatrixXd> xs;
  std::vector<Eigen::MatrixXd> hs;
  std::vector<Eigen::MatrixXd> ss;
  Eigen::VectorXd output;
};

namespace detail {

inline Eigen::MatrixXd inputs_as_columns(const FiniteNet& net, const Eigen::MatrixXd& points) {
  if (points.cols() != net.input_dim()) throw PreconditionError("input dimension does not match the network");
  check_unit_rows(points);
  return points.transpose();
}

inline Eigen::MatrixXd relu(const Eigen::MatrixXd& h) { return h.cwiseMax(0.0); }

// relu'(h) with the derivative at 0 taken as 0.
inline Eigen::MatrixXd relu_grad(const Eigen::MatrixXd& h) {
  return (h.array() > 0.0).cast<double>().matrix();
}

}  // namespace detail

/// Rows of `points` are inputs.
inline BatchForward forward_batch(const FiniteNet& net, const Eigen::MatrixXd& points) {
  const double m = net.width();
  const double in_scale = 1.0 / std::sqrt(m), w_scale = std::sqrt(2.0 / m), v_scale = net.alpha / std::sqrt(m);
  BatchForward fw;
  fw.xs.push_back(in_scale * (net.A * detail::inputs_as_columns(net, points)));
  for (int l = 0; l < net.depth(); ++l) {
    fw.hs.push_back(w_scale * (net.W[l] * fw.xs.back()));
    fw.ss.push_back(detail::relu(fw.hs.back()));
    fw.xs.push_back(fw.xs.back() + v_scale * (net.V[l] * fw.ss.back()));
  }
  fw.output = (net.v.transpose() * fw.xs.back()).transpose();
  return fw;
}

struct ForwardRecord {
  double output = 0.0;
  std::vector<Eigen::VectorXd> xs;
  std::vector<Eigen::VectorXd> hs;
};

inline ForwardRecord forward(const FiniteNet& net, const Eigen::VectorXd& x) {
  const BatchForward fw = forward_batch(net, x.transpose());
  ForwardRecord r;
  r.output = fw.output(0);
  for (const auto& m : fw.xs) r.xs.push_back(m.col(0));
  for (const auto& m : fw.hs) r.hs.push_back(m.col(0));
  return r;
}

/// Per-sample backward factors. With b_L = v,
///   g_l = relu'(h_l) .* (alpha/sqrt(m)) V_l^T b_l,  b_{l-1} = b_l + sqrt(2/m) W_l^T g_l,
/// the gradients of f are dV_l = (alpha/sqrt(m)) b_l s_l^T and dW_l = sqrt(2/m) g_l x_{l-1}^T.
/// bs[l-1] = b_l, gs[l-1] = g_l, each m x N.
struct BatchBackward {
  std::vector<Eigen::MatrixXd> bs;
  std::vector<Eigen::MatrixXd> gs;
};

inline BatchBackward backward_batch(const FiniteNet& net, const BatchForward& fw) {
  const double m = net.width();
  const double w_scale = std::sqrt(2.0 / m), v_scale = net.alpha / std::sqrt(m);
  const int L = net.depth();
  const Eigen::Index N = fw.output.size();
  BatchBackward bw;
  bw.bs.resize(L);
  bw.gs.resize(L);
  Eigen::MatrixXd b = net.v.replicate(1, N);
  for (int l = L - 1; l >= 0; --l) {
    bw.gs[l] = detail::relu_grad(fw.hs[l]).cwiseProduct(v_scale * (net.V[l].transpose() * b));
    bw.bs[l] = b;
    b += w_scale * (net.W[l].transpose() * bw.gs[l]);
  }
  return bw;
}

/// Dense gradient of f(x) with respect to every W_l and V_l.
struct NetGradient {
  std::vector<Eigen::MatrixXd> dW;
  std::vector<Eigen::MatrixXd> dV;

  double dot(const NetGradient& o) const {
    double acc = 0.0;
    for (std::size_t l = 0; l < dW.size(); ++l) {
      acc += dW[l].cwiseProduct(o.dW[l]).sum() + dV[l].cwiseProduct(o.dV[l]).sum();
    }
    return acc;
  }
};

inline NetGradient grad_theta(const FiniteNet& net, const Eigen::VectorXd& x) {
  const BatchForward fw = forward_batch(net, x.transpose());
  const BatchBackward bw = backward_batch(net, fw);
  const double m = net.width();
  const double w_scale = std::sqrt(2.0 / m), v_scale = net.alpha / std::sqrt(m);
  NetGradient g;
  for (int l = 0; l < net.depth(); ++l) {
    g.dW.push_back(w_scale * bw.gs[l].col(0) * fw.xs[l].col(0).transpose());
    g.dV.push_back(v_scale * bw.bs[l].col(0) * fw.ss[l].col(0).transpose());
  }
  return g;
}

/// Gram matrix of the empirical RNK <grad f(x_i), grad f(x_j)> over the trainable
/// parameters, computed from rank-one factors:
///   sum_l (alpha^2/m) (b_l^T b_l') (s_l^T s_l') + (2/m) (g_l^T g_l') (x_{l-1}^T x_{l-1}').
inline Eigen::MatrixXd rnk_gram(const FiniteNet& net, const Eigen::MatrixXd& points) {
  const BatchForward fw = forward_batch(net, points);
  const BatchBackward bw = backward_batch(net, fw);
  const double m = net.width();
  const Eigen::Index N = points.rows();
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(N, N);
  for (int l = 0; l < net.depth(); ++l) {
    const Eigen::MatrixXd bb = bw.bs[l].transpose() * bw.bs[l];
    const Eigen::MatrixXd ss = fw.ss[l].transpose() * fw.ss[l];
    const Eigen::MatrixXd gg = bw.gs[l].transpose() * bw.gs[l];
    const Eigen::MatrixXd xx = fw.xs[l].transpose() * fw.xs[l];
    G += (net.alpha * net.alpha / m) * bb.cwiseProduct(ss) + (2.0 / m) * gg.cwiseProduct(xx);
  }
  return G;
}

inline double empirical_rnk(const FiniteNet& net, const Eigen::VectorXd& x, const Eigen::VectorXd& x2) {
  Eigen::MatrixXd pts(2, x.size());
  pts.row(0) = x.transpose();
  pts.row(1) = x2.transpose();
  return rnk_gram(net, pts)(0, 1);
}

/// The empirical RNK of this parameterization converges to s r^{(L)} with
/// s = 2 L alpha^2 (1 + alpha^2)^{L-1}.
inline double rnk_scale(int depth, double alpha) {
  if (depth < 1 || !(alpha > 0.0)) throw PreconditionError("rnk_scale: requires depth >= 1 and alpha > 0");
  const double a2 = alpha * alpha;
  return 2.0 * depth * a2 * std::exp((depth - 1) * std::log1p(a2));
}

/// Empirical RNK divided by rnk_scale, directly comparable with r^{(L)}.
inline Eigen::MatrixXd normalized_rnk_gram(const FiniteNet& net, const Eigen::MatrixXd& points) {
  return rnk_gram(net, points) / rnk_scale(net.depth(), net.alpha);
}

inline double normalized_empirical_rnk(const FiniteNet& net, const Eigen::VectorXd& x, const Eigen::VectorXd& x2) {
  return empirical_rnk(net, x, x2) / rnk_scale(net.depth(), net.alpha);
}

// ---------------------------------------------------------------------------
// Mirror pair and training.

/// Two copies with identical initial parameters, combined as f = (f_plus - f_minus) / sqrt(2).
/// The output vanishes at initialization and the pair's tangent kernel equals that of one copy.
struct MirrorPair {
  FiniteNet net_plus;
  FiniteNet net_minus;

  static MirrorPair random(int width, int input_dim, int depth, double alpha, std::uint64_t seed) {
    FiniteNet net = FiniteNet::random(width, input_dim, depth, alpha, seed);
    FiniteNet copy = net;
    return {std::move(net), std::move(copy)};
  }

  static constexpr double combination() { return 0.70710678118654752440; }

  Eigen::VectorXd predict(const Eigen::MatrixXd& points) const {
    return combination() * (forward_batch(net_plus, points).output - forward_batch(net_minus, points).output);
  }
};

struct TrainRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double test_excess_risk = 0.0;
  Eigen::VectorXd test_predictions;
};

namespace detail {

// One descent step on one half from a forward pass whose first N columns are the
// training inputs. `residual_weights` (length N) multiplies each sample's output
// gradient; layer l is updated as soon as b_{l-1} no longer needs it.
inline void descend_half(FiniteNet& net, const BatchForward& fw, const Eigen::VectorXd& residual_weights,
                         double step) {
  const double m = net.width();
  const double w_scale = std::sqrt(2.0 / m), v_scale = net.alpha / std::sqrt(m);
  const Eigen::Index N = residual_weights.size();
  Eigen::MatrixXd b = net.v * residual_weights.transpose();
  for (int l = net.depth() - 1; l >= 0; --l) {
    const Eigen::MatrixXd g =
        relu_grad(fw.hs[l].leftCols(N)).cwiseProduct(v_scale * (net.V[l].transpose() * b));
    Eigen::MatrixXd b_prev = b + w_scale * (net.W[l].transpose() * g);
    net.V[l].noalias() -= (step * v_scale) * (b * fw.ss[l].leftCols(N).transpose());
    net.W[l].noalias() -= (step * w_scale) * (g * fw.xs[l].leftCols(N).transpose());
    b = std::move(b_prev);
  }
}

}  // namespace detail

/// Full-batch gradient descent on (1/2n) sum_i (f(x_i) - y_i)^2 over W_l, V_l of both
/// halves. Records epoch 0, every `stride`-th epoch and the last.
inline std::vector<TrainRecord> train_network(MirrorPair& pair, const RegressionProblem& problem, double lr,
                                              int epochs, int stride = 1) {
  problem.validate();
  if (!(lr > 0.0) || epochs < 0 || stride < 1) throw PreconditionError("train_network: bad lr/epochs/stride");
  const Eigen::Index n = problem.train_x.rows(), n_test = problem.test_x.rows();
  {
    const Eigen::MatrixXd theta = rnk_gram(pair.net_plus, problem.train_x);
    const double lmax = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(theta, Eigen::EigenvaluesOnly)
                            .eigenvalues()(n - 1);
    if (!(lr * lmax / static_cast<double>(n) < 2.0)) {
      throw PreconditionError("train_network: lr * lambda_max(RNK) / n = " +
                              std::to_string(lr * lmax / static_cast<double>(n)) + " >= 2; reduce lr");
    }
  }
  // Train and test inputs share one forward pass per epoch.
  Eigen::MatrixXd all(n + n_test, problem.train_x.cols());
  all << problem.train_x, problem.test_x;
  const double c = MirrorPair::combination();
  std::vector<TrainRecord> out;
  std::vector<double> loss_hist;
  for (int e = 0;; ++e) {
    const BatchForward fp = forward_batch(pair.net_plus, all);
    const BatchForward fm = forward_batch(pair.net_minus, all);
    const Eigen::VectorXd f = c * (fp.output - fm.output);
    const Eigen::VectorXd r = f.head(n) - problem.train_y;
    const double loss = 0.5 * r.squaredNorm() / static_cast<double>(n);
    if (e > 0) {
      loss_hist.push_back(loss);
      if (!std::isfinite(loss) || (loss_hist.size() > 10 && loss > 10.0 * loss_hist[loss_hist.size() - 11])) {
        throw DivergenceError("train_network diverged at epoch " + std::to_string(e) + "; use a smaller lr");
      }
    }
    if (e % stride == 0 || e == epochs) {
      const Eigen::VectorXd pred = f.tail(n_test);
      out.push_back({e, loss, (pred - problem.test_y_clean).squaredNorm() / static_cast<double>(n_test), pred});
    }
    if (e == epochs) break;
    // d loss / d theta_plus = (c/n) sum_i r_i grad f_plus(x_i); the minus half enters with -c.
    const Eigen::VectorXd w = (c / static_cast<double>(n)) * r;
    detail::descend_half(pair.net_plus, fp, w, lr);
    detail::descend_half(pair.net_minus, fm, -w, lr);
  }
  return out;
}

/// ||theta_T - theta_0|| / ||theta_0|| over the trainable parameters of both halves.
/// theta_0 is regenerated from the pair's seed, one layer at a time.
inline double relative_parameter_movement(const MirrorPair& pair) {
  const FiniteNet& p = pair.net_plus;
  const FiniteNet init = FiniteNet::random(p.width(), p.input_dim(), p.depth(), p.alpha, p.seed);
  double diff2 = 0.0, norm2 = 0.0;
  for (int l = 0; l < p.depth(); ++l) {
    for (const FiniteNet* half : {&pair.net_plus, &pair.net_minus}) {
      diff2 += (half->W[l] - init.W[l]).squaredNorm() + (half->V[l] - init.V[l]).squaredNorm();
      norm2 += init.W[l].squaredNorm() + init.V[l].squaredNorm();
    }
  }
  return std::sqrt(diff2 / norm2);
}

}  // namespace rntk
