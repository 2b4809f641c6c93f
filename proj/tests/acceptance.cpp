// Acceptance checks 1-10. One PASS/FAIL line per criterion; exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "rntk/rntk.hpp"

using namespace rntk;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

// 1. Mean kernel value over random pairs approaches 1/4 with depth.
Outcome degeneration() {
  SweepOptions o;
  o.scales = {1.0, 2.0, 4.0, 8.0};
  o.depths = {100, 3000};
  o.reps = 100;
  o.dim = 3;
  const SweepReport rep = kernel_sweep(o);
  Outcome out;
  const double m1 = rep.at(1.0, 3000).mean_value;
  out.pass = std::abs(m1 - 0.25) <= 0.02;
  std::ostringstream d;
  d << "mean(alpha=1, L=3000)=" << fmt(m1);
  for (double c : o.scales) {
    const double a = std::abs(rep.at(c, 100).mean_value - 0.25), b = std::abs(rep.at(c, 3000).mean_value - 0.25);
    d << "; alpha=" << c << ": |dev| L=100 " << fmt(a) << " > L=3000 " << fmt(b);
    out.pass = out.pass && b < a;
  }
  out.detail = d.str();
  return out;
}

// 2. Unit diagonal for random depths and scales.
Outcome diagonal() {
  Rng rng(2);
  std::uniform_int_distribution<int> depth(1, 3000);
  std::uniform_real_distribution<double> log_alpha(std::log(0.01), std::log(10.0));
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const KernelConfig cfg = KernelConfig::constant_alpha(depth(rng), std::exp(log_alpha(rng)));
    Eigen::MatrixXd x = uniform_sphere(3, 3, rng);
    worst = std::max(worst, std::abs(rntk_value(1.0, cfg).value - 1.0));
    worst = std::max(worst, std::abs(rntk_eval(1.0, cfg) - 1.0));
    const Eigen::MatrixXd K = kernel_matrix(x, cfg).entries();
    for (int j = 0; j < 3; ++j) worst = std::max(worst, std::abs(K(j, j) - 1.0));
    x.row(1) = x.row(0);
    const Eigen::MatrixXd C = cross_kernel_matrix(x, x, rntk_kernel(cfg));
    worst = std::max(worst, std::abs(C(0, 1) - 1.0));
    for (int j = 0; j < 3; ++j) worst = std::max(worst, std::abs(C(j, j) - 1.0));
  }
  return {worst <= 1e-12, "max |r(x,x) - 1| = " + fmt(worst) + " over 100 configs"};
}

// 3. Convergence rate to the one-layer kernel for alpha = 1/L.
Outcome fast_decay_rate() {
  Outcome out{true, ""};
  std::ostringstream d;
  double lo = 1e300, hi = -1e300;
  for (double u : {-0.5, 0.0, 0.5}) {
    const double r1 = limit_kernel_fast_decay(u);
    for (int L : {64, 128, 256}) {
      const double a = std::abs(rntk_eval(u, KernelConfig(L, 1.0, 1.0)) - r1);
      const double b = std::abs(rntk_eval(u, KernelConfig(2 * L, 1.0, 1.0)) - r1);
      const double ratio = a / b;
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
      out.pass = out.pass && ratio >= 1.5 && ratio <= 3.0;
    }
  }
  d << "ratios in [" << fmt(lo) << ", " << fmt(hi) << "] for u0 in {-0.5, 0, 0.5}, L in {64, 128, 256}";
  out.detail = d.str();
  return out;
}

// 4. One-layer eigenvalues: closed form vs quadrature, and vs a Nystrom estimate.
Outcome eigenvalues() {
  const SphereDim n(2);
  const EigenSpectrum cf = rntk1_eigenvalues(n, 12);
  const EigenSpectrum q = coeffs_to_eigenvalues(expand_kernel(limit_kernel_fast_decay, n, 12));
  const double scale = *std::max_element(cf.eigenvalues.begin(), cf.eigenvalues.end());
  double worst = 0.0;
  for (int k = 0; k <= 12; ++k) {
    const double a = cf.eigenvalues[k];
    worst = std::max(worst, a != 0.0 ? std::abs(q.eigenvalues[k] - a) / std::abs(a) : std::abs(q.eigenvalues[k]) / scale);
  }

  const int N = 2000;
  Eigen::MatrixXd x(N, 3);
  for (int i = 0; i < N; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / N;
    const double r = std::sqrt(1.0 - z * z);
    const double phi = kPi * (1.0 + std::sqrt(5.0)) * i;
    x.row(i) << r * std::cos(phi), r * std::sin(phi), z;
  }
  x.rowwise().normalize();
  const Eigen::MatrixXd G = kernel_matrix(x, KernelConfig::constant_alpha(1, 1.0)).entries() * (4.0 * kPi / N);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G, Eigen::EigenvaluesOnly);
  std::vector<double> ny(es.eigenvalues().data(), es.eigenvalues().data() + N);
  std::sort(ny.rbegin(), ny.rend());
  std::vector<int> order;
  for (int k = 0; k <= 12; ++k) {
    if (cf.eigenvalues[k] > 0.0) order.push_back(k);
  }
  std::sort(order.begin(), order.end(), [&](int a, int b) { return cf.eigenvalues[a] > cf.eigenvalues[b]; });
  double worst_ny = 0.0;
  std::size_t pos = 0;
  for (int k : order) {
    const int mult = static_cast<int>(std::lround(cf.multiplicities[k]));
    double mean = 0.0;
    for (int j = 0; j < mult; ++j) mean += ny[pos + j] / mult;
    pos += mult;
    if (k <= 4) worst_ny = std::max(worst_ny, std::abs(mean - cf.eigenvalues[k]) / cf.eigenvalues[k]);
  }
  return {worst <= 1e-6 && worst_ny <= 0.03,
          "max rel closed-vs-quadrature (k<=12) = " + fmt(worst) + "; max rel Nystrom (k<=4, N=2000) = " + fmt(worst_ny)};
}

// 5. Positive definite Gram matrices for L = 2.
Outcome positive_definite() {
  double lmin = 1e300;
  bool pass = true;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    const PositiveDefinitenessReport r =
        positive_definiteness_report(uniform_sphere(50, 3, rng), KernelConfig::constant_alpha(2, 1.0));
    lmin = std::min(lmin, r.min_eigenvalue);
    pass = pass && r.min_eigenvalue > 1e-10 * 50;
  }
  return {pass, "smallest lambda_min over 10 seeds = " + fmt(lmin) + " (threshold 5e-9)"};
}

// 6. Maclaurin coefficients of the arc-cosine kernels are non-negative.
Outcome maclaurin() {
  const SeriesCoeffs a = kappa0_maclaurin(60), b = kappa1_maclaurin(60);
  double m = 1e300;
  for (double c : a.coeffs) m = std::min(m, c);
  for (double c : b.coeffs) m = std::min(m, c);
  return {m >= 0.0, "min coefficient up to order 60 = " + fmt(m)};
}

// 7. alpha = 1/L generalizes better than alpha = 1 on the synthetic linear model.
Outcome ordering() {
  const int burn_in = 50;
  bool pass = true;
  int ok = 0, total = 0;
  double min_margin = 1e300;
  for (int L : {50, 200}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      DataOptions d;
      d.seed = seed;
      RegressOptions r;
      r.L = L;
      r.lr = 1e-4;
      r.epochs = 3000;
      r.seed = seed;
      r.compare = true;
      const RegressReport rep = regress(gen_data(d), r);
      const auto fast = rep.test_curve(regress_experiment_id(L, 1.0, 1.0));
      const auto flat = rep.test_curve(regress_experiment_id(L, 0.0, 1.0));
      const auto steps = rep.steps(regress_experiment_id(L, 1.0, 1.0));
      bool below = true;
      for (std::size_t i = 0; i < steps.size(); ++i) {
        if (steps[i] <= burn_in) continue;
        below = below && fast[i] < flat[i];
        min_margin = std::min(min_margin, flat[i] - fast[i]);
      }
      ok += below;
      ++total;
      pass = pass && below;
    }
  }
  return {pass, std::to_string(ok) + "/" + std::to_string(total) +
                    " (L, seed) runs ordered after epoch 50 of 3000; smallest margin = " + fmt(min_margin)};
}

// 8. Reverse-mode gradients against central differences.
Outcome gradients() {
  const int m = 64, L = 3;
  Rng prng(8);
  const FiniteNet net = FiniteNet::random(m, 3, L, 1.0, 8);
  const Eigen::VectorXd x = uniform_sphere(1, 3, prng).row(0).transpose();
  const NetGradient g = grad_theta(net, x);
  std::uniform_int_distribution<int> layer(0, L - 1), idx(0, m - 1), which(0, 1);
  const double h = 1e-4;
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const int l = layer(prng), i = idx(prng), j = idx(prng);
    const bool isW = which(prng) == 0;
    FiniteNet p = net, q = net;
    (isW ? p.W[l] : p.V[l])(i, j) += h;
    (isW ? q.W[l] : q.V[l])(i, j) -= h;
    const double fd = (forward(p, x).output - forward(q, x).output) / (2.0 * h);
    const double an = (isW ? g.dW[l] : g.dV[l])(i, j);
    const double rel = an == 0.0 && fd == 0.0 ? 0.0 : std::abs(fd - an) / std::max(std::abs(an), std::abs(fd));
    worst = std::max(worst, rel);
  }
  return {worst < 1e-4, "max relative error over 20 coordinates = " + fmt(worst)};
}

// 9. Network-vs-kernel gaps shrink with width.
Outcome width_trend() {
  const FiniteWidthReport rep = finite_width(FiniteWidthOptions{});
  bool pass = true;
  std::ostringstream d;
  for (std::size_t i = 0; i < rep.summaries.size(); ++i) {
    const auto& s = rep.summaries[i];
    d << (i ? "; " : "") << "m=" << s.m << " init " << fmt(s.median_init_gap) << " trained "
      << fmt(s.median_train_gap);
    if (i > 0) {
      pass = pass && s.median_init_gap < rep.summaries[i - 1].median_init_gap &&
             s.median_train_gap < rep.summaries[i - 1].median_train_gap;
    }
  }
  d << " (excess-risk gap m=" << rep.summaries.front().m << " " << fmt(rep.summaries.front().median_risk_gap)
    << ", m=" << rep.summaries.back().m << " " << fmt(rep.summaries.back().median_risk_gap) << ")";
  return {pass, d.str()};
}

// 10. Gradient descent approaches the closed-form flow as the step shrinks.
Outcome flow_descent() {
  Rng rng(10);
  RegressionProblem p;
  p.train_x = uniform_sphere(5, 3, rng);
  p.test_x = uniform_sphere(5, 3, rng);
  p.train_y = p.train_x.col(0) + p.train_x.col(1).cwiseProduct(p.train_x.col(2));
  p.test_y_clean = p.test_x.col(0) + p.test_x.col(1).cwiseProduct(p.test_x.col(2));
  const KernelRegression reg(p, KernelConfig::constant_alpha(3, 1.0));
  const double T = 2.0;
  const FlowState flow = reg.gradient_flow({T})[0];
  const Eigen::VectorXd ftest = reg.test_predictions(flow);
  std::ostringstream d;
  double last = 0.0;
  bool decreasing = true;
  double prev = 1e300;
  for (double lr : {1e-2, 1e-3, 1e-4, 1e-5}) {
    const int epochs = static_cast<int>(std::lround(T / lr));
    const FlowState s = reg.gradient_descent(lr, epochs, epochs).back();
    last = std::max((s.train_predictions - flow.train_predictions).cwiseAbs().maxCoeff(),
                    (reg.test_predictions(s) - ftest).cwiseAbs().maxCoeff());
    d << "lr=" << lr << ": " << fmt(last) << "; ";
    decreasing = decreasing && last < prev;
    prev = last;
  }
  d << "final < 1e-5 required";
  return {decreasing && last < 1e-5, d.str()};
}

}  // namespace

int main() {
  struct Criterion {
    std::string name;
    std::function<Outcome()> run;
    double time_limit;  // seconds
  };
  // "Seconds"-scale runtimes are capped at 30 s.
  const std::vector<Criterion> criteria = {
      {"degeneration to 1/4", degeneration, 120},
      {"diagonal exactness", diagonal, 30},
      {"fast-decay limit rate", fast_decay_rate, 30},
      {"one-layer eigenvalues", eigenvalues, 60},
      {"positive definiteness", positive_definite, 30},
      {"Maclaurin non-negativity", maclaurin, 1},
      {"generalization ordering", ordering, 120},
      {"gradient correctness", gradients, 30},
      {"width trend", width_trend, 600},
      {"flow/descent equivalence", flow_descent, 30},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > criteria[i].time_limit) {
      o.pass = false;
      o.detail += " [over the " + fmt(criteria[i].time_limit) + " s limit]";
    }
    std::printf("%s criterion %zu (%s): %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].name.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
