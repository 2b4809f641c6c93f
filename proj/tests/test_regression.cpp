#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "rntk/experiments.hpp"
#include "rntk/regression.hpp"
#include "rntk/sampling.hpp"

using namespace rntk;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

RegressionProblem make_problem(int n_train, int n_test, int ambient, double sigma, std::uint64_t seed) {
  Rng rng(seed);
  RegressionProblem p;
  p.train_x = uniform_sphere(n_train, ambient, rng);
  p.test_x = uniform_sphere(n_test, ambient, rng);
  auto target = [](const Eigen::MatrixXd& x) {
    Eigen::VectorXd y(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) y(i) = std::sin(2.0 * x(i, 0)) + x(i, 1) * x(i, 2);
    return y;
  };
  std::normal_distribution<double> noise(0.0, 1.0);
  p.train_y = target(p.train_x);
  for (Eigen::Index i = 0; i < p.train_y.size(); ++i) p.train_y(i) += sigma * noise(rng);
  p.test_y_clean = target(p.test_x);
  p.noise_sigma = sigma;
  return p;
}

}  // namespace

TEST_CASE("flow starts from the zero predictor", "[regression][flow]") {
  const RegressionProblem p = make_problem(30, 10, 3, 0.1, 1);
  const KernelRegression reg(p, KernelConfig::constant_alpha(3, 1.0));
  const auto s = reg.gradient_flow({0.0});
  CHECK(s[0].train_predictions.cwiseAbs().maxCoeff() == 0.0);
  CHECK(reg.test_predictions(s[0]).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THAT(reg.excess_risk(s[0]), WithinRel(p.test_y_clean.squaredNorm() / 10.0, 1e-14));
}

TEST_CASE("long-time flow interpolates the training targets", "[regression][flow]") {
  const RegressionProblem p = make_problem(40, 10, 3, 0.2, 2);
  const KernelRegression reg(p, KernelConfig::constant_alpha(2, 1.0));
  const double t = 60.0 / reg.min_eigenvalue();
  const auto s = reg.gradient_flow({t});
  CHECK((s[0].train_predictions - p.train_y).cwiseAbs().maxCoeff() < 1e-8);
  const Eigen::VectorXd interp = reg.gram().entries().ldlt().solve(p.train_y);
  CHECK((s[0].coefficients - interp).cwiseAbs().maxCoeff() < 1e-6 * interp.cwiseAbs().maxCoeff());
}

TEST_CASE("single training point flow", "[regression][flow]") {
  RegressionProblem p;
  p.train_x = Eigen::MatrixXd(1, 3);
  p.train_x << 0, 0, 1;
  p.train_y = Eigen::VectorXd::Constant(1, 2.0);
  p.test_x = p.train_x;
  p.test_y_clean = p.train_y;
  const KernelRegression reg(p, KernelConfig::constant_alpha(5, 1.0));
  for (double t : {0.1, 1.0, 3.0}) {
    const auto s = reg.gradient_flow({t});
    CHECK_THAT(s[0].train_predictions(0), WithinRel(2.0 * (1.0 - std::exp(-t)), 1e-13));
  }
}

TEST_CASE("descent converges to flow as the step shrinks", "[regression][gd]") {
  const RegressionProblem p = make_problem(5, 10, 3, 0.1, 3);
  const KernelRegression reg(p, KernelConfig::constant_alpha(3, 1.0));
  const double T = 1.0;
  const Eigen::VectorXd flow = reg.test_predictions(reg.gradient_flow({T})[0]);
  double prev = 1e300;
  for (double lr : {1e-2, 1e-3, 1e-4, 1e-5}) {
    const int epochs = static_cast<int>(std::lround(T / lr));
    const auto states = reg.gradient_descent(lr, epochs, epochs);
    REQUIRE(states.back().epoch == epochs);
    CHECK_THAT(states.back().time, WithinRel(T, 1e-12));
    const double diff = (reg.test_predictions(states.back()) - flow).cwiseAbs().maxCoeff();
    CHECK(diff < prev);
    prev = diff;
  }
  CHECK(prev < 1e-5);
}

TEST_CASE("descent bookkeeping", "[regression][gd]") {
  const RegressionProblem p = make_problem(20, 5, 3, 0.1, 4);
  const KernelRegression reg(p, KernelConfig::constant_alpha(2, 1.0));
  const auto zero = reg.gradient_descent(0.01, 0);
  REQUIRE(zero.size() == 1);
  CHECK(zero[0].epoch == 0);
  CHECK(zero[0].coefficients.cwiseAbs().maxCoeff() == 0.0);
  const auto st = reg.gradient_descent(0.01, 25, 10);
  REQUIRE(st.size() == 4);
  CHECK(st[1].epoch == 10);
  CHECK(st[3].epoch == 25);
}

TEST_CASE("stable descent decreases the training loss monotonically", "[regression][gd][property]") {
  for (std::uint64_t seed : {5u, 6u, 7u}) {
    const RegressionProblem p = make_problem(30, 5, 4, 0.3, seed);
    const KernelRegression reg(p, KernelConfig(10, 0.5, 1.0));
    const double lr = 1.0 / reg.max_eigenvalue();
    const auto st = reg.gradient_descent(lr, 200);
    for (std::size_t i = 1; i < st.size(); ++i) REQUIRE(reg.train_loss(st[i]) <= reg.train_loss(st[i - 1]) + 1e-15);
  }
}

TEST_CASE("predictions are linear in the targets", "[regression][property]") {
  RegressionProblem a = make_problem(20, 8, 3, 0.0, 8);
  RegressionProblem b = a;
  RegressionProblem ab = a;
  Rng rng(80);
  std::normal_distribution<double> nd;
  for (Eigen::Index i = 0; i < b.train_y.size(); ++i) b.train_y(i) = nd(rng);
  ab.train_y = 2.0 * a.train_y - 0.5 * b.train_y;
  const KernelConfig cfg = KernelConfig::constant_alpha(4, 1.0);
  const KernelRegression ra(a, cfg), rb(b, cfg), rab(ab, cfg);
  for (double t : {0.3, 5.0}) {
    const Eigen::VectorXd pa = ra.test_predictions(ra.gradient_flow({t})[0]);
    const Eigen::VectorXd pb = rb.test_predictions(rb.gradient_flow({t})[0]);
    const Eigen::VectorXd pab = rab.test_predictions(rab.gradient_flow({t})[0]);
    CHECK((pab - (2.0 * pa - 0.5 * pb)).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("zero predictor risk equals the target second moment", "[regression][risk]") {
  // f*(x) = sqrt(3) x_1 has unit second moment under the uniform law on S^2.
  Rng rng(11);
  RegressionProblem p;
  p.train_x = uniform_sphere(10, 3, rng);
  p.test_x = uniform_sphere(2000, 3, rng);
  p.train_y = std::sqrt(3.0) * p.train_x.col(0);
  p.test_y_clean = std::sqrt(3.0) * p.test_x.col(0);
  const KernelConfig cfg = KernelConfig::constant_alpha(2, 1.0);
  const auto s = fit_gradient_flow(p, cfg, {0.0});
  CHECK_THAT(excess_risk(s[0], p, cfg), WithinAbs(1.0, 0.15));
}

TEST_CASE("zero predictor risk on the linear data model", "[regression][risk]") {
  // Default data set: f*(x) = <x, (1,1,1)>, 40 test points. E <x, beta>^2 = |beta|^2 / 3 = 1.
  const RegressionProblem p = gen_data(DataOptions{}).problem();
  REQUIRE(p.test_x.rows() == 40);
  const KernelConfig cfg = KernelConfig::constant_alpha(2, 1.0);
  CHECK_THAT(excess_risk(fit_gradient_flow(p, cfg, {0.0})[0], p, cfg), WithinAbs(1.0, 0.15));
}

TEST_CASE("constant-kernel regime cannot fit the linear target", "[regression][risk]") {
  const RegressionProblem p = gen_data(DataOptions{}).problem();
  const KernelRegression reg(p, KernelConfig::constant_alpha(3000, 1.0));
  std::vector<double> times{0.0};
  for (int i = 0; i <= 40; ++i) times.push_back(std::pow(10.0, -3.0 + i * 0.2));
  const auto states = reg.gradient_flow(times);
  const double zero_risk = reg.excess_risk(states[0]);
  for (const auto& s : states) REQUIRE(reg.excess_risk(s) > 0.5 * zero_risk);

  // Oracle: the same flow with the explicit matrix 0.25 J + 0.75 I on the training set and
  // cross kernel 0.25 everywhere, so f_t(x) = 0.25 * sum(c_t) at every test point.
  const Eigen::Index n = p.train_x.rows();
  const Eigen::MatrixXd K = 0.25 * Eigen::MatrixXd::Ones(n, n) + 0.75 * Eigen::MatrixXd::Identity(n, n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K);
  const Eigen::VectorXd qy = es.eigenvectors().transpose() * p.train_y;
  for (double t : times) {
    Eigen::VectorXd c = qy;
    for (Eigen::Index i = 0; i < n; ++i) c(i) *= -std::expm1(-t * es.eigenvalues()(i)) / es.eigenvalues()(i);
    const double level = 0.25 * (es.eigenvectors() * c).sum();
    const double risk = (p.test_y_clean.array() - level).square().mean();
    REQUIRE(risk > 0.5 * zero_risk);
  }
}

TEST_CASE("deep constant-alpha kernel behaves like a constant plus identity", "[regression][risk]") {
  // With K close to 0.75 I + 0.25 J, long-time predictions at test points are close to
  // 0.25 * sum(c), nearly constant across inputs.
  const RegressionProblem p = make_problem(30, 30, 3, 0.1, 12);
  const KernelRegression reg(p, KernelConfig::constant_alpha(3000, 1.0));
  const auto s = reg.gradient_flow({200.0});
  const Eigen::VectorXd pred = reg.test_predictions(s[0]);
  const double spread = pred.maxCoeff() - pred.minCoeff();
  const double yspread = p.train_y.maxCoeff() - p.train_y.minCoeff();
  CHECK(spread < 0.2 * yspread);
}

TEST_CASE("gamma = 1 excess risk tracks the fast-decay limit kernel", "[regression][limit]") {
  const RegressionProblem p = make_problem(30, 20, 3, 0.1, 13);
  const KernelRegression deep(p, KernelConfig(512, 1.0, 1.0));
  const KernelRegression lim(p, DotKernel(limit_kernel_fast_decay));
  // Training horizons comparable to the regress experiment (lr * epochs = 0.3).
  for (double t : {0.3, 0.5, 2.0}) {
    const double a = deep.excess_risk(deep.gradient_flow({t})[0]);
    const double b = lim.excess_risk(lim.gradient_flow({t})[0]);
    CHECK(std::abs(a - b) < 1e-3);
  }
  // Long horizons amplify the O(1/L) kernel error but it still shrinks with depth.
  const double b = lim.excess_risk(lim.gradient_flow({20.0})[0]);
  double prev = 1e300;
  for (int L : {128, 256, 512}) {
    const KernelRegression d(p, KernelConfig(L, 1.0, 1.0));
    const double gap = std::abs(d.excess_risk(d.gradient_flow({20.0})[0]) - b);
    CHECK(gap < 0.7 * prev);
    prev = gap;
  }
}

TEST_CASE("early stopping", "[regression][early]") {
  const RegressionProblem p = make_problem(60, 30, 3, 0.5, 14);
  const KernelConfig cfg = KernelConfig::constant_alpha(3, 1.0);
  const KernelRegression reg(p, cfg);
  std::vector<double> times;
  for (int i = 0; i <= 30; ++i) times.push_back(std::pow(10.0, -2.0 + i * 0.2));
  const auto states = reg.gradient_flow(times);
  const EarlyStoppingResult r = early_stopping_select(states, p, cfg, 0.2, 0);
  REQUIRE(r.holdout_mse.size() == states.size());
  for (double v : r.holdout_mse) CHECK(r.holdout_mse[r.index] <= v);
  CHECK(r.state.time == states[r.index].time);
  CHECK(r.index > 0);
  CHECK(r.index < states.size() - 1);

  // Same seed, same answer; holdout fraction sanity.
  CHECK(early_stopping_select(states, p, cfg, 0.2, 0).index == r.index);
  CHECK_THROWS_AS(early_stopping_select(states, p, cfg, 0.5, 0), PreconditionError);
  CHECK_THROWS_AS(early_stopping_select({states[0]}, p, cfg, 0.2, 0), PreconditionError);

  // Identical states tie; the earliest wins.
  const std::vector<FlowState> same(3, states[5]);
  CHECK(early_stopping_select(same, p, cfg, 0.2, 0).index == 0);
}

TEST_CASE("early stopping without noise picks a late time", "[regression][early]") {
  // Linear data model without noise, recorded on the regress grid (lr 1e-4, 3000 epochs, every 10th).
  DataOptions d;
  d.noise = 0.0;
  const RegressionProblem p = gen_data(d).problem();
  const KernelConfig cfg = KernelConfig::constant_alpha(50, 1.0);
  std::vector<double> times;
  for (int e = 0; e <= 3000; e += 10) times.push_back(1e-4 * e);
  const auto states = KernelRegression(p, cfg).gradient_flow(times);
  const EarlyStoppingResult r = early_stopping_select(states, p, cfg, 0.2, 0);
  CHECK(r.index + 1 >= states.size() - states.size() / 10);
}

TEST_CASE("early stopping with noise stops before the end", "[regression][early]") {
  const KernelConfig cfg = KernelConfig::constant_alpha(2, 1.0);
  int earlier = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    DataOptions d;
    d.n = 60;
    d.n_train = 40;
    d.noise = 1.0;
    d.seed = seed;
    const RegressionProblem p = gen_data(d).problem();
    std::vector<double> times;
    for (int i = 0; i <= 40; ++i) times.push_back(std::pow(10.0, -2.0 + i * 0.15));
    const auto states = KernelRegression(p, cfg).gradient_flow(times);
    earlier += early_stopping_select(states, p, cfg, 0.2, seed).index + 1 < states.size();
  }
  CHECK(earlier >= 8);
}

TEST_CASE("early stopping over two states returns the better one", "[regression][early]") {
  const RegressionProblem p = make_problem(20, 5, 3, 0.1, 22);
  const KernelConfig cfg = KernelConfig::constant_alpha(2, 1.0);
  const auto states = KernelRegression(p, cfg).gradient_flow({0.0, 5.0});
  const EarlyStoppingResult r = early_stopping_select(states, p, cfg, 0.25, 1);
  CHECK(r.holdout_mse[r.index] == std::min(r.holdout_mse[0], r.holdout_mse[1]));
  CHECK(r.index == 1);
}

TEST_CASE("regression error conditions", "[regression][errors]") {
  RegressionProblem p = make_problem(10, 5, 3, 0.1, 15);
  p.train_x.row(3) = p.train_x.row(2);
  const KernelRegression reg(p, KernelConfig::constant_alpha(2, 1.0));
  try {
    reg.gradient_flow({1.0});
    FAIL("expected IllConditionedError");
  } catch (const IllConditionedError& e) {
    CHECK(e.min_eigenvalue() < 1e-9);
  }

  const RegressionProblem q = make_problem(10, 5, 3, 0.1, 16);
  const KernelRegression r2(q, KernelConfig::constant_alpha(2, 1.0));
  CHECK_THROWS_AS(r2.gradient_descent(2.5 / r2.max_eigenvalue(), 10), PreconditionError);
  CHECK_THROWS_AS(r2.gradient_flow({1.0, 0.5}), PreconditionError);

  RegressionProblem bad = q;
  bad.train_y.resize(3);
  CHECK_THROWS_AS(KernelRegression(bad, KernelConfig::constant_alpha(2, 1.0)), PreconditionError);
}
