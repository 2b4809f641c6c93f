#pragma once

// Experiment drivers behind the rntk_lab subcommands. Each returns plain rows plus
// helpers that render them as CSV and SVG; nothing here touches the filesystem.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "rntk/errors.hpp"
#include "rntk/finite_width.hpp"
#include "rntk/kernel.hpp"
#include "rntk/regression.hpp"
#include "rntk/report.hpp"
#include "rntk/sampling.hpp"
#include "rntk/spectral.hpp"

namespace rntk {

namespace detail {

inline std::string join_reals(const std::vector<double>& v, char sep = ';') {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? std::string(1, sep) : "") + format_real(v[i]);
  return s;
}

inline std::string join_ints(const std::vector<int>& v, char sep = ';') {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? std::string(1, sep) : "") + std::to_string(v[i]);
  return s;
}

inline std::string short_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

inline double median(std::vector<double> v) {
  if (v.empty()) throw PreconditionError("median of an empty sample");
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// kernel-sweep: mean and standard error of r^{(L)}(x, x') for random pairs.

struct SweepOptions {
  std::vector<double> scales{1.0, 2.0, 4.0, 8.0};  // C; alpha = C L^{-gamma}
  double gamma = 0.0;
  std::vector<int> depths{100, 200, 500, 1000, 1500, 2000, 2500, 3000};
  int reps = 100;
  int dim = 3;
  std::uint64_t seed = 0;
};

struct SweepRow {
  double scale_c = 0.0;
  double gamma = 0.0;
  int L = 0;
  double alpha = 0.0;
  double mean_value = 0.0;
  double std_error = 0.0;
  int replications = 0;
};

struct SweepReport {
  SweepOptions options;
  std::vector<SweepRow> rows;

  const SweepRow& at(double scale_c, int L) const {
    for (const auto& r : rows) {
      if (r.scale_c == scale_c && r.L == L) return r;
    }
    throw PreconditionError("SweepReport: no row for C=" + format_real(scale_c) + ", L=" + std::to_string(L));
  }

  RunConfig config() const {
    return RunConfig()
        .set("experiment", "kernel-sweep")
        .set("seed", static_cast<unsigned long long>(options.seed))
        .set("scale_C", detail::join_reals(options.scales))
        .set("gamma", options.gamma)
        .set("L", detail::join_ints(options.depths))
        .set("reps", options.reps)
        .set("dim", options.dim);
  }

  CsvTable table() const {
    CsvTable t(config(), {"C", "gamma", "L", "alpha", "mean_value", "std_error", "replications"});
    for (const auto& r : rows) {
      t.add_row({r.scale_c, r.gamma, static_cast<long long>(r.L), r.alpha, r.mean_value, r.std_error,
                 static_cast<long long>(r.replications)});
    }
    return t;
  }

  std::string svg() const {
    std::vector<PlotSeries> series;
    for (double c : options.scales) {
      PlotSeries s;
      s.label = options.gamma == 0.0 ? "alpha=" + detail::short_real(c)
                                     : "C=" + detail::short_real(c) + ", gamma=" + detail::short_real(options.gamma);
      for (const auto& r : rows) {
        if (r.scale_c != c) continue;
        s.x.push_back(r.L);
        s.y.push_back(r.mean_value);
        s.se.push_back(r.std_error);
      }
      series.push_back(std::move(s));
    }
    PlotSpec spec{"Average RNTK value for random input pairs", "depth L", "mean r(L)", false, false, {0.25}};
    return render_svg(spec, series);
  }
};

/// Replication pairs are drawn once from the seed and reused for every (C, L) cell.
inline SweepReport kernel_sweep(const SweepOptions& opt) {
  if (opt.reps < 2) throw PreconditionError("kernel_sweep: replications must be >= 2");
  if (opt.scales.empty() || opt.depths.empty()) throw PreconditionError("kernel_sweep: empty grid");
  Rng rng(opt.seed);
  const Eigen::MatrixXd a = uniform_sphere(opt.reps, opt.dim, rng);
  const Eigen::MatrixXd b = uniform_sphere(opt.reps, opt.dim, rng);
  std::vector<double> u(opt.reps);
  for (int i = 0; i < opt.reps; ++i) u[i] = clamp_correlation(a.row(i).dot(b.row(i)));

  SweepReport rep{opt, {}};
  for (double c : opt.scales) {
    for (int L : opt.depths) {
      const KernelConfig cfg(L, opt.gamma, c);
      double sum = 0.0, sum2 = 0.0;
      std::vector<double> vals(opt.reps);
      for (int i = 0; i < opt.reps; ++i) {
        vals[i] = rntk_eval(u[i], cfg);
        sum += vals[i];
      }
      const double mean = sum / opt.reps;
      for (double v : vals) sum2 += (v - mean) * (v - mean);
      const double sd = std::sqrt(sum2 / (opt.reps - 1));
      rep.rows.push_back({c, opt.gamma, L, cfg.alpha(), mean, sd / std::sqrt(static_cast<double>(opt.reps)), opt.reps});
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// gen-data: y = <x, beta> + noise * eps with x uniform on the sphere.

struct DataOptions {
  int n = 200;
  int n_train = 160;
  int dim = 3;
  std::vector<double> beta;  // empty: all ones
  double noise = 0.1;
  std::uint64_t seed = 0;
};

struct DataSet {
  DataOptions options;
  Eigen::MatrixXd x;
  Eigen::VectorXd y_clean;
  Eigen::VectorXd y_noisy;
  std::vector<bool> is_train;

  RunConfig config() const {
    return RunConfig()
        .set("experiment", "gen-data")
        .set("seed", static_cast<unsigned long long>(options.seed))
        .set("n", options.n)
        .set("n_train", options.n_train)
        .set("dim", options.dim)
        .set("beta", detail::join_reals(options.beta))
        .set("noise", options.noise);
  }

  CsvTable table() const {
    std::vector<std::string> cols;
    for (int j = 1; j <= x.cols(); ++j) cols.push_back("x" + std::to_string(j));
    cols.insert(cols.end(), {"y_clean", "y_noisy", "split"});
    CsvTable t(config(), cols);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      std::vector<CsvCell> row;
      for (Eigen::Index j = 0; j < x.cols(); ++j) row.emplace_back(x(i, j));
      row.emplace_back(y_clean(i));
      row.emplace_back(y_noisy(i));
      row.emplace_back(std::string(is_train[i] ? "train" : "test"));
      t.add_row(std::move(row));
    }
    return t;
  }

  /// Train targets are the noisy labels; test targets are f*(x).
  RegressionProblem problem() const {
    const Eigen::Index ntr = std::count(is_train.begin(), is_train.end(), true);
    RegressionProblem p;
    p.noise_sigma = options.noise;
    p.train_x.resize(ntr, x.cols());
    p.train_y.resize(ntr);
    p.test_x.resize(x.rows() - ntr, x.cols());
    p.test_y_clean.resize(x.rows() - ntr);
    Eigen::Index a = 0, b = 0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      if (is_train[i]) {
        p.train_x.row(a) = x.row(i);
        p.train_y(a++) = y_noisy(i);
      } else {
        p.test_x.row(b) = x.row(i);
        p.test_y_clean(b++) = y_clean(i);
      }
    }
    return p;
  }
};

inline DataSet gen_data(DataOptions opt) {
  if (opt.dim < 2) throw PreconditionError("gen_data: dim must be >= 2");
  if (opt.n < 2 || opt.n_train < 1 || opt.n_train >= opt.n) {
    throw PreconditionError("gen_data: need 1 <= n_train < n");
  }
  if (!(opt.noise >= 0.0)) throw PreconditionError("gen_data: noise must be >= 0");
  if (opt.beta.empty()) opt.beta.assign(opt.dim, 1.0);
  if (static_cast<int>(opt.beta.size()) != opt.dim) throw PreconditionError("gen_data: beta length must equal dim");
  Rng rng(opt.seed);
  DataSet ds;
  ds.options = opt;
  ds.x = uniform_sphere(opt.n, opt.dim, rng);
  const Eigen::Map<const Eigen::VectorXd> beta(opt.beta.data(), opt.dim);
  ds.y_clean = ds.x * beta;
  std::normal_distribution<double> gauss(0.0, 1.0);
  ds.y_noisy.resize(opt.n);
  for (int i = 0; i < opt.n; ++i) {
    const double eps = gauss(rng);
    ds.y_noisy(i) = opt.noise == 0.0 ? ds.y_clean(i) : ds.y_clean(i) + opt.noise * eps;
  }
  ds.is_train.assign(opt.n, false);
  for (int i = 0; i < opt.n_train; ++i) ds.is_train[i] = true;
  return ds;
}

namespace detail {

inline std::map<std::string, std::string> parse_config_line(const std::string& line) {
  std::map<std::string, std::string> kv;
  std::istringstream in(line.substr(1));
  std::string tok;
  while (in >> tok) {
    const auto eq = tok.find('=');
    if (eq != std::string::npos) kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return kv;
}

}  // namespace detail

/// Inverse of DataSet::table().str(). Metadata comes from the '#' line when present.
inline DataSet parse_data(const std::string& text) {
  const CsvContent c = parse_csv(text);
  DataSet ds;
  int d = 0;
  while (std::find(c.header.begin(), c.header.end(), "x" + std::to_string(d + 1)) != c.header.end()) ++d;
  if (d < 2) throw ParseError("data file needs feature columns x1..xd with d >= 2");
  const std::size_t jc = c.column("y_clean"), jn = c.column("y_noisy"), js = c.column("split");
  const Eigen::Index n = static_cast<Eigen::Index>(c.rows.size());
  ds.x.resize(n, d);
  ds.y_clean.resize(n);
  ds.y_noisy.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = c.rows[i];
    for (int j = 0; j < d; ++j) ds.x(i, j) = parse_real(row[c.column("x" + std::to_string(j + 1))]);
    ds.y_clean(i) = parse_real(row[jc]);
    ds.y_noisy(i) = parse_real(row[jn]);
    if (row[js] != "train" && row[js] != "test") throw ParseError("split must be train or test, got " + row[js]);
    ds.is_train.push_back(row[js] == "train");
  }
  ds.options.n = static_cast<int>(n);
  ds.options.n_train = static_cast<int>(std::count(ds.is_train.begin(), ds.is_train.end(), true));
  ds.options.dim = d;
  for (const auto& line : c.comments) {
    const auto kv = detail::parse_config_line(line);
    if (kv.count("seed")) ds.options.seed = std::stoull(kv.at("seed"));
    if (kv.count("noise")) ds.options.noise = parse_real(kv.at("noise"));
    if (kv.count("beta")) {
      ds.options.beta.clear();
      std::istringstream in(kv.at("beta"));
      std::string tok;
      while (std::getline(in, tok, ';')) ds.options.beta.push_back(parse_real(tok));
    }
  }
  check_unit_rows(ds.x);
  return ds;
}

// ---------------------------------------------------------------------------
// regress: RNTK gradient descent trajectories.

struct RegressOptions {
  int L = 50;
  double gamma = 0.0;
  double scale_c = 1.0;
  double lr = 1e-4;
  int epochs = 3000;
  int stride = 1;
  std::uint64_t seed = 0;  // holdout split for early stopping
  bool compare = false;    // run (gamma, C) = (0, 1) and (1, 1) instead of the given pair
  double holdout_fraction = 0.2;
};

struct TrajectoryRow {
  std::string experiment_id;
  std::uint64_t seed = 0;
  int L = 0;
  double gamma = 0.0;
  double scale_c = 0.0;
  int step = 0;
  double time = 0.0;
  double train_loss = 0.0;
  double test_error = 0.0;
};

struct RegressSummary {
  std::string experiment_id;
  double alpha = 0.0;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  int selected_epoch = 0;
  double selected_test_error = 0.0;
  double final_test_error = 0.0;
};

struct RegressReport {
  RegressOptions options;
  std::uint64_t data_seed = 0;
  std::vector<TrajectoryRow> rows;
  std::vector<RegressSummary> summaries;

  RunConfig config() const {
    return RunConfig()
        .set("experiment", "regress")
        .set("seed", static_cast<unsigned long long>(options.seed))
        .set("data_seed", static_cast<unsigned long long>(data_seed))
        .set("L", options.L)
        .set("gamma", options.compare ? std::string("0;1") : format_real(options.gamma))
        .set("C", options.compare ? std::string("1") : format_real(options.scale_c))
        .set("lr", options.lr)
        .set("epochs", options.epochs)
        .set("stride", options.stride)
        .set("compare", std::string(options.compare ? "true" : "false"))
        .set("holdout_fraction", options.holdout_fraction);
  }

  CsvTable table() const {
    CsvTable t(config(), {"experiment_id", "seed", "L", "gamma", "C", "step", "time", "train_loss", "test_error"});
    for (const auto& r : rows) {
      t.add_row({r.experiment_id, static_cast<long long>(r.seed), static_cast<long long>(r.L), r.gamma, r.scale_c,
                 static_cast<long long>(r.step), r.time, r.train_loss, r.test_error});
    }
    return t;
  }

  CsvTable summary_table() const {
    CsvTable t(config(), {"experiment_id", "alpha", "lambda_min", "lambda_max", "selected_epoch",
                          "selected_test_error", "final_test_error"});
    for (const auto& s : summaries) {
      t.add_row({s.experiment_id, s.alpha, s.lambda_min, s.lambda_max, static_cast<long long>(s.selected_epoch),
                 s.selected_test_error, s.final_test_error});
    }
    return t;
  }

  /// Test-error curve of one experiment, indexed by step.
  std::vector<double> test_curve(const std::string& id) const {
    std::vector<double> c;
    for (const auto& r : rows) {
      if (r.experiment_id == id) c.push_back(r.test_error);
    }
    return c;
  }

  std::vector<int> steps(const std::string& id) const {
    std::vector<int> s;
    for (const auto& r : rows) {
      if (r.experiment_id == id) s.push_back(r.step);
    }
    return s;
  }

  std::string svg() const {
    std::vector<PlotSeries> series;
    for (const auto& sm : summaries) {
      PlotSeries s;
      s.label = "alpha=" + detail::short_real(sm.alpha);
      for (const auto& r : rows) {
        if (r.experiment_id != sm.experiment_id) continue;
        s.x.push_back(r.step);
        s.y.push_back(r.test_error);
      }
      series.push_back(std::move(s));
    }
    PlotSpec spec{"Test excess risk, L=" + std::to_string(options.L), "epoch", "test error", false, false, {}};
    return render_svg(spec, series);
  }
};

inline std::string regress_experiment_id(int L, double gamma, double c) {
  return "L" + std::to_string(L) + "-gamma" + detail::short_real(gamma) + "-C" + detail::short_real(c);
}

inline RegressReport regress(const DataSet& data, const RegressOptions& opt) {
  std::vector<std::pair<double, double>> settings;
  if (opt.compare) {
    settings = {{0.0, 1.0}, {1.0, 1.0}};
  } else {
    settings = {{opt.gamma, opt.scale_c}};
  }
  const RegressionProblem problem = data.problem();
  RegressReport rep{opt, data.options.seed, {}, {}};
  for (const auto& [gamma, c] : settings) {
    const KernelConfig cfg(opt.L, gamma, c);
    const KernelRegression reg(problem, cfg);
    const std::vector<FlowState> states = reg.gradient_descent(opt.lr, opt.epochs, opt.stride);
    const std::string id = regress_experiment_id(opt.L, gamma, c);
    for (const auto& s : states) {
      rep.rows.push_back({id, opt.seed, opt.L, gamma, c, *s.epoch, s.time, reg.train_loss(s), reg.excess_risk(s)});
    }
    RegressSummary sm{id, cfg.alpha(), reg.min_eigenvalue(), reg.max_eigenvalue(), 0, 0.0,
                      reg.excess_risk(states.back())};
    if (states.size() >= 2 && problem.train_x.rows() >= 4) {
      const EarlyStoppingResult es = early_stopping_select(states, problem, cfg, opt.holdout_fraction, opt.seed);
      sm.selected_epoch = *es.state.epoch;
      sm.selected_test_error = reg.excess_risk(es.state);
    } else {
      sm.selected_epoch = *states.back().epoch;
      sm.selected_test_error = sm.final_test_error;
    }
    rep.summaries.push_back(sm);
  }
  std::stable_sort(rep.rows.begin(), rep.rows.end(), [](const TrajectoryRow& a, const TrajectoryRow& b) {
    return std::tie(a.experiment_id, a.seed, a.step) < std::tie(b.experiment_id, b.seed, b.step);
  });
  return rep;
}

// ---------------------------------------------------------------------------
// eigen: Mercer spectrum table.

struct EigenOptions {
  int dim = 3;  // ambient dimension; points lie on S^{dim-1}
  int K = 12;
  int L = 1;
  double gamma = 0.0;
  double scale_c = 1.0;
};

struct EigenRow {
  int k = 0;
  double multiplicity = 0.0;
  double eigenvalue = 0.0;
  std::string source;
  std::optional<double> rel_discrepancy;
};

struct EigenReport {
  EigenOptions options;
  std::vector<EigenRow> rows;

  RunConfig config() const {
    return RunConfig()
        .set("experiment", "eigen")
        .set("seed", std::string("none"))
        .set("dim", options.dim)
        .set("K", options.K)
        .set("L", options.L)
        .set("gamma", options.gamma)
        .set("C", options.scale_c);
  }

  CsvTable table() const {
    CsvTable t(config(), {"k", "multiplicity", "eigenvalue", "source", "rel_discrepancy"});
    for (const auto& r : rows) {
      t.add_row({static_cast<long long>(r.k), r.multiplicity, r.eigenvalue, r.source,
                 r.rel_discrepancy ? CsvCell(*r.rel_discrepancy) : CsvCell(std::string())});
    }
    return t;
  }

  double eigenvalue(int k, const std::string& source) const {
    for (const auto& r : rows) {
      if (r.k == k && r.source == source) return r.eigenvalue;
    }
    throw PreconditionError("EigenReport: no row for k=" + std::to_string(k) + " source=" + source);
  }
};

/// For L = 1 both the closed form and the quadrature pipeline are listed. The
/// discrepancy is |closed - quad| / |closed|, or |quad| / max_k |closed_k| where the
/// closed form is exactly 0.
inline EigenReport eigen_table(const EigenOptions& opt) {
  if (opt.K < 1) throw PreconditionError("eigen: K must be >= 1");
  if (opt.dim < 2) throw PreconditionError("eigen: dim must be >= 2");
  const SphereDim n = SphereDim::from_ambient(opt.dim);
  const KernelConfig cfg(opt.L, opt.gamma, opt.scale_c);
  const EigenSpectrum quad = coeffs_to_eigenvalues(expand_kernel(rntk_kernel(cfg), n, opt.K));
  EigenReport rep{opt, {}};
  if (opt.L == 1) {
    const EigenSpectrum cf = rntk1_eigenvalues(n, opt.K);
    const double scale = *std::max_element(cf.eigenvalues.begin(), cf.eigenvalues.end());
    for (int k = 0; k <= opt.K; ++k) {
      const double a = cf.eigenvalues[k], q = quad.eigenvalues[k];
      const double disc = a != 0.0 ? std::abs(a - q) / std::abs(a) : std::abs(q) / scale;
      rep.rows.push_back({k, cf.multiplicities[k], a, "closed_form", disc});
      rep.rows.push_back({k, quad.multiplicities[k], q, "quadrature", disc});
    }
  } else {
    for (int k = 0; k <= opt.K; ++k) {
      rep.rows.push_back({k, quad.multiplicities[k], quad.eigenvalues[k], "quadrature", std::nullopt});
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// finite-width: network vs kernel across widths.

struct FiniteWidthOptions {
  std::vector<int> widths{256, 1024, 4096};
  int L = 2;
  double gamma = 0.0;
  double scale_c = 1.0;
  int n_train = 20;
  int n_test = 20;
  int dim = 3;
  double noise = 0.1;
  double lr = 0.25;
  int epochs = 20;
  int seeds = 10;
  std::uint64_t seed = 0;
};

struct FiniteWidthRow {
  int m = 0;
  int rep = 0;
  std::uint64_t net_seed = 0;
  double init_gap = 0.0;   // sup over probe pairs |normalized RNK - RNTK| at init
  double train_gap = 0.0;  // sup over epochs and test points |f_net - f_kernel|
  double risk_gap = 0.0;   // |risk_net - risk_kernel| at the last epoch
  double net_risk = 0.0;
  double kernel_risk = 0.0;
  double movement = 0.0;  // relative parameter movement
};

struct FiniteWidthSummary {
  int m = 0;
  double median_init_gap = 0.0;
  double median_train_gap = 0.0;
  double median_risk_gap = 0.0;
  double median_movement = 0.0;
};

struct FiniteWidthReport {
  FiniteWidthOptions options;
  std::vector<FiniteWidthRow> rows;
  std::vector<FiniteWidthSummary> summaries;

  RunConfig config() const {
    return RunConfig()
        .set("experiment", "finite-width")
        .set("seed", static_cast<unsigned long long>(options.seed))
        .set("m", detail::join_ints(options.widths))
        .set("L", options.L)
        .set("gamma", options.gamma)
        .set("C", options.scale_c)
        .set("n_train", options.n_train)
        .set("n_test", options.n_test)
        .set("dim", options.dim)
        .set("noise", options.noise)
        .set("lr", options.lr)
        .set("epochs", options.epochs)
        .set("reps", options.seeds);
  }

  CsvTable table() const {
    CsvTable t(config(), {"m", "rep", "net_seed", "init_gap", "train_gap", "risk_gap", "net_risk", "kernel_risk",
                          "movement"});
    for (const auto& r : rows) {
      t.add_row({static_cast<long long>(r.m), static_cast<long long>(r.rep), std::to_string(r.net_seed), r.init_gap,
                 r.train_gap, r.risk_gap, r.net_risk, r.kernel_risk, r.movement});
    }
    return t;
  }

  CsvTable summary_table() const {
    CsvTable t(config(), {"m", "median_init_gap", "median_train_gap", "median_risk_gap", "median_movement"});
    for (const auto& s : summaries) {
      t.add_row({static_cast<long long>(s.m), s.median_init_gap, s.median_train_gap, s.median_risk_gap,
                 s.median_movement});
    }
    return t;
  }

  std::string svg() const {
    PlotSeries a{"init kernel gap", {}, {}, {}}, b{"trained prediction gap", {}, {}, {}},
        c{"excess-risk gap", {}, {}, {}};
    for (const auto& s : summaries) {
      for (auto* p : {&a, &b, &c}) p->x.push_back(s.m);
      a.y.push_back(s.median_init_gap);
      b.y.push_back(s.median_train_gap);
      c.y.push_back(std::max(s.median_risk_gap, 1e-300));
    }
    PlotSpec spec{"Network vs kernel, L=" + std::to_string(options.L), "width m", "median gap", true, true, {}};
    return render_svg(spec, {a, b, c});
  }
};

/// Per replication: one data set and one network seed, shared by every width.
/// The kernel reference runs discrete kernel descent with step lr * s / n_train,
/// which is the function-space step of network descent when its RNK equals s r^{(L)}.
inline FiniteWidthReport finite_width(const FiniteWidthOptions& opt) {
  if (opt.widths.empty() || !std::is_sorted(opt.widths.begin(), opt.widths.end()) ||
      std::adjacent_find(opt.widths.begin(), opt.widths.end()) != opt.widths.end()) {
    throw PreconditionError("finite_width: widths must be strictly ascending");
  }
  if (opt.seeds < 1) throw PreconditionError("finite_width: need at least one replication");
  const KernelConfig cfg(opt.L, opt.gamma, opt.scale_c);
  const double s = rnk_scale(opt.L, cfg.alpha());
  Rng master(opt.seed);
  FiniteWidthReport rep{opt, {}, {}};
  for (int r = 0; r < opt.seeds; ++r) {
    const std::uint64_t data_seed = master(), net_seed = master();
    DataOptions dopt;
    dopt.n = opt.n_train + opt.n_test;
    dopt.n_train = opt.n_train;
    dopt.dim = opt.dim;
    dopt.noise = opt.noise;
    dopt.seed = data_seed;
    const RegressionProblem problem = gen_data(dopt).problem();

    const KernelRegression kreg(problem, cfg);
    const std::vector<FlowState> kstates = kreg.gradient_descent(opt.lr * s / opt.n_train, opt.epochs, 1);
    const Eigen::MatrixXd probe_kernel = kernel_matrix(problem.test_x, cfg).entries();

    for (int m : opt.widths) {
      FiniteWidthRow row;
      row.m = m;
      row.rep = r;
      row.net_seed = net_seed;
      MirrorPair pair = MirrorPair::random(m, opt.dim, opt.L, cfg.alpha(), net_seed);
      row.init_gap = (normalized_rnk_gram(pair.net_plus, problem.test_x) - probe_kernel).cwiseAbs().maxCoeff();
      const std::vector<TrainRecord> recs = train_network(pair, problem, opt.lr, opt.epochs, 1);
      for (std::size_t e = 0; e < recs.size(); ++e) {
        const Eigen::VectorXd kp = kreg.test_predictions(kstates[e]);
        row.train_gap = std::max(row.train_gap, (recs[e].test_predictions - kp).cwiseAbs().maxCoeff());
      }
      row.net_risk = recs.back().test_excess_risk;
      row.kernel_risk = kreg.excess_risk(kstates.back());
      row.risk_gap = std::abs(row.net_risk - row.kernel_risk);
      row.movement = relative_parameter_movement(pair);
      rep.rows.push_back(row);
    }
  }
  std::stable_sort(rep.rows.begin(), rep.rows.end(),
                   [](const FiniteWidthRow& a, const FiniteWidthRow& b) { return std::tie(a.m, a.rep) < std::tie(b.m, b.rep); });
  for (int m : opt.widths) {
    std::vector<double> ig, tg, rg, mv;
    for (const auto& row : rep.rows) {
      if (row.m != m) continue;
      ig.push_back(row.init_gap);
      tg.push_back(row.train_gap);
      rg.push_back(row.risk_gap);
      mv.push_back(row.movement);
    }
    rep.summaries.push_back({m, detail::median(ig), detail::median(tg), detail::median(rg), detail::median(mv)});
  }
  return rep;
}

}  // namespace rntk
