#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "rntk/rntk.hpp"

namespace fs = std::filesystem;

namespace {

struct Common {
  std::string out = "out";
  bool no_plot = false;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--out", c.out, "Output directory")->capture_default_str();
  sub->add_flag("--no-plot", c.no_plot, "Skip SVG output");
}

void emit(const fs::path& path, const std::string& text) {
  rntk::write_text_file(path, text);
  std::cout << "wrote " << path.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Residual NTK laboratory"};
  app.require_subcommand(1);

  // kernel-sweep
  rntk::SweepOptions sweep;
  Common sweep_io;
  auto* ks = app.add_subcommand("kernel-sweep", "Mean RNTK value over random input pairs versus depth");
  ks->add_option("--L", sweep.depths, "Depth grid")->delimiter(',')->capture_default_str();
  ks->add_option("--scale-C", sweep.scales, "Scale grid C (alpha = C L^-gamma)")->delimiter(',')->capture_default_str();
  ks->add_option("--gamma", sweep.gamma, "Depth exponent gamma")->capture_default_str();
  ks->add_option("--dim", sweep.dim, "Ambient input dimension")->capture_default_str();
  ks->add_option("--reps", sweep.reps, "Random pairs per cell")->capture_default_str();
  ks->add_option("--seed", sweep.seed, "Random seed")->capture_default_str();
  add_common(ks, sweep_io);

  // gen-data
  rntk::DataOptions data;
  Common data_io;
  auto* gd = app.add_subcommand("gen-data", "Synthetic linear-target data on the sphere");
  gd->add_option("--n", data.n, "Total samples")->capture_default_str();
  gd->add_option("--n-train", data.n_train, "Training samples (leading rows)")->capture_default_str();
  gd->add_option("--dim", data.dim, "Ambient input dimension")->capture_default_str();
  gd->add_option("--beta", data.beta, "Target coefficients (default all ones)")->delimiter(',');
  gd->add_option("--noise", data.noise, "Noise standard deviation")->capture_default_str();
  gd->add_option("--seed", data.seed, "Random seed")->capture_default_str();
  add_common(gd, data_io);

  // regress
  rntk::RegressOptions reg;
  Common reg_io;
  std::string data_path;
  int reg_dim = 3;
  auto* rg = app.add_subcommand("regress", "RNTK kernel gradient descent trajectories");
  rg->add_option("--data", data_path, "Data CSV from gen-data (default: generate with --seed)");
  rg->add_option("--dim", reg_dim, "Ambient dimension when generating data")->capture_default_str();
  rg->add_option("--L", reg.L, "Depth")->capture_default_str();
  rg->add_option("--gamma", reg.gamma, "Depth exponent gamma")->capture_default_str();
  rg->add_option("--scale-C", reg.scale_c, "Scale C")->capture_default_str();
  rg->add_option("--lr", reg.lr, "Learning rate")->capture_default_str();
  rg->add_option("--epochs", reg.epochs, "Epochs")->capture_default_str();
  rg->add_option("--stride", reg.stride, "Record every k-th epoch")->capture_default_str();
  rg->add_option("--holdout", reg.holdout_fraction, "Early-stopping holdout fraction")->capture_default_str();
  rg->add_option("--seed", reg.seed, "Seed for the holdout split and generated data")->capture_default_str();
  rg->add_flag("--compare", reg.compare, "Overlay alpha = 1 and alpha = 1/L");
  add_common(rg, reg_io);

  // eigen
  rntk::EigenOptions eig;
  Common eig_io;
  auto* eg = app.add_subcommand("eigen", "Mercer eigenvalues of the RNTK on the sphere");
  eg->add_option("--dim", eig.dim, "Ambient input dimension")->capture_default_str();
  eg->add_option("--K", eig.K, "Largest degree")->capture_default_str();
  eg->add_option("--L", eig.L, "Depth")->capture_default_str();
  eg->add_option("--gamma", eig.gamma, "Depth exponent gamma")->capture_default_str();
  eg->add_option("--scale-C", eig.scale_c, "Scale C")->capture_default_str();
  add_common(eg, eig_io);

  // finite-width
  rntk::FiniteWidthOptions fw;
  Common fw_io;
  auto* fwc = app.add_subcommand("finite-width", "Finite-width network against its limiting kernel");
  fwc->add_option("--m", fw.widths, "Width grid (ascending)")->delimiter(',')->capture_default_str();
  fwc->add_option("--L", fw.L, "Depth")->capture_default_str();
  fwc->add_option("--gamma", fw.gamma, "Depth exponent gamma")->capture_default_str();
  fwc->add_option("--scale-C", fw.scale_c, "Scale C")->capture_default_str();
  fwc->add_option("--n", fw.n_train, "Training samples")->capture_default_str();
  fwc->add_option("--n-test", fw.n_test, "Test samples (also the kernel probe set)")->capture_default_str();
  fwc->add_option("--dim", fw.dim, "Ambient input dimension")->capture_default_str();
  fwc->add_option("--noise", fw.noise, "Label noise")->capture_default_str();
  fwc->add_option("--lr", fw.lr, "Network learning rate")->capture_default_str();
  fwc->add_option("--epochs", fw.epochs, "Epochs")->capture_default_str();
  fwc->add_option("--reps", fw.seeds, "Replications (data set and network seed each)")->capture_default_str();
  fwc->add_option("--seed", fw.seed, "Master seed")->capture_default_str();
  add_common(fwc, fw_io);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ks) {
      const rntk::SweepReport rep = rntk::kernel_sweep(sweep);
      const fs::path dir(sweep_io.out);
      emit(dir / "kernel_sweep.csv", rep.table().str());
      if (!sweep_io.no_plot) emit(dir / "kernel_sweep.svg", rep.svg());
    } else if (*gd) {
      const rntk::DataSet ds = rntk::gen_data(data);
      emit(fs::path(data_io.out) / "data.csv", ds.table().str());
    } else if (*rg) {
      rntk::DataSet ds;
      if (data_path.empty()) {
        rntk::DataOptions d;
        d.dim = reg_dim;
        d.seed = reg.seed;
        ds = rntk::gen_data(d);
      } else {
        ds = rntk::parse_data(rntk::read_text_file(data_path));
      }
      const rntk::RegressReport rep = rntk::regress(ds, reg);
      const fs::path dir(reg_io.out);
      emit(dir / "regress.csv", rep.table().str());
      emit(dir / "regress_summary.csv", rep.summary_table().str());
      if (!reg_io.no_plot) emit(dir / "regress.svg", rep.svg());
    } else if (*eg) {
      const rntk::EigenReport rep = rntk::eigen_table(eig);
      emit(fs::path(eig_io.out) / "eigen.csv", rep.table().str());
    } else if (*fwc) {
      const rntk::FiniteWidthReport rep = rntk::finite_width(fw);
      const fs::path dir(fw_io.out);
      emit(dir / "finite_width.csv", rep.table().str());
      emit(dir / "finite_width_summary.csv", rep.summary_table().str());
      if (!fw_io.no_plot) emit(dir / "finite_width.svg", rep.svg());
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
