// Command-line driver: shift tuning, dispersion curves, single solves and
// convergence sweeps.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>

#include "CLI11.hpp"
#include "hmg/experiment.hpp"

namespace {

using hmg::ExperimentConfig;

constexpr int kOk = 0;
constexpr int kDiverged = 1;
constexpr int kInvalid = 2;

/// Writes to cfg.output when set, stdout otherwise.
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw hmg::ConfigError("cannot write output file " + path);
    }
  }
  std::ostream& out() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

void add_common(CLI::App& app, ExperimentConfig& c, std::string& emit, std::string& config) {
  app.add_option("--config", config, "JSON configuration file (flags override its values)");
  app.add_option("--dim", c.dim, "Spatial dimension");
  app.add_option("--G", c.G, "Points per wavelength (list allowed)")->delimiter(',');
  app.add_option("--intergrid", c.intergrid, "cubic | level-dependent | linear");
  app.add_option("--scheme", c.scheme, "fourth-order | second-order | jss");
  app.add_option("--shift-table", c.shift_table, "Tuned-shift cache (default: $HELM_SHIFT_TABLE)");
  app.add_option("--output,-o", c.output, "Output file (default: stdout)");
  app.add_option("--seed", c.seed, "Seed for randomized self-checks");
  app.add_option("--emit-config", emit, "Write the effective configuration as JSON");
}

void add_analysis(CLI::App& app, ExperimentConfig& c) {
  app.add_option("--phi-resolution", c.phi_resolution, "Direction sampling step (rad)");
  app.add_option("--alpha-resolution", c.alpha_resolution, "Shift grid step");
  app.add_option("--ray-resolution", c.ray_resolution, "Ray sampling step");
  app.add_option("--alpha-lo", c.alpha_lo, "Lower end of the shift grid");
  app.add_option("--alpha-hi", c.alpha_hi, "Upper end of the shift grid");
  app.add_option("--radius-mode", c.radius_mode, "sampled | refined");
}

void add_solver(CLI::App& app, ExperimentConfig& c) {
  app.add_option("--grid", c.grids, "Interior cells per axis, e.g. 256 or 544x144 (list allowed)")
      ->delimiter(',');
  app.add_option("--model", c.model, "homogeneous | linear[:lo:hi] | wedge[:lo:hi] | file:<sidecar.json>");
  app.add_option("--extend", c.extend, "Rows appended below file models");
  app.add_option("--cycle", c.cycle, "V | W");
  app.add_option("--nu1", c.nu1, "Pre-smoothing sweeps");
  app.add_option("--nu2", c.nu2, "Post-smoothing sweeps");
  app.add_option("--damping", c.damping, "Jacobi damping on levels 1 and 2")->delimiter(',');
  app.add_option("--alpha", c.alpha, "Real shift or 'auto'");
  app.add_option("--beta", c.beta, "Relative complex shift (beta k^2)");
  app.add_option("--solver", c.solver, "fgmres(m) | fgmres | stationary");
  app.add_option("--tol", c.tol, "Relative residual tolerance");
  app.add_option("--maxit", c.maxit, "Iteration cap (0: solver default)");
  app.add_option("--pad", c.pad, "Absorbing layer width in cells");
  app.add_option("--source", c.source, "auto | center | top");
}

int run_tune(const ExperimentConfig& c, bool as_json) {
  Sink sink(c.output);
  hmg::ShiftTable table(hmg::ShiftTable::resolve_path(c.shift_table));
  std::vector<hmg::TuneRow> rows;
  for (double g : c.G) {
    rows.push_back(hmg::tune_row(c, g));
    const auto& r = rows.back();
    table.put({r.dim, r.G, r.intergrid, r.alpha_star, r.max_eg});
  }
  table.save();
  if (as_json) {
    hmg::json j = hmg::json::array();
    for (const auto& r : rows)
      j.push_back({{"G", r.G}, {"dim", r.dim}, {"intergrid", r.intergrid}, {"alpha_star", r.alpha_star},
                   {"max_eg", r.max_eg}, {"ncrit_lo", r.ncrit_lo}, {"ncrit_hi", r.ncrit_hi}});
    sink.out() << j.dump(2) << '\n';
  } else {
    sink.out() << hmg::tune_csv_header() << '\n';
    for (const auto& r : rows) sink.out() << hmg::tune_csv_row(r) << '\n';
  }
  return kOk;
}

int run_dispersion(const ExperimentConfig& c) {
  Sink sink(c.output);
  const double G = c.G.front();
  auto& os = sink.out();
  os.precision(12);
  if (!c.alpha_scan.empty()) {
    const auto rows = hmg::alpha_scan(c, G);
    os << "alpha,e_g_max,conv_factor\n";
    for (const auto& r : rows) {
      os << r.alpha << ',' << r.eg_max << ',';
      if (r.conv_factor) os << *r.conv_factor;
      os << '\n';
    }
    return kOk;
  }
  const hmg::AnalysisConfig a = c.analysis(G);
  const auto explicit_alpha = c.explicit_alpha();
  const double alpha = explicit_alpha ? *explicit_alpha : hmg::tuned_shift(c, G, a.intergrid).alpha_star;
  const auto curve = hmg::export_dispersion_curve(a, alpha, c.curve_resolution);
  double gap = 0.0;
  if (c.dim == 3) {
    os << "phi,polar,r_coarse,r_fine_stretched\n";
    for (const auto& p : curve) os << p.phi << ',' << p.polar << ',' << p.r_coarse << ',' << p.r_fine_stretched << '\n';
  } else {
    os << "phi,r_coarse,r_fine_stretched\n";
    for (const auto& p : curve) os << p.phi << ',' << p.r_coarse << ',' << p.r_fine_stretched << '\n';
  }
  for (const auto& p : curve) gap = std::max(gap, std::abs(p.r_coarse - p.r_fine_stretched) / p.r_fine_stretched);
  std::fprintf(stderr, "alpha=%.6g max relative gap=%.6e over %zu directions\n", alpha, gap, curve.size());
  return kOk;
}

int run_solve(const ExperimentConfig& c, const std::string& method) {
  Sink sink(c.output);
  const hmg::MethodSpec spec = hmg::MethodSpec::parse(method);
  const hmg::RunResult r = hmg::run_case(c, c.grids.front(), c.G.front(), spec);
  sink.out() << hmg::to_json(r).dump(2) << '\n';
  return r.report.converged ? kOk : kDiverged;
}

int run_sweep_cmd(const ExperimentConfig& c) {
  Sink sink(c.output);
  const auto rows = hmg::run_sweep(c);
  sink.out() << hmg::sweep_csv_header() << '\n';
  for (const auto& r : rows) sink.out() << hmg::sweep_csv_row(r, c.effective_maxit()) << '\n';
  return kOk;
}

/// Value following --config in argv, if any.
std::string find_config(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) return argv[i + 1];
    if (a.rfind("--config=", 0) == 0) return a.substr(9);
  }
  return "";
}

}  // namespace

int main(int argc, char** argv) {
  ExperimentConfig cfg;
  std::string config_path;
  try {
    config_path = find_config(argc, argv);
    if (!config_path.empty()) cfg = hmg::load_config(config_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  }

  CLI::App app{"Real-shifted multigrid for the Helmholtz equation"};
  app.require_subcommand(1);
  app.add_option("--config", config_path, "JSON configuration file (flags override its values)");
  std::string emit;
  bool tune_json = false;
  std::string method = "rs-cgc";

  auto* tune = app.add_subcommand("tune-shift", "Optimize the real shift by dispersion analysis");
  add_common(*tune, cfg, emit, config_path);
  add_analysis(*tune, cfg);
  tune->add_flag("--json", tune_json, "Emit JSON instead of CSV");

  auto* disp = app.add_subcommand("dispersion", "Export dispersion curves or an alpha scan");
  add_common(*disp, cfg, emit, config_path);
  add_analysis(*disp, cfg);
  add_solver(*disp, cfg);
  disp->add_option("--curve-resolution", cfg.curve_resolution, "Angular step of the exported curve");
  disp->add_option("--alpha-scan", cfg.alpha_scan, "lo:hi range for the e_g / convergence-factor table");
  disp->add_option("--scan-grid", cfg.scan_grid, "Grid for measured convergence factors");
  disp->add_option("--scan-iterations", cfg.scan_iterations, "Stationary iterations per measured shift");

  auto* solve = app.add_subcommand("solve", "Solve one problem and report convergence");
  add_common(*solve, cfg, emit, config_path);
  add_solver(*solve, cfg);
  solve->add_option("--method", method, "rs-cgc | cslp:beta[:intergrid] | rs-cgc+cslp:beta | rediscretization");
  solve->add_option("--warmup", cfg.warmup, "Untimed warm-up solves");
  solve->add_option("--repeat", cfg.repeat, "Timed repeats");

  auto* sweep = app.add_subcommand("sweep", "Iteration counts over grids and methods (CSV)");
  add_common(*sweep, cfg, emit, config_path);
  add_solver(*sweep, cfg);
  sweep->add_option("--methods", cfg.methods, "Method specs")->delimiter(',');
  sweep->add_option("--workers", cfg.workers, "Concurrent sweep cells");
  sweep->add_option("--warmup", cfg.warmup, "Untimed warm-up solves per cell");
  sweep->add_option("--repeat", cfg.repeat, "Timed repeats per cell");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return e.get_exit_code() == 0 ? app.exit(e) : (app.exit(e), kInvalid);
  }

  try {
    if (tune->parsed() && !tune->count("--G") && config_path.empty())
      throw hmg::ConfigError("tune-shift requires --G");
    if (sweep->parsed() && (cfg.grids.empty() || (sweep->count("--grid") && cfg.grids.front().empty())))
      throw hmg::ConfigError("sweep needs at least one grid size");
    if (disp->parsed() && disp->count("--alpha-scan")) hmg::parse_alpha_range(cfg.alpha_scan);
    if (solve->parsed()) hmg::MethodSpec::parse(method);
    cfg.validate();
    if (!emit.empty()) hmg::save_config(cfg, emit);

    if (tune->parsed()) return run_tune(cfg, tune_json);
    if (disp->parsed()) return run_dispersion(cfg);
    if (solve->parsed()) return run_solve(cfg, method);
    return run_sweep_cmd(cfg);
  } catch (const hmg::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const hmg::SingularCoarseOperator& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDiverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDiverged;
  }
}
