/// @file experiment.hpp
/// @brief Experiment configuration, shift table, method specs and the sweep
///        runner behind the command-line driver.

#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "hmg/discretization.hpp"
#include "hmg/dispersion.hpp"
#include "hmg/krylov.hpp"
#include "hmg/multigrid.hpp"

namespace hmg {

using json = nlohmann::json;

/// Signals an invalid configuration (exit code 2 at the CLI).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

inline double parse_number(const std::string& s, const std::string& what) {
  try {
    size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("invalid " + what + " '" + s + "'");
  }
}

// ---------------------------------------------------------------------------
// Spec strings

/// Model spec: "homogeneous", "linear:lo:hi", "wedge:lo:hi" (kappa2 ranges),
/// or "file:<sidecar.json>".
struct ModelSpec {
  ModelKind kind = ModelKind::Homogeneous;
  double lo = 1.0, hi = 1.0;
  std::string sidecar;

  bool from_file() const { return !sidecar.empty(); }

  static ModelSpec parse(const std::string& s) {
    ModelSpec m;
    if (s.rfind("file:", 0) == 0) {
      m.sidecar = s.substr(5);
      if (m.sidecar.empty()) throw ConfigError("model file path missing");
      return m;
    }
    const auto parts = split(s, ':');
    const std::string& name = parts[0];
    if (name == "homogeneous") m.kind = ModelKind::Homogeneous;
    else if (name == "linear") m.kind = ModelKind::Linear, m.lo = 0.25;
    else if (name == "wedge") m.kind = ModelKind::Wedge, m.lo = 0.1;
    else throw ConfigError("unknown model '" + s + "'");
    if (parts.size() == 3) {
      m.lo = parse_number(parts[1], "kappa2 lower bound");
      m.hi = parse_number(parts[2], "kappa2 upper bound");
    } else if (parts.size() != 1) {
      throw ConfigError("model spec must be name or name:lo:hi, got '" + s + "'");
    }
    if (!(m.lo > 0.0) || !(m.hi >= m.lo)) throw ConfigError("model kappa2 range must satisfy 0 < lo <= hi");
    return m;
  }

  std::string str() const {
    if (from_file()) return "file:" + sidecar;
    std::ostringstream o;
    o << (kind == ModelKind::Homogeneous ? "homogeneous" : kind == ModelKind::Linear ? "linear" : "wedge");
    if (kind != ModelKind::Homogeneous || lo != 1.0 || hi != 1.0) o << ':' << lo << ':' << hi;
    return o.str();
  }
};

/// Outer solver: "fgmres(m)", "fgmres" (no restart) or "stationary".
struct SolverSpec {
  enum class Kind { Fgmres, Stationary } kind = Kind::Fgmres;
  int restart = 20;

  static SolverSpec parse(const std::string& s) {
    SolverSpec out;
    if (s == "stationary") {
      out.kind = Kind::Stationary;
      out.restart = 0;
    } else if (s == "fgmres") {
      out.restart = 0;
    } else if (s.rfind("fgmres(", 0) == 0 && s.back() == ')') {
      const double m = parse_number(s.substr(7, s.size() - 8), "restart length");
      if (m < 1 || m != std::floor(m)) throw ConfigError("restart length must be a positive integer");
      out.restart = static_cast<int>(m);
    } else {
      throw ConfigError("unknown solver '" + s + "' (fgmres(m), fgmres, stationary)");
    }
    return out;
  }

  std::string str() const {
    if (kind == Kind::Stationary) return "stationary";
    return restart > 0 ? "fgmres(" + std::to_string(restart) + ")" : "fgmres";
  }
  int default_maxit() const { return kind == Kind::Fgmres && restart > 0 ? 200 : 100; }
};

/// Multigrid variant: "rs-cgc", "cslp:beta[:intergrid]", "rs-cgc+cslp:beta",
/// "rediscretization".
struct MethodSpec {
  enum class Kind { RsCgc, Cslp, RsCgcCslp, Rediscretization } kind = Kind::RsCgc;
  double beta = 0.0;
  std::optional<Intergrid> intergrid;

  static MethodSpec parse(const std::string& s) {
    const auto parts = split(s, ':');
    MethodSpec m;
    const std::string& name = parts[0];
    auto need = [&](size_t lo, size_t hi) {
      if (parts.size() < lo || parts.size() > hi) throw ConfigError("malformed method spec '" + s + "'");
    };
    if (name == "rs-cgc") {
      need(1, 1);
    } else if (name == "cslp") {
      need(2, 3);
      m.kind = Kind::Cslp;
      m.beta = parse_number(parts[1], "complex shift");
      if (parts.size() == 3) {
        try {
          m.intergrid = parse_intergrid(parts[2]);
        } catch (const std::invalid_argument& e) {
          throw ConfigError(e.what());
        }
      }
    } else if (name == "rs-cgc+cslp") {
      need(2, 2);
      m.kind = Kind::RsCgcCslp;
      m.beta = parse_number(parts[1], "complex shift");
    } else if (name == "rediscretization") {
      need(1, 1);
      m.kind = Kind::Rediscretization;
    } else {
      throw ConfigError("unknown method '" + s + "'");
    }
    if (!(m.beta >= 0.0)) throw ConfigError("complex shift must be nonnegative");
    return m;
  }

  bool uses_real_shift() const { return kind == Kind::RsCgc || kind == Kind::RsCgcCslp; }

  std::string str() const {
    std::ostringstream o;
    switch (kind) {
      case Kind::RsCgc: o << "rs-cgc"; break;
      case Kind::Cslp: o << "cslp:" << beta; break;
      case Kind::RsCgcCslp: o << "rs-cgc+cslp:" << beta; break;
      case Kind::Rediscretization: o << "rediscretization"; break;
    }
    if (kind == Kind::Cslp && intergrid) o << ':' << to_string(*intergrid);
    return o.str();
  }
};

/// Cell counts per axis: "128" (cube) or "544x144".
inline std::array<int, 3> parse_grid(const std::string& s, int dim) {
  const auto parts = split(s, 'x');
  std::array<int, 3> cells{0, 0, 0};
  if (parts.size() != 1 && static_cast<int>(parts.size()) != dim)
    throw ConfigError("grid '" + s + "' must give one or " + std::to_string(dim) + " cell counts");
  for (int a = 0; a < dim; ++a) {
    const double v = parse_number(parts.size() == 1 ? parts[0] : parts[static_cast<size_t>(a)], "grid size");
    if (v < 1 || v != std::floor(v)) throw ConfigError("grid sizes must be positive integers, got '" + s + "'");
    cells[static_cast<size_t>(a)] = static_cast<int>(v);
  }
  return cells;
}

inline Scheme parse_scheme(const std::string& s) {
  if (s == "fourth-order") return Scheme::fourth_order();
  if (s == "second-order") return Scheme::second_order();
  if (s == "jss") return Scheme::jss_optimal();
  throw ConfigError("unknown scheme '" + s + "' (fourth-order, second-order, jss)");
}

// ---------------------------------------------------------------------------
// Configuration

struct ExperimentConfig {
  int dim = 2;
  std::vector<double> G{12.0};
  std::vector<std::string> grids{"128"};
  std::string model = "homogeneous";
  std::string scheme = "fourth-order";
  std::string intergrid;  // empty: cubic in 2D, level-dependent in 3D
  std::string cycle = "W";
  int nu1 = 1, nu2 = 1;
  std::vector<double> damping;  // empty: dimension default
  std::string alpha = "auto";
  double beta = 0.0;
  std::string solver = "fgmres(20)";
  double tol = 1e-6;
  int maxit = 0;  // 0: solver default
  std::vector<std::string> methods{"rs-cgc"};
  int pad = 20;
  std::string source = "auto";  // auto, center, top
  int extend = 0;               // bottom rows appended to file models
  std::string output;
  std::uint64_t seed = 0;
  int workers = 1, repeat = 1, warmup = 1;
  std::string shift_table;
  // dispersion analysis
  double phi_resolution = 0.1, alpha_resolution = 5e-4, ray_resolution = 1e-3;
  double alpha_lo = 0.98, alpha_hi = 1.06;
  std::string radius_mode = "sampled";
  double curve_resolution = 0.01;
  std::string alpha_scan;  // "lo:hi" for the e_g / convergence-factor table
  std::string scan_grid;   // grid for measured convergence factors (empty: none)
  int scan_iterations = 30;

  Intergrid intergrid_kind() const {
    if (intergrid.empty()) return dim == 3 ? Intergrid::LevelDependent : Intergrid::Cubic;
    try {
      return parse_intergrid(intergrid);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  CycleType cycle_kind() const {
    if (cycle == "W" || cycle == "w") return CycleType::W;
    if (cycle == "V" || cycle == "v") return CycleType::V;
    throw ConfigError("cycle must be V or W, got '" + cycle + "'");
  }
  std::optional<double> explicit_alpha() const {
    if (alpha == "auto") return std::nullopt;
    const double a = parse_number(alpha, "alpha");
    if (!(a > 0.0)) throw ConfigError("alpha must be positive");
    return a;
  }
  SolverSpec solver_spec() const { return SolverSpec::parse(solver); }
  int effective_maxit() const { return maxit > 0 ? maxit : solver_spec().default_maxit(); }

  void validate() const {
    if (dim < 1 || dim > 3) throw ConfigError("dim must be 1, 2 or 3");
    if (G.empty()) throw ConfigError("at least one G value is required");
    for (double g : G)
      if (!(g > 0.0)) throw ConfigError("G must be positive");
    if (nu1 < 0 || nu2 < 0) throw ConfigError("relaxation counts must be nonnegative");
    if (!damping.empty() && damping.size() != 2) throw ConfigError("damping takes two values (levels 1 and 2)");
    if (!(beta >= 0.0)) throw ConfigError("beta must be nonnegative");
    if (!(tol > 0.0)) throw ConfigError("tol must be positive");
    if (pad < 0) throw ConfigError("pad must be nonnegative");
    if (workers < 1 || repeat < 1 || warmup < 0) throw ConfigError("workers/repeat must be >= 1, warmup >= 0");
    if (source != "auto" && source != "center" && source != "top")
      throw ConfigError("source must be auto, center or top");
    if (!(phi_resolution > 0.0) || !(alpha_resolution > 0.0) || !(ray_resolution > 0.0) ||
        !(curve_resolution > 0.0))
      throw ConfigError("resolutions must be positive");
    if (!(alpha_lo > 0.0) || !(alpha_hi >= alpha_lo)) throw ConfigError("invalid alpha range");
    try {
      parse_radius_mode(radius_mode);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    intergrid_kind();
    cycle_kind();
    explicit_alpha();
    solver_spec();
    parse_scheme(scheme);
    ModelSpec::parse(model);
    for (const auto& m : methods) MethodSpec::parse(m);
    for (const auto& g : grids) parse_grid(g, dim);
  }

  AnalysisConfig analysis(double g) const {
    AnalysisConfig a;
    a.dim = dim;
    a.G = g;
    a.intergrid = intergrid_kind();
    a.scheme = parse_scheme(scheme);
    a.phi_resolution = phi_resolution;
    a.alpha_resolution = alpha_resolution;
    a.ray_resolution = ray_resolution;
    a.alpha_lo = alpha_lo;
    a.alpha_hi = alpha_hi;
    a.radius_mode = parse_radius_mode(radius_mode);
    return a;
  }

  CyclePlan plan() const {
    CyclePlan p = CyclePlan::defaults(dim);
    p.cycle = cycle_kind();
    p.nu1 = nu1;
    p.nu2 = nu2;
    p.intergrid = intergrid_kind();
    p.beta = beta;
    if (!damping.empty()) p.damping = {damping[0], damping[1]};
    return p;
  }
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ExperimentConfig, dim, G, grids, model, scheme, intergrid, cycle,
                                                nu1, nu2, damping, alpha, beta, solver, tol, maxit, methods, pad,
                                                source, extend, output, seed, workers, repeat, warmup,
                                                shift_table, phi_resolution, alpha_resolution, ray_resolution,
                                                alpha_lo, alpha_hi, radius_mode, curve_resolution, alpha_scan,
                                                scan_grid, scan_iterations)

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  try {
    return json::parse(in).get<ExperimentConfig>();
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path + ": " + e.what());
  }
}

inline void save_config(const ExperimentConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << json(cfg).dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Shift table

struct ShiftEntry {
  int dim = 2;
  double G = 12.0;
  std::string intergrid = "cubic";
  double alpha_star = 1.0;
  double max_eg = 0.0;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ShiftEntry, dim, G, intergrid, alpha_star, max_eg)

/// Tuned shifts keyed by (dim, G, intergrid), persisted as JSON.
class ShiftTable {
 public:
  ShiftTable() = default;
  explicit ShiftTable(std::string path) : path_(std::move(path)) {
    if (path_.empty() || !std::filesystem::exists(path_)) return;
    std::ifstream in(path_);
    try {
      entries_ = json::parse(in).at("entries").get<std::vector<ShiftEntry>>();
    } catch (const json::exception& e) {
      throw ConfigError("shift table " + path_ + ": " + e.what());
    }
  }

  /// Table path from an explicit setting or HELM_SHIFT_TABLE.
  static std::string resolve_path(const std::string& configured) {
    if (!configured.empty()) return configured;
    const char* env = std::getenv("HELM_SHIFT_TABLE");
    return env ? env : "";
  }

  std::optional<ShiftEntry> find(int dim, double G, Intergrid g) const {
    for (const auto& e : entries_)
      if (e.dim == dim && std::abs(e.G - G) < 1e-12 && e.intergrid == to_string(g)) return e;
    return std::nullopt;
  }

  void put(const ShiftEntry& e) {
    for (auto& x : entries_)
      if (x.dim == e.dim && std::abs(x.G - e.G) < 1e-12 && x.intergrid == e.intergrid) {
        x = e;
        return;
      }
    entries_.push_back(e);
  }

  void save() const {
    if (path_.empty()) return;
    std::ofstream out(path_);
    if (!out) throw std::runtime_error("cannot write shift table " + path_);
    out << json{{"entries", entries_}}.dump(2) << '\n';
  }

  const std::vector<ShiftEntry>& entries() const { return entries_; }

 private:
  std::string path_;
  std::vector<ShiftEntry> entries_;
};

/// Table lookup, or a fresh optimization that is then cached.
inline ShiftEntry tuned_shift(const ExperimentConfig& cfg, double G, Intergrid g) {
  ShiftTable table(ShiftTable::resolve_path(cfg.shift_table));
  if (auto e = table.find(cfg.dim, G, g)) return *e;
  AnalysisConfig a = cfg.analysis(G);
  a.intergrid = g;
  const ShiftOptimum opt = optimize_shift(a);
  ShiftEntry e{cfg.dim, G, to_string(g), opt.alpha_star, opt.max_eg};
  table.put(e);
  table.save();
  return e;
}

// ---------------------------------------------------------------------------
// Problems and runs

inline SlownessModel build_model(const ExperimentConfig& cfg, const std::string& grid) {
  const ModelSpec spec = ModelSpec::parse(cfg.model);
  if (spec.from_file()) {
    std::ifstream in(spec.sidecar);
    if (!in) throw ConfigError("cannot open model sidecar " + spec.sidecar);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError("model sidecar " + spec.sidecar + ": " + e.what());
    }
    ModelMeta meta;
    meta.dim = j.at("dim").get<int>();
    const auto shape = j.at("shape").get<std::vector<int>>();
    if (static_cast<int>(shape.size()) != meta.dim) throw ConfigError("sidecar shape must have dim entries");
    for (int a = 0; a < meta.dim; ++a) meta.shape[static_cast<size_t>(a)] = shape[static_cast<size_t>(a)];
    meta.h = j.at("h").get<double>();
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "velocity") meta.kind = ValueKind::Velocity;
    else if (kind == "slowness") meta.kind = ValueKind::Slowness;
    else if (kind == "slowness-squared") meta.kind = ValueKind::SlownessSquared;
    else throw ConfigError("sidecar kind must be velocity, slowness or slowness-squared");
    std::filesystem::path data = j.contains("data") ? std::filesystem::path(j.at("data").get<std::string>())
                                                    : std::filesystem::path(spec.sidecar).replace_extension(".bin");
    if (data.is_relative()) data = std::filesystem::path(spec.sidecar).parent_path() / data;
    if (meta.dim != cfg.dim) throw ConfigError("model dimension does not match --dim");
    SlownessModel m;
    try {
      m = load_model(data.string(), meta);
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
    return cfg.extend > 0 ? extend_down(m, cfg.extend) : m;
  }
  const auto cells = parse_grid(grid, cfg.dim);
  return make_model(spec.kind, spec.lo, spec.hi, cfg.dim, cells, 1.0 / cells[0]);
}

inline HelmholtzProblem build_problem(const ExperimentConfig& cfg, const std::string& grid, double G) {
  SlownessModel model = build_model(cfg, grid);
  const bool heterogeneous = model.min_kappa2() != model.max_kappa2();
  const bool top = cfg.source == "top" || (cfg.source == "auto" && heterogeneous);
  return make_problem(std::move(model), G, cfg.pad, top);
}

struct RunResult {
  std::string grid;
  std::ptrdiff_t dofs = 0;
  std::string method;
  double G = 0.0;
  double alpha = 1.0;
  double beta = 0.0;
  std::string cycle;
  std::string solver;
  SolveReport report;
  double setup_seconds = 0.0;
  double seconds = 0.0;  // mean solve time over the timed repeats
};

inline json to_json(const RunResult& r) {
  return {{"grid", r.grid},
          {"dofs", r.dofs},
          {"method", r.method},
          {"G", r.G},
          {"alpha", r.alpha},
          {"beta", r.beta},
          {"cycle", r.cycle},
          {"solver", r.solver},
          {"iterations", r.report.iterations},
          {"converged", r.report.converged},
          {"diverged", r.report.diverged},
          {"residual_history", r.report.residual_history},
          {"estimated_residual", r.report.estimated_residual},
          {"setup_seconds", r.setup_seconds},
          {"seconds", r.seconds}};
}

/// Hierarchy for one method; returns the shifts actually used.
inline std::unique_ptr<MultigridHierarchy> build_method(const ExperimentConfig& cfg, const HelmholtzProblem& problem,
                                                        double G, const MethodSpec& method, double& alpha,
                                                        double& beta) {
  CyclePlan plan = cfg.plan();
  if (method.kind == MethodSpec::Kind::Cslp && method.intergrid) plan.intergrid = *method.intergrid;
  alpha = 1.0;
  beta = method.kind == MethodSpec::Kind::RsCgc ? cfg.beta : method.beta;
  if (method.uses_real_shift()) {
    const auto a = cfg.explicit_alpha();
    alpha = a ? *a : tuned_shift(cfg, G, plan.intergrid).alpha_star;
  }
  plan.alpha = alpha;
  plan.beta = beta;
  if (method.kind == MethodSpec::Kind::Rediscretization) return build_rediscretization_hierarchy(problem, plan);
  return build_hierarchy(problem, parse_scheme(cfg.scheme), plan);
}

inline SolveReport run_solver(const ExperimentConfig& cfg, const MultigridHierarchy& mg, const Vec& b) {
  const SolverSpec s = cfg.solver_spec();
  if (s.kind == SolverSpec::Kind::Stationary) {
    StationaryOptions o;
    o.tol = cfg.tol;
    o.maxit = cfg.effective_maxit();
    return stationary_solve(mg, b, o).second;
  }
  FgmresOptions o;
  o.restart = s.restart;
  o.tol = cfg.tol;
  o.maxit = cfg.effective_maxit();
  return fgmres(mg.target(), &mg, b, o).second;
}

inline RunResult run_case(const ExperimentConfig& cfg, const std::string& grid, double G,
                          const MethodSpec& method) {
  RunResult r;
  r.grid = grid;
  r.G = G;
  r.method = method.str();
  r.cycle = cfg.cycle;
  r.solver = cfg.solver_spec().str();
  const auto t0 = std::chrono::steady_clock::now();
  const HelmholtzProblem problem = build_problem(cfg, grid, G);
  const auto mg = build_method(cfg, problem, G, method, r.alpha, r.beta);
  r.setup_seconds = detail::seconds_since(t0);
  r.dofs = mg->size();
  const Vec b = point_source(problem);
  for (int w = 0; w < cfg.warmup; ++w) run_solver(cfg, *mg, b);
  double total = 0.0;
  for (int k = 0; k < cfg.repeat; ++k) {
    r.report = run_solver(cfg, *mg, b);
    total += r.report.wall_time;
  }
  r.seconds = total / cfg.repeat;
  return r;
}

inline std::string sweep_csv_header() { return "grid,dofs,method,alpha,beta,cycle,iters,converged,seconds"; }

inline std::string sweep_csv_row(const RunResult& r, int maxit) {
  std::ostringstream o;
  o.precision(10);
  const int iters = r.report.converged ? r.report.iterations : maxit;
  o << r.grid << ',' << r.dofs << ',' << r.method << ',' << r.alpha << ',' << r.beta << ',' << r.cycle << ','
    << iters << ',' << (r.report.converged ? "true" : "false") << ',' << r.seconds;
  return o.str();
}

/// All (grid, method) cells for the first G value, evaluated by up to
/// cfg.workers threads; the result order follows the config order.
inline std::vector<RunResult> run_sweep(const ExperimentConfig& cfg) {
  if (cfg.grids.empty()) throw ConfigError("sweep needs at least one grid size");
  if (cfg.methods.empty()) throw ConfigError("sweep needs at least one method");
  // Tuned shifts are resolved before the workers start.
  for (const auto& m : cfg.methods) {
    const MethodSpec spec = MethodSpec::parse(m);
    if (spec.uses_real_shift() && !cfg.explicit_alpha()) tuned_shift(cfg, cfg.G.front(), cfg.intergrid_kind());
  }
  struct Cell {
    std::string grid;
    MethodSpec method;
  };
  std::vector<Cell> cells;
  for (const auto& g : cfg.grids)
    for (const auto& m : cfg.methods) cells.push_back({g, MethodSpec::parse(m)});
  std::vector<RunResult> out(cells.size());
  std::vector<std::exception_ptr> errors(cells.size());
  std::atomic<size_t> next{0};
  auto work = [&] {
    for (size_t i; (i = next++) < cells.size();) {
      try {
        out[i] = run_case(cfg, cells[i].grid, cfg.G.front(), cells[i].method);
      } catch (const SingularCoarseOperator&) {
        RunResult r;
        r.grid = cells[i].grid;
        r.method = cells[i].method.str();
        r.cycle = cfg.cycle;
        r.report.diverged = true;
        out[i] = r;
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int nthreads = std::min<int>(cfg.workers, static_cast<int>(cells.size()));
  if (nthreads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

// ---------------------------------------------------------------------------
// Dispersion outputs

struct TuneRow {
  int dim;
  double G;
  std::string intergrid;
  double alpha_star;
  double max_eg;
  long ncrit_lo, ncrit_hi;
};

inline TuneRow tune_row(const ExperimentConfig& cfg, double G) {
  const AnalysisConfig a = cfg.analysis(G);
  const ShiftOptimum opt = optimize_shift(a);
  const auto [lo, hi] = ncrit_bounds(G, opt.max_eg);
  return {cfg.dim, G, to_string(a.intergrid), opt.alpha_star, opt.max_eg, lo, hi};
}

inline std::string tune_csv_header() { return "G,dim,intergrid,alpha_star,max_eg,ncrit_lo,ncrit_hi"; }
inline std::string tune_csv_row(const TuneRow& r) {
  std::ostringstream o;
  o.precision(10);
  o << r.G << ',' << r.dim << ',' << r.intergrid << ',' << r.alpha_star << ',' << r.max_eg << ',' << r.ncrit_lo
    << ',' << r.ncrit_hi;
  return o.str();
}

/// "lo:hi" alpha range.
inline std::pair<double, double> parse_alpha_range(const std::string& s) {
  const auto parts = split(s, ':');
  if (parts.size() != 2) throw ConfigError("alpha range must be lo:hi, got '" + s + "'");
  const double lo = parse_number(parts[0], "alpha range"), hi = parse_number(parts[1], "alpha range");
  if (!(lo > 0.0) || !(hi >= lo)) throw ConfigError("alpha range must satisfy 0 < lo <= hi");
  return {lo, hi};
}

struct AlphaScanRow {
  double alpha;
  double eg_max;
  std::optional<double> conv_factor;
};

/// Measured asymptotic convergence factor of the stationary solver at one
/// shift: geometric-mean residual reduction over the last 5 iterations.
inline double measured_convergence_factor(const ExperimentConfig& cfg, const HelmholtzProblem& problem,
                                          double alpha, int iterations) {
  CyclePlan plan = cfg.plan();
  plan.alpha = alpha;
  const auto mg = build_hierarchy(problem, parse_scheme(cfg.scheme), plan);
  StationaryOptions o;
  o.tol = 1e-300;
  o.maxit = iterations;
  o.divergence_factor = std::numeric_limits<double>::infinity();
  const SolveReport rep = stationary_solve(*mg, point_source(problem), o).second;
  return convergence_factor(rep.residual_history, 5);
}

inline std::vector<AlphaScanRow> alpha_scan(const ExperimentConfig& cfg, double G) {
  const auto [lo, hi] = parse_alpha_range(cfg.alpha_scan);
  AnalysisConfig a = cfg.analysis(G);
  a.alpha_lo = lo;
  a.alpha_hi = hi;
  const DispersionScan scan = scan_shifts(a);
  std::optional<HelmholtzProblem> problem;
  if (!cfg.scan_grid.empty()) problem = build_problem(cfg, cfg.scan_grid, G);
  std::vector<AlphaScanRow> rows;
  for (size_t i = 0; i < scan.alphas.size(); ++i) {
    AlphaScanRow r{scan.alphas[i], scan.objective[i], std::nullopt};
    if (problem) r.conv_factor = measured_convergence_factor(cfg, *problem, r.alpha, cfg.scan_iterations);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace hmg
