#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hmg/experiment.hpp"

using namespace hmg;
namespace fs = std::filesystem;

namespace {

fs::path scratch() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("hmg_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

int run(const std::string& args) {
  const std::string cmd = std::string(HMG_CLI_PATH) + " " + args + " 2>>" + (scratch() / "stderr.log").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

/// Drops the trailing seconds column from sweep CSV rows.
std::string without_time(const std::string& csv) {
  std::string out;
  for (const auto& l : lines(csv)) out += l.substr(0, l.rfind(',')) + '\n';
  return out;
}

}  // namespace

TEST(Specs, Model) {
  EXPECT_EQ(ModelSpec::parse("homogeneous").kind, ModelKind::Homogeneous);
  const auto w = ModelSpec::parse("wedge");
  EXPECT_EQ(w.kind, ModelKind::Wedge);
  EXPECT_DOUBLE_EQ(w.lo, 0.1);
  const auto l = ModelSpec::parse("linear:0.3:0.9");
  EXPECT_DOUBLE_EQ(l.lo, 0.3);
  EXPECT_DOUBLE_EQ(l.hi, 0.9);
  EXPECT_EQ(ModelSpec::parse("file:m.json").sidecar, "m.json");
  EXPECT_EQ(ModelSpec::parse(l.str()).hi, 0.9);
  EXPECT_THROW(ModelSpec::parse("granite"), ConfigError);
  EXPECT_THROW(ModelSpec::parse("linear:0.5"), ConfigError);
  EXPECT_THROW(ModelSpec::parse("linear:1:0.5"), ConfigError);
  EXPECT_THROW(ModelSpec::parse("file:"), ConfigError);
}

TEST(Specs, Solver) {
  EXPECT_EQ(SolverSpec::parse("fgmres(20)").restart, 20);
  EXPECT_EQ(SolverSpec::parse("fgmres").restart, 0);
  EXPECT_EQ(SolverSpec::parse("stationary").kind, SolverSpec::Kind::Stationary);
  EXPECT_EQ(SolverSpec::parse("fgmres(7)").str(), "fgmres(7)");
  EXPECT_THROW(SolverSpec::parse("fgmres(0)"), ConfigError);
  EXPECT_THROW(SolverSpec::parse("fgmres(2.5)"), ConfigError);
  EXPECT_THROW(SolverSpec::parse("bicgstab"), ConfigError);
}

TEST(Specs, Method) {
  EXPECT_EQ(MethodSpec::parse("rs-cgc").kind, MethodSpec::Kind::RsCgc);
  const auto c = MethodSpec::parse("cslp:0.3:linear");
  EXPECT_EQ(c.kind, MethodSpec::Kind::Cslp);
  EXPECT_DOUBLE_EQ(c.beta, 0.3);
  EXPECT_EQ(*c.intergrid, Intergrid::Linear);
  EXPECT_EQ(c.str(), "cslp:0.3:linear");
  EXPECT_TRUE(MethodSpec::parse("rs-cgc+cslp:0.03").uses_real_shift());
  EXPECT_FALSE(MethodSpec::parse("rediscretization").uses_real_shift());
  EXPECT_THROW(MethodSpec::parse("cslp"), ConfigError);
  EXPECT_THROW(MethodSpec::parse("cslp:-1"), ConfigError);
  EXPECT_THROW(MethodSpec::parse("cslp:0.1:quintic"), ConfigError);
  EXPECT_THROW(MethodSpec::parse("rs-cgc:1"), ConfigError);
}

TEST(Specs, Grid) {
  EXPECT_EQ(parse_grid("128", 2), (std::array<int, 3>{128, 128, 0}));
  EXPECT_EQ(parse_grid("544x144", 2), (std::array<int, 3>{544, 144, 0}));
  EXPECT_THROW(parse_grid("12x12x12", 2), ConfigError);
  EXPECT_THROW(parse_grid("0", 2), ConfigError);
  EXPECT_THROW(parse_grid("abc", 2), ConfigError);
}

TEST(Config, DefaultsAreValid) {
  ExperimentConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.intergrid_kind(), Intergrid::Cubic);
  c.dim = 3;
  EXPECT_EQ(c.intergrid_kind(), Intergrid::LevelDependent);
  EXPECT_FALSE(c.explicit_alpha());
  c.alpha = "1.02";
  EXPECT_DOUBLE_EQ(*c.explicit_alpha(), 1.02);
}

TEST(Config, RejectsInvalidValues) {
  ExperimentConfig c;
  c.damping = {0.5};
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.G.clear();
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.alpha = "fast";
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.source = "left";
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.radius_mode = "exact";
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Config, JsonRoundTrip) {
  ExperimentConfig c;
  c.G = {10, 11};
  c.grids = {"64", "128x32"};
  c.model = "wedge:0.1:1";
  c.alpha = "1.0045";
  c.damping = {0.6, 0.4};
  c.methods = {"rs-cgc", "cslp:0.3:linear"};
  c.seed = 42;
  const fs::path p = scratch() / "roundtrip.json";
  save_config(c, p.string());
  const ExperimentConfig r = load_config(p.string());
  EXPECT_EQ(json(r), json(c));
}

TEST(Config, PartialFileKeepsDefaults) {
  const fs::path p = scratch() / "partial.json";
  std::ofstream(p) << R"({"G": [11], "cycle": "V"})";
  const ExperimentConfig c = load_config(p.string());
  EXPECT_EQ(c.G, std::vector<double>{11});
  EXPECT_EQ(c.cycle, "V");
  EXPECT_EQ(c.solver, "fgmres(20)");
  std::ofstream(p) << "{not json";
  EXPECT_THROW(load_config(p.string()), ConfigError);
}

TEST(ShiftTableFile, PutFindSave) {
  const fs::path p = scratch() / "table.json";
  fs::remove(p);
  {
    ShiftTable t(p.string());
    EXPECT_FALSE(t.find(2, 12, Intergrid::Cubic));
    t.put({2, 12, "cubic", 1.0045, 3.34e-3});
    t.put({2, 12, "cubic", 1.0050, 3.5e-3});
    t.put({3, 12, "level-dependent", 1.0115, 9.5e-3});
    EXPECT_EQ(t.entries().size(), 2u);
    t.save();
  }
  ShiftTable t(p.string());
  ASSERT_TRUE(t.find(2, 12, Intergrid::Cubic));
  EXPECT_DOUBLE_EQ(t.find(2, 12, Intergrid::Cubic)->alpha_star, 1.0050);
  EXPECT_FALSE(t.find(2, 12, Intergrid::LevelDependent));
}

TEST(ShiftTableFile, EnvironmentFallback) {
  ::setenv("HELM_SHIFT_TABLE", "/tmp/from_env.json", 1);
  EXPECT_EQ(ShiftTable::resolve_path(""), "/tmp/from_env.json");
  EXPECT_EQ(ShiftTable::resolve_path("explicit.json"), "explicit.json");
  ::unsetenv("HELM_SHIFT_TABLE");
  EXPECT_EQ(ShiftTable::resolve_path(""), "");
}

TEST(ShiftTableFile, TunedShiftUsesCacheEntry) {
  const fs::path p = scratch() / "cached.json";
  fs::remove(p);
  ShiftTable t(p.string());
  t.put({2, 12, "cubic", 1.004, 1.0});
  t.save();
  ExperimentConfig c;
  c.shift_table = p.string();
  EXPECT_DOUBLE_EQ(tuned_shift(c, 12, Intergrid::Cubic).alpha_star, 1.004);
}

TEST(Sweep, CsvRowFormat) {
  RunResult r;
  r.grid = "128";
  r.dofs = 28561;
  r.method = "rs-cgc";
  r.alpha = 1.0045;
  r.beta = 0.0;
  r.cycle = "W(1,1)";
  r.report.iterations = 37;
  r.report.converged = false;
  r.seconds = 0.5;
  const std::string row = sweep_csv_row(r, 200);
  EXPECT_EQ(row.rfind("128,28561,rs-cgc,1.0045,0,W(1,1),200,false,", 0), 0u) << row;
  EXPECT_EQ(sweep_csv_header(), "grid,dofs,method,alpha,beta,cycle,iters,converged,seconds");
}

TEST(AlphaRange, Parsing) {
  EXPECT_EQ(parse_alpha_range("0.98:1.06"), (std::pair<double, double>{0.98, 1.06}));
  EXPECT_THROW(parse_alpha_range("1.06:0.98"), ConfigError);
  EXPECT_THROW(parse_alpha_range("1.0"), ConfigError);
}

TEST(Binary, TuneShiftReportsTableOptimum) {
  const fs::path out = scratch() / "tune.json";
  const fs::path table = scratch() / "tune_table.json";
  fs::remove(table);
  ASSERT_EQ(run("tune-shift --dim 2 --G 12 --intergrid cubic --json --shift-table " + table.string() + " -o " +
                out.string()),
            0);
  const json j = json::parse(slurp(out));
  ASSERT_EQ(j.size(), 1u);
  EXPECT_NEAR(j[0]["alpha_star"].get<double>(), 1.0045, 5e-4 + 1e-12);
  EXPECT_EQ(j[0]["ncrit_lo"].get<long>(), 898);
  EXPECT_TRUE(ShiftTable(table.string()).find(2, 12, Intergrid::Cubic));
}

TEST(Binary, TuneShiftCsv) {
  const fs::path out = scratch() / "tune.csv";
  ASSERT_EQ(run("tune-shift --G 12 -o " + out.string()), 0);
  const auto l = lines(slurp(out));
  ASSERT_EQ(l.size(), 2u);
  EXPECT_EQ(l[0], "G,dim,intergrid,alpha_star,max_eg,ncrit_lo,ncrit_hi");
  EXPECT_EQ(l[1].rfind("12,2,cubic,1.0045,", 0), 0u) << l[1];
}

TEST(Binary, InvalidInvocationsExitTwo) {
  EXPECT_EQ(run("tune-shift --dim 2"), 2);
  EXPECT_EQ(run("sweep --grid ''"), 2);
  EXPECT_EQ(run("dispersion --alpha-scan 1.06:0.98"), 2);
  EXPECT_EQ(run("solve --method quintic"), 2);
  EXPECT_EQ(run("solve --solver gmres"), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("solve --config /nonexistent/config.json"), 2);
}

TEST(Binary, SolveSmallHomogeneousCase) {
  const fs::path out = scratch() / "solve.json";
  ASSERT_EQ(run("solve --grid 64 --G 12 --alpha 1.0045 --pad 8 --warmup 0 -o " + out.string()), 0);
  const json j = json::parse(slurp(out));
  EXPECT_TRUE(j["converged"].get<bool>());
  EXPECT_LE(j["iterations"].get<int>(), 10);
  const auto hist = j["residual_history"].get<std::vector<double>>();
  EXPECT_EQ(hist.size(), static_cast<size_t>(j["iterations"].get<int>() + 1));
  EXPECT_LE(hist.back(), 1e-6);
}

TEST(Binary, SolveDivergenceExitsOne) {
  const fs::path out = scratch() / "diverge.json";
  EXPECT_EQ(run("solve --grid 64 --G 12 --alpha 1.0045 --pad 8 --warmup 0 --maxit 1 -o " + out.string()), 1);
  EXPECT_FALSE(json::parse(slurp(out))["converged"].get<bool>());
}

TEST(Binary, DispersionCurveCsv) {
  const fs::path out = scratch() / "curve.csv";
  ASSERT_EQ(run("dispersion --G 12 --alpha 1.0045 --curve-resolution 0.1 -o " + out.string()), 0);
  const auto l = lines(slurp(out));
  ASSERT_EQ(l.size(), 64u);
  EXPECT_EQ(l[0], "phi,r_coarse,r_fine_stretched");
  double gap = 0.0;
  for (size_t i = 1; i < l.size(); ++i) {
    const auto f = split(l[i], ',');
    ASSERT_EQ(f.size(), 3u);
    const double rc = std::stod(f[1]), rf = std::stod(f[2]);
    gap = std::max(gap, std::abs(rc - rf) / rf);
  }
  EXPECT_LE(gap, 3.4e-3);
}

TEST(Binary, DispersionAlphaScanCsv) {
  const fs::path out = scratch() / "scan.csv";
  ASSERT_EQ(run("dispersion --G 11 --alpha-scan 1.0:1.01 --alpha-resolution 0.005 -o " + out.string()), 0);
  const auto l = lines(slurp(out));
  ASSERT_EQ(l.size(), 4u);
  EXPECT_EQ(l[0], "alpha,e_g_max,conv_factor");
  EXPECT_EQ(split(l[1], ',').size(), 3u);
}

TEST(Binary, SweepReproducesFromEmittedConfig) {
  const fs::path cfg = scratch() / "sweep_cfg.json";
  const fs::path a = scratch() / "sweep_a.csv", b = scratch() / "sweep_b.csv";
  ASSERT_EQ(run("sweep --grid 32,64 --G 12 --alpha 1.0045 --pad 8 --warmup 0 --methods rs-cgc,cslp:0.5 "
                "--emit-config " + cfg.string() + " -o " + a.string()),
            0);
  ASSERT_EQ(run("sweep --config " + cfg.string() + " -o " + b.string()), 0);
  const std::string ta = slurp(a);
  ASSERT_EQ(lines(ta).size(), 5u);
  EXPECT_EQ(lines(ta)[0], sweep_csv_header());
  EXPECT_EQ(without_time(ta), without_time(slurp(b)));
  EXPECT_EQ(lines(ta)[1].rfind("32,", 0), 0u);
  EXPECT_NE(lines(ta)[2].find(",cslp:0.5,"), std::string::npos);
}

TEST(Binary, FlagsOverrideConfigFile) {
  const fs::path cfg = scratch() / "override.json";
  std::ofstream(cfg) << R"({"G": [10], "intergrid": "cubic"})";
  const fs::path out = scratch() / "override.csv";
  ASSERT_EQ(run("tune-shift --config " + cfg.string() + " --G 12 -o " + out.string()), 0);
  EXPECT_EQ(lines(slurp(out))[1].rfind("12,", 0), 0u);
}
