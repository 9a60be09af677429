#include <enkfmc/errors.hpp>
#include <enkfmc/experiment.hpp>

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace enkfmc {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("enkfmc_test_" + name);
  fs::remove_all(p);
  return p;
}

ExperimentConfig small_l96(const std::string& extra = "") {
  return ExperimentConfig::from_keys(KeyValueConfig::parse(
      "nx = 20\ncycles = 6\nnens = 8\ndelta = 2\nreference_spinup = 1\n" + extra));
}

TEST(ObservationLattice, FullFraction) {
  const auto g = GridGeometry::grid(5, 4);
  EXPECT_EQ(observation_lattice(g, 1.0).size(), 20u);
}

TEST(ObservationLattice, QuarterOfFourByFour) {
  const auto g = GridGeometry::grid(4, 4);
  EXPECT_EQ(observation_lattice(g, 0.25), (IndexList{0, 2, 8, 10}));
}

TEST(ObservationLattice, RingStride) {
  EXPECT_EQ(observation_lattice(GridGeometry::ring(40), 0.5).size(), 20u);
  EXPECT_EQ(observation_lattice(GridGeometry::ring(10), 0.5), (IndexList{0, 2, 4, 6, 8}));
}

TEST(ObservationLattice, ExactCountForSparseFractions) {
  const auto g = GridGeometry::grid(32, 32);
  for (double p : {0.5, 0.12, 0.06, 0.04}) {
    const auto idx = observation_lattice(g, p);
    EXPECT_EQ(static_cast<double>(idx.size()), std::ceil(p * 1024.0 - 1e-9)) << p;
    EXPECT_TRUE(std::is_sorted(idx.begin(), idx.end()));
    EXPECT_EQ(std::adjacent_find(idx.begin(), idx.end()), idx.end());
  }
  EXPECT_THROW(observation_lattice(g, 0.0), ConfigError);
  EXPECT_THROW(observation_lattice(g, 1.5), ConfigError);
}

TEST(BuildObservationNetwork, VarianceFloorAndDeterminism) {
  const auto g = GridGeometry::ring(4);
  Vector xref(4);
  xref << 0.0, 2.0, 0.0, -3.0;
  const auto net = build_observation_network(g, 1.0, xref, 0.01, 5, 0);
  EXPECT_EQ(net.r_diag[0], kObservationVarianceFloor);
  EXPECT_DOUBLE_EQ(net.r_diag[1], 4e-4);
  EXPECT_DOUBLE_EQ(net.r_diag[3], 9e-4);
  const auto again = build_observation_network(g, 1.0, xref, 0.01, 5, 0);
  EXPECT_EQ(net.y, again.y);
  EXPECT_NE(build_observation_network(g, 1.0, xref, 0.01, 5, 1).y, net.y);
  EXPECT_THROW(build_observation_network(g, 1.0, Vector::Zero(3), 0.01, 5, 0), DomainError);
}

TEST(Rmse, ZeroWhenEqual) {
  std::vector<Vector> a{Vector::Ones(3), Vector::Zero(3)};
  const auto r = rmse(a, a);
  EXPECT_EQ(r.raw_total, 0.0);
  EXPECT_EQ(r.normalized_total, 0.0);
  EXPECT_EQ(r.raw.size(), 2u);
}

TEST(Rmse, AllOnesErrorOfLengthFour) {
  std::vector<Vector> ref{Vector::Zero(4)}, xa{Vector::Ones(4)};
  const auto r = rmse(ref, xa);
  EXPECT_DOUBLE_EQ(r.raw_total, 2.0);
  EXPECT_DOUBLE_EQ(r.normalized_total, 1.0);
}

TEST(Rmse, Homogeneous) {
  std::vector<Vector> ref{Vector::Zero(3), Vector::Zero(3)};
  std::vector<Vector> e1{Vector::LinSpaced(3, 1, 3), Vector::Constant(3, -0.5)};
  std::vector<Vector> e2{2.0 * e1[0], 2.0 * e1[1]};
  const auto a = rmse(ref, e1), b = rmse(ref, e2);
  EXPECT_DOUBLE_EQ(b.raw_total, 2.0 * a.raw_total);
  EXPECT_DOUBLE_EQ(b.normalized_total, 2.0 * a.normalized_total);
}

TEST(Rmse, LengthMismatch) {
  std::vector<Vector> a{Vector::Zero(2)}, b;
  EXPECT_THROW(rmse(a, b), DomainError);
  std::vector<Vector> c{Vector::Zero(3)};
  EXPECT_THROW(rmse(a, c), DomainError);
}

TEST(SpinUp, VanishingPerturbation) {
  const auto g = GridGeometry::ring(20);
  const auto m = ModelHandle::lorenz96(g);
  Vector x0 = Vector::Constant(20, 8.0);
  x0[0] += 0.5;
  const auto s = spin_up(m, x0, 1e-12, 5, 1, 0.5, 0.5);
  for (Index i = 0; i < 5; ++i) EXPECT_LE((s.ensemble.x.col(i) - s.reference).norm(), 1e-6);
}

TEST(SpinUp, DeterministicAcrossRunsAndWorkers) {
  const auto g = GridGeometry::ring(20);
  const auto m = ModelHandle::lorenz96(g);
  const Vector x0 = Vector::Constant(20, 8.0) + Vector::LinSpaced(20, 0, 1);
  const auto a = spin_up(m, x0, 0.05, 6, 3, 0.5, 1.0, 1);
  const auto b = spin_up(m, x0, 0.05, 6, 3, 0.5, 1.0, 3);
  EXPECT_EQ(a.ensemble.x, b.ensemble.x);
  EXPECT_EQ(a.reference, b.reference);
}

TEST(SpinUp, SpreadPositiveFiniteAndStableAcrossSeeds) {
  ExperimentConfig cfg;
  const auto m = cfg.make_model();
  const Vector x0 = propagate(m, initial_reference(cfg), cfg.reference_spinup);
  std::vector<double> spreads;
  for (std::uint64_t seed : {1, 2, 3, 4}) {
    const auto s = spin_up(m, x0, 0.05, 20, seed, cfg.background_spinup, cfg.ensemble_spinup);
    const Matrix& x = s.ensemble.x;
    double spread = 0.0;
    for (Index r = 0; r < x.rows(); ++r) {
      const double mean = x.row(r).mean();
      spread += std::sqrt((x.row(r).array() - mean).square().sum() / 19.0);
    }
    spread /= static_cast<double>(x.rows());
    EXPECT_GT(spread, 0.0);
    EXPECT_TRUE(std::isfinite(spread));
    spreads.push_back(spread);
  }
  const auto [lo, hi] = std::minmax_element(spreads.begin(), spreads.end());
  EXPECT_LE(*hi, 3.0 * *lo);
}

TEST(SpinUp, Errors) {
  const auto m = ModelHandle::lorenz96(GridGeometry::ring(8));
  EXPECT_THROW(spin_up(m, Vector::Constant(8, 8.0), 0.0, 4, 1, 0.1, 0.1), ConfigError);
  EXPECT_THROW(spin_up(m, Vector::Constant(8, 8.0), 0.1, 1, 1, 0.1, 0.1), ConfigError);
  EXPECT_THROW(spin_up(m, Vector::Constant(8, 1e200), 0.1, 3, 1, 1.0, 0.1), DivergenceError);
}

TEST(ExperimentConfig, DefaultsAndUnknownKeys) {
  const auto c = ExperimentConfig::from_keys(KeyValueConfig{});
  EXPECT_EQ(c.model, ModelKind::lorenz96);
  EXPECT_EQ(c.nx, 40);
  EXPECT_EQ(c.nens, 20);
  EXPECT_EQ(c.cycles, 50);
  EXPECT_DOUBLE_EQ(c.obs_fraction, 0.5);
  EXPECT_DOUBLE_EQ(c.background_factor, 0.05);
  EXPECT_DOUBLE_EQ(c.obs_noise_factor, 0.01);
  EXPECT_THROW(ExperimentConfig::from_keys(KeyValueConfig::parse("colour = red\n")), ConfigError);
}

TEST(ExperimentConfig, AdvDiffDefaults) {
  const auto c = ExperimentConfig::from_keys(KeyValueConfig::parse("model = advdiff2d\n"));
  EXPECT_EQ(c.grid, GridKind::grid2d);
  EXPECT_EQ(c.geometry().nstate(), 1024);
  EXPECT_TRUE(c.geometry().periodic());
}

TEST(ExperimentConfig, InvalidValues) {
  for (const char* text : {"nens = 1\n", "cycles = 0\n", "obs_fraction = 0\n",
                           "window = 0.0123\n", "delta = 41\n", "methods = \n",
                           "inflation = 0.5\n", "nx = abc\n"}) {
    EXPECT_THROW(ExperimentConfig::from_keys(KeyValueConfig::parse(text)), ConfigError) << text;
  }
}

TEST(ExperimentConfig, EchoRoundTrips) {
  const auto c = small_l96("methods = letkf,enkf_mc_dual\ninflation = 1.05\nseed = 99\n");
  const auto again = ExperimentConfig::from_keys(KeyValueConfig::parse(c.echo()));
  EXPECT_EQ(again.echo(), c.echo());
  EXPECT_EQ(again.methods, c.methods);
  EXPECT_EQ(again.assimilation.seed, 99u);
}

TEST(TwinExperiment, RowAccountingAndHeaders) {
  auto cfg = small_l96("methods = letkf,enkf_mc_primal\n");
  cfg.out_dir = scratch("rows");
  run_twin_experiment(cfg);
  const auto rm = lines(slurp(cfg.out_dir / "rmse.csv"));
  ASSERT_EQ(rm.size(), 1u + 3u * 6u);
  EXPECT_EQ(rm[0], "cycle,method,rmse_paper,rmse_normalized");
  EXPECT_EQ(rm[1].rfind("0,letkf,", 0), 0u);
  EXPECT_EQ(rm[7].rfind("0,enkf_mc_primal,", 0), 0u);
  EXPECT_EQ(rm[13].rfind("0,free_run,", 0), 0u);
  const auto tm = lines(slurp(cfg.out_dir / "timings.csv"));
  ASSERT_EQ(tm.size(), 1u + 2u * 6u);
  EXPECT_EQ(tm[0], "cycle,method,delta,workers,t_estimation_max,t_analysis_max,t_merge,t_total");
  EXPECT_TRUE(fs::exists(cfg.out_dir / "config.txt"));
  fs::remove_all(cfg.out_dir);
}

TEST(TwinExperiment, WorkerInvariance) {
  auto cfg = small_l96("methods = enkf_mc_primal,letkf\ndelta = 4\n");
  cfg.out_dir = scratch("w1");
  run_twin_experiment(cfg);
  const auto one = slurp(cfg.out_dir / "rmse.csv");
  fs::remove_all(cfg.out_dir);
  cfg.assimilation.workers = 3;
  cfg.out_dir = scratch("w3");
  run_twin_experiment(cfg);
  EXPECT_EQ(slurp(cfg.out_dir / "rmse.csv"), one);
  fs::remove_all(cfg.out_dir);
}

TEST(TwinExperiment, NoObservationsMatchesFreeRun) {
  const auto cfg = small_l96("observe = false\nmethods = enkf_mc_primal,enkf_mc_dual,letkf\n");
  const auto r = run_twin_experiment(cfg);
  EXPECT_EQ(r.nobs, 0);
  for (const auto& m : r.methods) {
    EXPECT_EQ(m.rmse.raw, r.free_run.raw) << to_string(m.method);
    EXPECT_EQ(m.rmse.normalized, r.free_run.normalized);
  }
}

TEST(TwinExperiment, AssimilationBeatsFreeRunAndNoise) {
  ExperimentConfig cfg;
  cfg.methods = {Method::enkf_mc_primal, Method::letkf};
  cfg.assimilation.zeta = 2;
  cfg.assimilation.delta = 4;
  cfg.assimilation.inflation = 1.05;
  const auto r = run_twin_experiment(cfg);
  const auto half = [](const std::vector<double>& s) {
    double acc = 0.0;
    for (std::size_t k = s.size() / 2; k < s.size(); ++k) acc += s[k];
    return acc / static_cast<double>(s.size() - s.size() / 2);
  };
  const double free = half(r.free_run.normalized);
  // noise standard deviation relative to a typical state magnitude
  const double noise = cfg.obs_noise_factor * 8.0;
  for (const auto& m : r.methods) {
    EXPECT_LT(half(m.rmse.normalized), free) << to_string(m.method);
    EXPECT_LT(half(m.rmse.normalized), noise) << to_string(m.method);
  }
}

TEST(TwinExperiment, FailureLeavesNoFiles) {
  auto cfg = small_l96("forcing = 1e200\n");
  cfg.out_dir = scratch("fail");
  EXPECT_THROW(run_twin_experiment(cfg), DivergenceError);
  EXPECT_FALSE(fs::exists(cfg.out_dir / "rmse.csv"));
}

TEST(Sweep, WritesOneRowPerValueAndMethod) {
  auto cfg = small_l96("methods = enkf_mc_primal,letkf\ncycles = 3\n");
  cfg.out_dir = scratch("sweep");
  const auto results = run_sweep(cfg, "zeta", {0, 1, 3});
  EXPECT_EQ(results.size(), 3u);
  const auto sw = lines(slurp(cfg.out_dir / "sweep.csv"));
  ASSERT_EQ(sw.size(), 1u + 3u * 3u);
  EXPECT_EQ(sw[0], "param,value,method,rmse_paper,rmse_normalized,t_total_mean");
  EXPECT_EQ(sw[1].rfind("zeta,0,enkf_mc_primal,", 0), 0u);
  EXPECT_TRUE(fs::exists(cfg.out_dir / "zeta_3" / "rmse.csv"));
  EXPECT_THROW(run_sweep(cfg, "nens", {1}), ConfigError);
  fs::remove_all(cfg.out_dir);
}

TEST(Sweep, RadiusTwoNoWorseThanZeroOnDefaultGrid) {
  auto cfg = ExperimentConfig::from_keys(KeyValueConfig::parse(
      "model = advdiff2d\ndelta = 8\ncycles = 20\nseed = 7\nobs_fraction = 0.25\n"
      "methods = enkf_mc_primal\n"));
  const auto r = run_sweep(cfg, "zeta", {0, 2});
  EXPECT_LE(r[1].methods[0].rmse.normalized_total, r[0].methods[0].rmse.normalized_total);
}

TEST(DumpPrecision, WritesFactorFiles) {
  auto cfg = small_l96("zeta = 1\n");
  cfg.out_dir = scratch("dump");
  const auto f = dump_precision(cfg, 1);
  EXPECT_EQ(f.n(), 12);  // 10 interior + one halo cell per side
  const auto t = lines(slurp(cfg.out_dir / "T_subdomain1.txt"));
  EXPECT_EQ(static_cast<Index>(t.size()), f.n() + f.nnz());
  const auto d = lines(slurp(cfg.out_dir / "D_subdomain1.txt"));
  EXPECT_EQ(static_cast<Index>(d.size()), f.n());
  EXPECT_THROW(dump_precision(cfg, 2), ConfigError);
  fs::remove_all(cfg.out_dir);
}

}  // namespace
}  // namespace enkfmc
