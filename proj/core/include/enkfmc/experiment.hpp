#pragma once

#include <enkfmc/config.hpp>
#include <enkfmc/grid.hpp>
#include <enkfmc/models.hpp>
#include <enkfmc/observations.hpp>
#include <enkfmc/parallel.hpp>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace enkfmc {

/// Floor on observation error variances (a zero reference value would
/// otherwise give R_ii = 0).
inline constexpr double kObservationVarianceFloor = 1e-8;

/// Floor on the variance of spin-up perturbations.
inline constexpr double kPerturbationVarianceFloor = 1e-20;

inline constexpr std::string_view kRmseHeader = "cycle,method,rmse_paper,rmse_normalized";
inline constexpr std::string_view kSweepHeader =
    "param,value,method,rmse_paper,rmse_normalized,t_total_mean";
inline constexpr std::string_view kFreeRunTag = "free_run";

struct ExperimentConfig {
  // geometry
  GridKind grid = GridKind::ring1d;
  Index nx = 40;
  Index ny = 1;
  Ordering ordering = Ordering::row_major;
  Boundary boundary = Boundary::periodic;

  // model
  ModelKind model = ModelKind::lorenz96;
  double forcing = 8.0;
  double dt = 0.005;
  double ux = 0.5;
  double uy = 0.25;
  double kappa = 0.1;
  double window = 0.05;             // forecast length between cycles
  double reference_spinup = 10.0;   // truth burn-in before the experiment
  double background_spinup = 0.5;  // after the first perturbation
  double ensemble_spinup = 1.0;    // after the per-member perturbation

  // twin experiment
  Index nens = 20;
  Index cycles = 50;
  double obs_fraction = 0.5;
  double background_factor = 0.05;
  double obs_noise_factor = 0.01;
  bool observe = true;

  // assimilation
  std::vector<Method> methods{Method::enkf_mc_primal, Method::letkf};
  AssimilationConfig assimilation{};

  std::filesystem::path out_dir;

  GridGeometry geometry() const;
  ModelHandle make_model() const;
  void validate() const;

  /// Resolved key=value listing, in the config file format.
  std::string echo() const;

  static ExperimentConfig from_keys(const KeyValueConfig& kv);
};

/// Every key accepted by ExperimentConfig::from_keys.
const std::vector<std::string>& experiment_keys();

/// Deterministic initial truth before burn-in.
Vector initial_reference(const ExperimentConfig& cfg);

/// Uniform-stride lattice of ceil(p * nstate) observed components.
IndexList observation_lattice(const GridGeometry& geometry, double p);

/// Network on the lattice with R_ii = max((noise_factor (H xref)_i)^2, floor)
/// and y = H xref + N(0, R), drawn from (seed, cycle).
ObservationNetwork build_observation_network(const GridGeometry& geometry, double p,
                                             const Vector& xref, double noise_factor,
                                             std::uint64_t seed, std::uint64_t cycle);

struct SpinUp {
  Vector reference;       // truth at the first analysis time
  EnsembleState ensemble;  // background at the first analysis time
};

/// Perturb the reference, propagate over `background_window`, perturb each
/// member, propagate each over `ensemble_window`.
SpinUp spin_up(const ModelHandle& model, const Vector& xref0, double factor, Index nens,
               std::uint64_t seed, double background_window, double ensemble_window,
               int workers = 1);

struct RmseSeries {
  std::vector<double> raw;         // sqrt(e^T e) per cycle
  std::vector<double> normalized;  // sqrt(e^T e / Nstate) per cycle
  double raw_total = 0.0;          // sqrt(mean_k e_k^T e_k)
  double normalized_total = 0.0;   // sqrt(mean_k e_k^T e_k / Nstate)
};

RmseSeries rmse(std::span<const Vector> xref, std::span<const Vector> xa);

struct MethodResult {
  Method method;
  RmseSeries rmse;
  std::vector<CycleReport> reports;
};

struct ExperimentResult {
  std::vector<MethodResult> methods;
  RmseSeries free_run;
  Index nobs = 0;
};

/// Runs the full twin experiment; writes rmse.csv, timings.csv and
/// config.txt into cfg.out_dir when it is non-empty. Files written before a
/// failure are removed.
ExperimentResult run_twin_experiment(const ExperimentConfig& cfg);

/// Re-runs the experiment for each value of `param` (zeta, delta or
/// workers) and writes sweep.csv plus one subdirectory per value.
std::vector<ExperimentResult> run_sweep(const ExperimentConfig& base, std::string_view param,
                                        const std::vector<long long>& values);

/// Fits the factors of subdomain `k` from the spun-up background ensemble
/// and writes T_subdomain<k>.txt and D_subdomain<k>.txt into cfg.out_dir.
PrecisionFactors dump_precision(const ExperimentConfig& cfg, int subdomain);

}  // namespace enkfmc
