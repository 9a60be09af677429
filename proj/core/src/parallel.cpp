#include <enkfmc/errors.hpp>
#include <enkfmc/mchol.hpp>
#include <enkfmc/parallel.hpp>

#include <chrono>
#include <cstdio>
#include <string>

namespace enkfmc {

Method parse_method(std::string_view s) {
  if (s == "enkf_mc_primal") return Method::enkf_mc_primal;
  if (s == "enkf_mc_dual") return Method::enkf_mc_dual;
  if (s == "letkf") return Method::letkf;
  throw ConfigError("unknown method '" + std::string(s) +
                    "' (expected enkf_mc_primal, enkf_mc_dual or letkf)");
}

std::string_view to_string(Method m) {
  switch (m) {
    case Method::enkf_mc_primal: return "enkf_mc_primal";
    case Method::enkf_mc_dual: return "enkf_mc_dual";
    case Method::letkf: return "letkf";
  }
  return "unknown";
}

void AssimilationConfig::validate() const {
  if (zeta < 0) throw ConfigError("zeta must be >= 0");
  if (delta < 1) throw ConfigError("delta must be >= 1");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (!(inflation >= 1.0)) throw ConfigError("inflation must be >= 1");
  if (dense_cap < 1) throw ConfigError("dense_cap must be >= 1");
}

double CycleReport::estimation_max() const {
  double m = 0.0;
  for (const auto& s : subdomains) m = std::max(m, s.estimation);
  return m;
}

double CycleReport::analysis_max() const {
  double m = 0.0;
  for (const auto& s : subdomains) m = std::max(m, s.analysis);
  return m;
}

std::string timings_row(const CycleReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%llu,%s,%d,%d,%.6f,%.6f,%.6f,%.6f",
                static_cast<unsigned long long>(r.cycle), std::string(to_string(r.method)).c_str(),
                r.delta, r.workers, r.estimation_max(), r.analysis_max(), r.merge, r.total);
  return buf;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Matrix local_letkf(const LocalProblem& problem, const Subdomain& subdomain,
                   const GridGeometry& geometry, const AssimilationConfig& cfg) {
  const Matrix& xb = problem.xb;
  const ObservationNetwork& net = problem.obs.local;
  const Vector mean = row_means(xb);
  const Matrix u = deviations(xb, mean);

  std::vector<Index> obs_at(static_cast<std::size_t>(xb.rows()), -1);
  for (Index k = 0; k < net.size(); ++k) {
    obs_at[static_cast<std::size_t>(net.indices[static_cast<std::size_t>(k)])] = k;
  }
  const auto& order = subdomain.local_order;
  auto local_row = [&](Index g) {
    auto it = std::lower_bound(order.begin(), order.end(), g);
    if (it == order.end() || *it != g) {
      throw ConsistencyError("LETKF box member " + std::to_string(g) +
                             " is outside the subdomain slice");
    }
    return static_cast<Index>(it - order.begin());
  };

  Matrix xa = xb;
  IndexList obs_positions;
  for (Index g : subdomain.interior) {
    obs_positions.clear();
    for (Index m : local_box(geometry, g, cfg.zeta).members) {
      const Index o = obs_at[static_cast<std::size_t>(local_row(m))];
      if (o >= 0) obs_positions.push_back(o);
    }
    const Index row = local_row(g);
    try {
      xa.row(row) =
          letkf_component(row, xb, u, mean, net, obs_positions, cfg.inflation).transpose();
    } catch (const Error&) {
      rethrow_with_context("component " + std::to_string(g) + ": ");
    }
  }
  return xa;
}

}  // namespace

LocalProblem slice_subdomain(const Subdomain& subdomain, const Matrix& xb,
                             const ObservationNetwork& net, const Matrix& ys) {
  LocalProblem p;
  const auto& order = subdomain.local_order;
  p.xb.resize(static_cast<Index>(order.size()), xb.cols());
  for (std::size_t r = 0; r < order.size(); ++r) {
    p.xb.row(static_cast<Index>(r)) = xb.row(order[r]);
  }
  p.global_rows_read = order;
  p.obs = restrict_network(net, order);
  p.ys.resize(static_cast<Index>(p.obs.source_rows.size()), ys.cols());
  for (std::size_t k = 0; k < p.obs.source_rows.size(); ++k) {
    p.ys.row(static_cast<Index>(k)) = ys.row(p.obs.source_rows[k]);
  }
  return p;
}

Matrix local_assimilation(const LocalProblem& problem, const Subdomain& subdomain,
                          const GridGeometry& geometry, const AssimilationConfig& cfg,
                          SubdomainTiming* timing) {
  auto t0 = Clock::now();
  if (cfg.method == Method::letkf) {
    Matrix xa = local_letkf(problem, subdomain, geometry, cfg);
    if (timing) timing->analysis = seconds_since(t0);
    return xa;
  }

  const Vector mean = row_means(problem.xb);
  const PrecisionFactors factors =
      fit_factors(deviations(problem.xb, mean), geometry, subdomain.local_order, cfg.zeta);
  if (timing) timing->estimation = seconds_since(t0);

  t0 = Clock::now();
  Matrix xa = cfg.method == Method::enkf_mc_primal
                  ? analysis_primal(problem.xb, factors, problem.obs.local, problem.ys,
                                    PrimalOptions{cfg.dense_cap})
                  : analysis_dual(problem.xb, factors, problem.obs.local, problem.ys,
                                  cfg.dense_cap);
  if (timing) timing->analysis = seconds_since(t0);
  return xa;
}

EnsembleState merge_interiors(const EnsembleState& global, std::span<const LocalPiece> pieces) {
  EnsembleState out{global.x, EnsembleRole::analysis};
  std::vector<unsigned char> written(static_cast<std::size_t>(global.nstate()), 0);
  for (const LocalPiece& piece : pieces) {
    const Subdomain& sd = *piece.subdomain;
    if (piece.analysis.rows() != static_cast<Index>(sd.local_order.size()) ||
        piece.analysis.cols() != global.nens()) {
      throw ConsistencyError("subdomain " + std::to_string(sd.id) +
                             " analysis does not match its local layout");
    }
    const IndexList pos = sd.interior_local_positions();
    for (std::size_t k = 0; k < sd.interior.size(); ++k) {
      const Index g = sd.interior[k];
      if (written[static_cast<std::size_t>(g)]++) {
        throw ConsistencyError("global row " + std::to_string(g) + " written twice (subdomain " +
                               std::to_string(sd.id) + ")");
      }
      out.x.row(g) = piece.analysis.row(pos[k]);
    }
  }
  for (std::size_t g = 0; g < written.size(); ++g) {
    if (!written[g]) {
      throw ConsistencyError("global row " + std::to_string(g) + " not covered by any subdomain");
    }
  }
  return out;
}

std::pair<EnsembleState, CycleReport> assimilate_parallel(const EnsembleState& xb,
                                                          const ObservationNetwork& net,
                                                          const Matrix& ys,
                                                          const AssimilationConfig& cfg,
                                                          const GridGeometry& geometry,
                                                          std::uint64_t cycle) {
  const auto t_start = Clock::now();
  cfg.validate();
  if (xb.nstate() != geometry.nstate()) {
    throw DomainError("assimilate_parallel: ensemble has " + std::to_string(xb.nstate()) +
                      " rows for a geometry of " + std::to_string(geometry.nstate()));
  }
  net.validate(geometry.nstate());
  if (cfg.method != Method::letkf && (ys.rows() != net.size() || ys.cols() != xb.nens())) {
    throw DomainError("assimilate_parallel: perturbed observations do not match the network");
  }

  const std::vector<Subdomain> subdomains = decompose(geometry, cfg.delta, cfg.zeta);
  CycleReport report;
  report.cycle = cycle;
  report.method = cfg.method;
  report.delta = cfg.delta;
  report.workers = cfg.workers;
  report.subdomains.resize(subdomains.size());

  std::vector<LocalPiece> pieces(subdomains.size());
  parallel_for(subdomains.size(), cfg.workers, [&](std::size_t k) {
    const Subdomain& sd = subdomains[k];
    try {
      const LocalProblem problem = slice_subdomain(sd, xb.x, net, ys);
      pieces[k].subdomain = &sd;
      pieces[k].analysis = local_assimilation(problem, sd, geometry, cfg, &report.subdomains[k]);
    } catch (const Error&) {
      rethrow_with_context("subdomain " + std::to_string(sd.id) + ": ");
    }
  });

  const auto t_merge = Clock::now();
  EnsembleState xa = merge_interiors(xb, pieces);
  report.merge = seconds_since(t_merge);
  report.total = seconds_since(t_start);
  return {std::move(xa), std::move(report)};
}

std::pair<EnsembleState, CycleReport> assimilate_parallel(const EnsembleState& xb,
                                                          const ObservationNetwork& net,
                                                          const AssimilationConfig& cfg,
                                                          const GridGeometry& geometry,
                                                          std::uint64_t cycle) {
  if (cfg.method == Method::letkf) {
    return assimilate_parallel(xb, net, Matrix::Zero(net.size(), xb.nens()), cfg, geometry, cycle);
  }
  const PerturbedObservations ys = perturb_observations(net, xb.nens(), cfg.seed, cycle);
  return assimilate_parallel(xb, net, ys.ys, cfg, geometry, cycle);
}

Matrix propagate_ensemble(const ModelHandle& model, const Matrix& x, double window, int workers) {
  const Index steps = model.steps_for(window);
  Matrix out(x.rows(), x.cols());
  parallel_for(static_cast<std::size_t>(x.cols()), workers, [&](std::size_t i) {
    const auto c = static_cast<Index>(i);
    try {
      out.col(c) = propagate_steps(model, x.col(c), steps);
    } catch (const Error&) {
      rethrow_with_context("member " + std::to_string(c) + ": ");
    }
  });
  return out;
}

FilterResult run_filter(const EnsembleState& x0, const ModelHandle& model,
                        std::span<const ScheduleEntry> schedule, const AssimilationConfig& cfg,
                        const GridGeometry& geometry) {
  FilterResult result;
  result.forecast = x0;
  result.analyses.reserve(schedule.size());
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    try {
      auto [xa, report] =
          assimilate_parallel(result.forecast, schedule[k].net, cfg, geometry, k);
      result.forecast = EnsembleState{
          propagate_ensemble(model, xa.x, schedule[k].window, cfg.workers),
          EnsembleRole::background};
      result.analyses.push_back(std::move(xa));
      result.reports.push_back(std::move(report));
    } catch (const Error&) {
      rethrow_with_context("cycle " + std::to_string(k) + ": ");
    }
  }
  return result;
}

}  // namespace enkfmc
