#pragma once

#include <enkfmc/analysis.hpp>
#include <enkfmc/grid.hpp>
#include <enkfmc/models.hpp>
#include <enkfmc/observations.hpp>
#include <enkfmc/precision.hpp>

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

namespace enkfmc {

enum class Method { enkf_mc_primal, enkf_mc_dual, letkf };

Method parse_method(std::string_view s);
std::string_view to_string(Method m);

struct AssimilationConfig {
  Index zeta = 2;
  int delta = 1;
  int workers = 1;
  Method method = Method::enkf_mc_primal;
  double inflation = 1.0;
  std::uint64_t seed = 0;
  Index dense_cap = kDefaultDenseCap;

  void validate() const;
};

struct SubdomainTiming {
  double estimation = 0.0;
  double analysis = 0.0;
};

struct CycleReport {
  std::uint64_t cycle = 0;
  Method method = Method::enkf_mc_primal;
  int delta = 1;
  int workers = 1;
  std::vector<SubdomainTiming> subdomains;
  double merge = 0.0;
  double total = 0.0;

  double estimation_max() const;
  double analysis_max() const;
};

inline constexpr std::string_view kTimingsHeader =
    "cycle,method,delta,workers,t_estimation_max,t_analysis_max,t_merge,t_total";

/// One CSV row (no trailing newline), times in seconds with 6 decimals.
std::string timings_row(const CycleReport& report);

/// Runs fn(i) for i in [0, count) on `workers` threads, handing out indices
/// in ascending order. If any call throws, the exception of the smallest
/// failing index is rethrown after all workers finish.
template <typename Fn>
void parallel_for(std::size_t count, int workers, Fn&& fn) {
  if (workers <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  {
    std::vector<std::jthread> pool;
    const auto nthreads = std::min<std::size_t>(static_cast<std::size_t>(workers), count);
    pool.reserve(nthreads);
    for (std::size_t t = 0; t < nthreads; ++t) {
      pool.emplace_back([&] {
        std::size_t i;
        while ((i = next.fetch_add(1)) < count) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

/// Everything one subdomain may read: its rows of the background, the
/// observations falling on them and the matching perturbed observations.
struct LocalProblem {
  Matrix xb;                   // rows follow subdomain.local_order
  RestrictedNetwork obs;       // indices are local rows
  Matrix ys;                   // rows follow obs.source_rows
  IndexList global_rows_read;  // every global state row copied in
};

LocalProblem slice_subdomain(const Subdomain& subdomain, const Matrix& xb,
                             const ObservationNetwork& net, const Matrix& ys);

/// Analysis of one subdomain: estimate the local
/// precision from the slice, then update all local rows.
Matrix local_assimilation(const LocalProblem& problem, const Subdomain& subdomain,
                          const GridGeometry& geometry, const AssimilationConfig& cfg,
                          SubdomainTiming* timing = nullptr);

struct LocalPiece {
  const Subdomain* subdomain = nullptr;
  Matrix analysis;  // rows follow subdomain->local_order
};

/// Writes the interior rows of every piece into a copy of `global`.
/// Throws ConsistencyError if a row is written twice or never.
EnsembleState merge_interiors(const EnsembleState& global, std::span<const LocalPiece> pieces);

/// Decompose, estimate and assimilate per subdomain, then merge.
std::pair<EnsembleState, CycleReport> assimilate_parallel(const EnsembleState& xb,
                                                          const ObservationNetwork& net,
                                                          const Matrix& ys,
                                                          const AssimilationConfig& cfg,
                                                          const GridGeometry& geometry,
                                                          std::uint64_t cycle = 0);

/// As above with Ys drawn from (cfg.seed, cycle).
std::pair<EnsembleState, CycleReport> assimilate_parallel(const EnsembleState& xb,
                                                          const ObservationNetwork& net,
                                                          const AssimilationConfig& cfg,
                                                          const GridGeometry& geometry,
                                                          std::uint64_t cycle);

struct ScheduleEntry {
  double window = 0.0;  // forecast length after this cycle's analysis
  ObservationNetwork net;
};

struct FilterResult {
  std::vector<EnsembleState> analyses;  // one per schedule entry
  EnsembleState forecast;               // state after the last window
  std::vector<CycleReport> reports;
};

/// Propagates every member over `window`, members in parallel.
Matrix propagate_ensemble(const ModelHandle& model, const Matrix& x, double window, int workers);

/// Sequential filter loop: perturb observations, assimilate, forecast.
FilterResult run_filter(const EnsembleState& x0, const ModelHandle& model,
                        std::span<const ScheduleEntry> schedule, const AssimilationConfig& cfg,
                        const GridGeometry& geometry);

}  // namespace enkfmc
