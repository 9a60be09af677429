#pragma once

#include <enkfmc/types.hpp>

#include <cstdint>

namespace enkfmc {

/// Point observations: H selects `indices` from the state, R = diag(r_diag).
struct ObservationNetwork {
  IndexList indices;  // strictly increasing component labels
  Vector r_diag;
  Vector y;

  Index size() const noexcept { return static_cast<Index>(indices.size()); }

  /// Throws DomainError unless sizes agree, indices are strictly increasing
  /// and inside [0, nstate), and every variance is positive.
  void validate(Index nstate) const;

  /// H x for every column of `x`.
  Matrix select(const Matrix& x) const;
};

/// Observations restricted to a sorted set of global labels, re-indexed to
/// positions within that set. `source_rows` records which observations of
/// the parent network were kept.
struct RestrictedNetwork {
  ObservationNetwork local;
  IndexList source_rows;
};

RestrictedNetwork restrict_network(const ObservationNetwork& net, const IndexList& local_order);

struct PerturbedObservations {
  Matrix ys;  // Nobs x Nens
  std::uint64_t seed = 0;
  std::uint64_t cycle = 0;
};

/// Column i is y + xi_i with xi_i ~ N(0, diag(r_diag)). Observation k draws
/// its Nens values from its own stream keyed by (seed, cycle, k), so the
/// result does not depend on how observations are later partitioned.
PerturbedObservations perturb_observations(const ObservationNetwork& net, Index nens,
                                           std::uint64_t seed, std::uint64_t cycle);

}  // namespace enkfmc
