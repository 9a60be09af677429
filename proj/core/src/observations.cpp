#include <enkfmc/errors.hpp>
#include <enkfmc/observations.hpp>
#include <enkfmc/rng.hpp>

#include <algorithm>
#include <cmath>
#include <string>

namespace enkfmc {

void ObservationNetwork::validate(Index nstate) const {
  if (r_diag.size() != size() || y.size() != size()) {
    throw DomainError("observation network: " + std::to_string(size()) + " indices, " +
                      std::to_string(r_diag.size()) + " variances, " +
                      std::to_string(y.size()) + " values");
  }
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] < 0 || indices[k] >= nstate) {
      throw DomainError("observed component " + std::to_string(indices[k]) +
                        " outside the state");
    }
    if (k > 0 && indices[k] <= indices[k - 1]) {
      throw DomainError("observed components must be strictly increasing");
    }
  }
  for (Index k = 0; k < r_diag.size(); ++k) {
    if (!(r_diag[k] > 0.0)) {
      throw ConfigError("observation error variance must be positive (entry " +
                        std::to_string(k) + ")");
    }
  }
}

Matrix ObservationNetwork::select(const Matrix& x) const {
  Matrix out(size(), x.cols());
  for (Index k = 0; k < size(); ++k) out.row(k) = x.row(indices[static_cast<std::size_t>(k)]);
  return out;
}

RestrictedNetwork restrict_network(const ObservationNetwork& net, const IndexList& local_order) {
  RestrictedNetwork out;
  std::vector<double> r, y;
  for (Index k = 0; k < net.size(); ++k) {
    const Index g = net.indices[static_cast<std::size_t>(k)];
    auto it = std::lower_bound(local_order.begin(), local_order.end(), g);
    if (it == local_order.end() || *it != g) continue;
    out.local.indices.push_back(static_cast<Index>(it - local_order.begin()));
    out.source_rows.push_back(k);
    r.push_back(net.r_diag[k]);
    y.push_back(net.y[k]);
  }
  out.local.r_diag = Eigen::Map<Vector>(r.data(), static_cast<Index>(r.size()));
  out.local.y = Eigen::Map<Vector>(y.data(), static_cast<Index>(y.size()));
  return out;
}

PerturbedObservations perturb_observations(const ObservationNetwork& net, Index nens,
                                           std::uint64_t seed, std::uint64_t cycle) {
  if (nens < 2) throw ConfigError("perturbed observations need Nens >= 2");
  for (Index k = 0; k < net.r_diag.size(); ++k) {
    if (!(net.r_diag[k] > 0.0)) {
      throw ConfigError("observation error variance must be positive (entry " +
                        std::to_string(k) + ")");
    }
  }
  PerturbedObservations out{Matrix(net.size(), nens), seed, cycle};
  for (Index k = 0; k < net.size(); ++k) {
    RngStream stream(seed, StreamTag::perturbed_observations,
                     {cycle, static_cast<std::uint64_t>(k)});
    const double sd = std::sqrt(net.r_diag[k]);
    for (Index i = 0; i < nens; ++i) out.ys(k, i) = net.y[k] + sd * stream.normal();
  }
  return out;
}

}  // namespace enkfmc
