#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace enkfmc {

/// Stream tags keeping independent uses of one experiment seed apart.
enum class StreamTag : std::uint64_t {
  reference_perturbation = 1,
  member_perturbation = 2,
  observation_noise = 3,
  perturbed_observations = 4,
  test = 99,
};

/// Deterministic 64-bit seed derived from a root seed and a path of ids.
std::uint64_t derive_seed(std::uint64_t root, StreamTag tag,
                          std::initializer_list<std::uint64_t> path = {});

/// A seeded Gaussian stream. Two streams built from the same (seed, tag,
/// path) produce identical draws.
class RngStream {
 public:
  RngStream(std::uint64_t root, StreamTag tag, std::initializer_list<std::uint64_t> path = {})
      : engine_(derive_seed(root, tag, path)) {}

  double normal() { return normal_(engine_); }
  double normal(double mean, double stddev) { return mean + stddev * normal_(engine_); }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace enkfmc
