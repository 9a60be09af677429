#pragma once

#include <enkfmc/grid.hpp>
#include <enkfmc/types.hpp>

#include <array>
#include <memory>
#include <string_view>
#include <vector>

namespace enkfmc {

enum class ModelKind { lorenz96, advdiff2d, identity };

ModelKind parse_model_kind(std::string_view s);
std::string_view to_string(ModelKind k);

struct Lorenz96Params {
  double forcing = 8.0;
  double dt = 0.005;
};

struct AdvDiffParams {
  double ux = 0.5;
  double uy = 0.25;
  double kappa = 0.1;
  double dt = 0.5;
};

/// A forecast model bound to a geometry. Immutable and shareable.
class ModelHandle {
 public:
  static ModelHandle lorenz96(const GridGeometry& geometry, Lorenz96Params params = {});
  static ModelHandle advdiff2d(const GridGeometry& geometry, AdvDiffParams params = {});
  static ModelHandle identity(const GridGeometry& geometry, double dt = 1.0);

  ModelKind kind() const noexcept { return kind_; }
  double dt() const noexcept { return dt_; }
  Index nstate() const noexcept { return nstate_; }
  const Lorenz96Params& lorenz96_params() const noexcept { return l96_; }
  const AdvDiffParams& advdiff_params() const noexcept { return adv_; }

  /// Number of fixed steps covering `window` time units.
  Index steps_for(double window) const;

 private:
  ModelHandle() = default;

  friend Vector propagate_steps(const ModelHandle&, const Vector&, Index);

  ModelKind kind_ = ModelKind::identity;
  Index nstate_ = 0;
  double dt_ = 1.0;
  Lorenz96Params l96_;
  AdvDiffParams adv_;
  // advdiff2d stencil: neighbors of each label (west, east, south, north)
  std::shared_ptr<const std::vector<std::array<Index, 4>>> stencil_;
};

/// Advances x over `window` time units (a whole number of model steps).
Vector propagate(const ModelHandle& model, const Vector& x, double window);

/// Advances x by `steps` fixed steps; throws DivergenceError on non-finite state.
Vector propagate_steps(const ModelHandle& model, const Vector& x, Index steps);

}  // namespace enkfmc
