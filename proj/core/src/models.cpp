#include <enkfmc/errors.hpp>
#include <enkfmc/models.hpp>

#include <cmath>
#include <string>

namespace enkfmc {

ModelKind parse_model_kind(std::string_view s) {
  if (s == "lorenz96") return ModelKind::lorenz96;
  if (s == "advdiff2d") return ModelKind::advdiff2d;
  if (s == "identity") return ModelKind::identity;
  throw ConfigError("unknown model '" + std::string(s) +
                    "' (expected lorenz96, advdiff2d or identity)");
}

std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::lorenz96: return "lorenz96";
    case ModelKind::advdiff2d: return "advdiff2d";
    case ModelKind::identity: return "identity";
  }
  return "unknown";
}

ModelHandle ModelHandle::lorenz96(const GridGeometry& geometry, Lorenz96Params params) {
  if (geometry.kind() != GridKind::ring1d) throw ConfigError("lorenz96 requires a ring1d grid");
  if (geometry.nstate() < 4) throw ConfigError("lorenz96 requires at least 4 components");
  if (!(params.dt > 0.0)) throw ConfigError("model dt must be positive");
  ModelHandle m;
  m.kind_ = ModelKind::lorenz96;
  m.nstate_ = geometry.nstate();
  m.dt_ = params.dt;
  m.l96_ = params;
  return m;
}

ModelHandle ModelHandle::advdiff2d(const GridGeometry& geometry, AdvDiffParams params) {
  if (geometry.kind() != GridKind::grid2d) throw ConfigError("advdiff2d requires a grid2d grid");
  if (!(params.dt > 0.0)) throw ConfigError("model dt must be positive");
  if (params.kappa < 0.0) throw ConfigError("advdiff2d diffusivity must be nonnegative");
  // unit cell spacing in both directions
  if (params.kappa * params.dt * 2.0 > 0.25) {
    throw ConfigError("advdiff2d violates the explicit stability bound kappa*dt*(1/dx^2+1/dy^2) "
                      "<= 1/4");
  }
  if ((std::abs(params.ux) + std::abs(params.uy)) * params.dt > 1.0) {
    throw ConfigError("advdiff2d violates the upwind CFL bound (|ux|+|uy|)*dt <= 1");
  }
  ModelHandle m;
  m.kind_ = ModelKind::advdiff2d;
  m.nstate_ = geometry.nstate();
  m.dt_ = params.dt;
  m.adv_ = params;

  auto stencil = std::make_shared<std::vector<std::array<Index, 4>>>(
      static_cast<std::size_t>(geometry.nstate()));
  const Index nx = geometry.nx(), ny = geometry.ny();
  for (Index g = 0; g < geometry.nstate(); ++g) {
    const Cell c = geometry.cell_of(g);
    (*stencil)[static_cast<std::size_t>(g)] = {
        geometry.linear_index(c.row, (c.col + nx - 1) % nx),
        geometry.linear_index(c.row, (c.col + 1) % nx),
        geometry.linear_index((c.row + ny - 1) % ny, c.col),
        geometry.linear_index((c.row + 1) % ny, c.col),
    };
  }
  m.stencil_ = std::move(stencil);
  return m;
}

ModelHandle ModelHandle::identity(const GridGeometry& geometry, double dt) {
  if (!(dt > 0.0)) throw ConfigError("model dt must be positive");
  ModelHandle m;
  m.kind_ = ModelKind::identity;
  m.nstate_ = geometry.nstate();
  m.dt_ = dt;
  return m;
}

Index ModelHandle::steps_for(double window) const {
  if (window < 0.0) throw DomainError("propagation window must be nonnegative");
  const double steps = std::round(window / dt_);
  if (std::abs(steps * dt_ - window) > 1e-9 * std::max(1.0, window)) {
    throw DomainError("window " + std::to_string(window) + " is not a multiple of dt " +
                      std::to_string(dt_));
  }
  return static_cast<Index>(steps);
}

namespace {

void lorenz96_tendency(const Vector& x, double forcing, Vector& out) {
  const Index n = x.size();
  for (Index i = 0; i < n; ++i) {
    const double xp1 = x[(i + 1) % n];
    const double xm1 = x[(i + n - 1) % n];
    const double xm2 = x[(i + n - 2) % n];
    out[i] = (xp1 - xm2) * xm1 - x[i] + forcing;
  }
}

}  // namespace

Vector propagate_steps(const ModelHandle& model, const Vector& x, Index steps) {
  if (x.size() != model.nstate()) {
    throw DomainError("propagate: state of length " + std::to_string(x.size()) +
                      " for a model of " + std::to_string(model.nstate()) + " components");
  }
  if (model.kind() == ModelKind::identity) return x;

  Vector state = x;
  const Index n = x.size();
  const double dt = model.dt();

  if (model.kind() == ModelKind::lorenz96) {
    const double f = model.lorenz96_params().forcing;
    Vector k1(n), k2(n), k3(n), k4(n), tmp(n);
    for (Index s = 0; s < steps; ++s) {
      lorenz96_tendency(state, f, k1);
      tmp = state + 0.5 * dt * k1;
      lorenz96_tendency(tmp, f, k2);
      tmp = state + 0.5 * dt * k2;
      lorenz96_tendency(tmp, f, k3);
      tmp = state + dt * k3;
      lorenz96_tendency(tmp, f, k4);
      state += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      if (!state.allFinite()) {
        throw DivergenceError("lorenz96 state became non-finite at step " + std::to_string(s),
                              static_cast<std::size_t>(s));
      }
    }
    return state;
  }

  const AdvDiffParams& p = model.advdiff_params();
  const auto& stencil = *model.stencil_;
  Vector next(n);
  for (Index s = 0; s < steps; ++s) {
    for (Index i = 0; i < n; ++i) {
      const auto& nb = stencil[static_cast<std::size_t>(i)];
      const double xi = state[i];
      const double xw = state[nb[0]], xe = state[nb[1]], xs = state[nb[2]], xn = state[nb[3]];
      const double adv_x = p.ux >= 0.0 ? p.ux * (xi - xw) : p.ux * (xe - xi);
      const double adv_y = p.uy >= 0.0 ? p.uy * (xi - xs) : p.uy * (xn - xi);
      const double diff = p.kappa * (xe + xw + xn + xs - 4.0 * xi);
      next[i] = xi + dt * (diff - adv_x - adv_y);
    }
    state.swap(next);
    if (!state.allFinite()) {
      throw DivergenceError("advdiff2d state became non-finite at step " + std::to_string(s),
                            static_cast<std::size_t>(s));
    }
  }
  return state;
}

Vector propagate(const ModelHandle& model, const Vector& x, double window) {
  return propagate_steps(model, x, model.steps_for(window));
}

}  // namespace enkfmc
