#pragma once

#include <enkfmc/grid.hpp>
#include <enkfmc/observations.hpp>
#include <enkfmc/precision.hpp>
#include <enkfmc/types.hpp>

namespace enkfmc {

enum class EnsembleRole { background, analysis };

/// Nstate x Nens ensemble, members stored column-wise.
struct EnsembleState {
  Matrix x;
  EnsembleRole role = EnsembleRole::background;

  Index nstate() const noexcept { return x.rows(); }
  Index nens() const noexcept { return x.cols(); }
};

/// Explicit left-to-right row means, so that a row gives the same bits
/// whether it is read from the global ensemble or a subdomain slice.
Vector row_means(const Matrix& x);

/// x minus its row means, computed with row_means.
Matrix deviations(const Matrix& x, const Vector& means);

struct PrimalOptions {
  Index dense_cap = kDefaultDenseCap;
  double cg_rel_tol = 1e-9;
};

/// Xa = Xb + [B^-1 + H^T R^-1 H]^-1 H^T R^-1 (Ys - H Xb).
///
/// When n <= dense_cap the system is solved in its least-squares form, a
/// Householder QR of [D^-1/2 T; R^-1/2 H]; otherwise by conjugate gradients
/// on precision_apply (relative residual cg_rel_tol, at most 10 n iterations
/// per member).
Matrix analysis_primal(const Matrix& xb, const PrecisionFactors& factors,
                       const ObservationNetwork& net, const Matrix& ys,
                       const PrimalOptions& options = {});

/// Xa = Xb + X V^T (R + V V^T)^-1 (Ys - H Xb), with T X = D^{1/2} and V = H X.
Matrix analysis_dual(const Matrix& xb, const PrecisionFactors& factors,
                     const ObservationNetwork& net, const Matrix& ys,
                     Index dense_cap = kDefaultDenseCap);

/// Conjugate gradients for the SPD system (B^-1 + H^T R^-1 H) x = b.
/// Throws NumericalError carrying the final relative residual on failure.
Vector primal_cg_solve(const PrecisionFactors& factors, const ObservationNetwork& net,
                       const Vector& b, double rel_tol, Index max_iter);

/// Smallest eigenvalue accepted when taking the symmetric square root.
inline constexpr double kLetkfEigenFloor = 1e-12;

/// Ensemble-space quantities of the local transform.
struct LetkfWeights {
  Matrix pa;  // [(Nens-1) I / inflation + Z^T R^-1 Z]^-1
  Vector wa;  // mean-update weights
  Matrix wa_full;  // wa 1^T + [(Nens-1) Pa]^{1/2}
};

/// Weights for observation perturbations `z` (Nobs x Nens), innovation
/// y - H xbar and variances `r_diag`.
LetkfWeights letkf_weights(const Matrix& z, const Vector& innovation, const Vector& r_diag,
                           double inflation);

/// Analysis values of one component: xbar 1^T + u_center Wa.
Vector letkf_analysis_point(const Eigen::Ref<const Eigen::RowVectorXd>& center_perturbation,
                            double center_mean, const Matrix& z, const Vector& innovation,
                            const Vector& r_diag, double inflation);

/// Finds the observations inside the box of a component, as positions into
/// `net.indices`.
class BoxObservationIndex {
 public:
  BoxObservationIndex(const GridGeometry& geometry, const ObservationNetwork& net, Index zeta);
  IndexList observations_near(Index component) const;

 private:
  const GridGeometry* geometry_;
  Index zeta_;
  std::vector<Index> obs_at_;  // component -> observation position or -1
};

/// LETKF analysis of the component held in row `self_row` of `xb`.
///
/// `net.indices` address rows of `xb`, `u` and `mean`; `obs_positions` lists
/// the observations inside the component's box in ascending order.
/// Components that see no information return their background row unchanged.
/// Shared by the global sweep and the subdomain-parallel driver.
Vector letkf_component(Index self_row, const Matrix& xb, const Matrix& u, const Vector& mean,
                       const ObservationNetwork& net, const IndexList& obs_positions,
                       double inflation);

/// Applies the LETKF point update to every component of the grid.
Matrix letkf_analysis_global(const Matrix& xb, const GridGeometry& geometry,
                             const ObservationNetwork& net, Index zeta, double inflation);

}  // namespace enkfmc
