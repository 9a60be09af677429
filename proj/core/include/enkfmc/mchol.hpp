#pragma once

#include <enkfmc/grid.hpp>
#include <enkfmc/precision.hpp>
#include <enkfmc/types.hpp>

namespace enkfmc {

/// Singular values below this fraction of the largest are dropped.
inline constexpr double kRegressionRankTol = 1e-8;

/// Minimum-norm least-squares coefficients of `target` on the rows of
/// `predictors` (p x Nens), via a truncated SVD.
Vector regression_solve(const Matrix& predictors, const Vector& target);

/// Ensemble deviations from the mean, one row per local component.
Matrix perturbations(const Matrix& ensemble);

/// Fits the modified Cholesky factors of the inverse covariance of `u`.
///
/// Row r of `u` holds the perturbations of global component local_order[r],
/// and local_order must be ascending so that local and global labels agree
/// in order. Each component is regressed on the predecessors it has inside
/// the local set; no intercept is fitted since rows of `u` are mean-free.
PrecisionFactors fit_factors(const Matrix& u, const GridGeometry& geometry,
                             const IndexList& local_order, Index zeta);

}  // namespace enkfmc
