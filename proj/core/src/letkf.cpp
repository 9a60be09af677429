#include <enkfmc/analysis.hpp>
#include <enkfmc/errors.hpp>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>

namespace enkfmc {

LetkfWeights letkf_weights(const Matrix& z, const Vector& innovation, const Vector& r_diag,
                           double inflation) {
  const Index nens = z.cols();
  if (nens < 2) throw ConfigError("LETKF needs Nens >= 2");
  if (!(inflation >= 1.0)) throw ConfigError("LETKF inflation must be >= 1");
  if (innovation.size() != z.rows() || r_diag.size() != z.rows()) {
    throw DomainError("LETKF: observation perturbations, innovation and variances disagree");
  }
  const double scale = static_cast<double>(nens - 1) / inflation;

  LetkfWeights w;
  if (z.rows() == 0 || z.isZero(0.0)) {
    // Nothing observed: Pa = (inflation / (Nens-1)) I, no mean update.
    w.pa = Matrix::Identity(nens, nens) / scale;
    w.wa = Vector::Zero(nens);
    w.wa_full = std::sqrt(inflation) * Matrix::Identity(nens, nens);
    return w;
  }

  const Matrix zr = r_diag.cwiseInverse().asDiagonal() * z;  // R^-1 Z
  Matrix precision = z.transpose() * zr;
  precision.diagonal().array() += scale;

  Eigen::SelfAdjointEigenSolver<Matrix> eig(precision);
  if (eig.info() != Eigen::Success) {
    throw NumericalError("LETKF: eigendecomposition of the ensemble-space system failed");
  }
  const Vector& lambda = eig.eigenvalues();
  if (lambda.minCoeff() < kLetkfEigenFloor) {
    throw NumericalError("LETKF: ensemble-space eigenvalue " + std::to_string(lambda.minCoeff()) +
                             " below floor",
                         lambda.minCoeff());
  }
  const Matrix& q = eig.eigenvectors();
  w.pa = q * lambda.cwiseInverse().asDiagonal() * q.transpose();
  w.wa = w.pa * (zr.transpose() * innovation);
  const Vector root = (static_cast<double>(nens - 1) * lambda.cwiseInverse()).cwiseSqrt();
  w.wa_full = q * root.asDiagonal() * q.transpose();
  w.wa_full.colwise() += w.wa;
  return w;
}

Vector letkf_analysis_point(const Eigen::Ref<const Eigen::RowVectorXd>& center_perturbation,
                            double center_mean, const Matrix& z, const Vector& innovation,
                            const Vector& r_diag, double inflation) {
  if (center_perturbation.size() != z.cols()) {
    throw DomainError("LETKF: center perturbation length differs from ensemble size");
  }
  const LetkfWeights w = letkf_weights(z, innovation, r_diag, inflation);
  Vector out = (center_perturbation * w.wa_full).transpose();
  out.array() += center_mean;
  return out;
}

Vector letkf_component(Index self_row, const Matrix& xb, const Matrix& u, const Vector& mean,
                       const ObservationNetwork& net, const IndexList& obs_positions,
                       double inflation) {
  const Index nobs = static_cast<Index>(obs_positions.size());
  Matrix z(nobs, u.cols());
  Vector innovation(nobs), r(nobs);
  for (Index k = 0; k < nobs; ++k) {
    const Index o = obs_positions[static_cast<std::size_t>(k)];
    const Index row = net.indices[static_cast<std::size_t>(o)];
    z.row(k) = u.row(row);
    innovation[k] = net.y[o] - mean[row];
    r[k] = net.r_diag[o];
  }
  if (inflation == 1.0 && (nobs == 0 || z.isZero(0.0))) return xb.row(self_row).transpose();
  return letkf_analysis_point(u.row(self_row), mean[self_row], z, innovation, r, inflation);
}

BoxObservationIndex::BoxObservationIndex(const GridGeometry& geometry,
                                         const ObservationNetwork& net, Index zeta)
    : geometry_(&geometry),
      zeta_(zeta),
      obs_at_(static_cast<std::size_t>(geometry.nstate()), -1) {
  for (Index k = 0; k < net.size(); ++k) {
    obs_at_[static_cast<std::size_t>(net.indices[static_cast<std::size_t>(k)])] = k;
  }
}

IndexList BoxObservationIndex::observations_near(Index component) const {
  IndexList out;
  for (Index m : local_box(*geometry_, component, zeta_).members) {
    const Index o = obs_at_[static_cast<std::size_t>(m)];
    if (o >= 0) out.push_back(o);
  }
  // box members are label-sorted and obs indices are label-sorted
  return out;
}

Matrix letkf_analysis_global(const Matrix& xb, const GridGeometry& geometry,
                             const ObservationNetwork& net, Index zeta, double inflation) {
  if (xb.rows() != geometry.nstate()) {
    throw DomainError("LETKF: ensemble has " + std::to_string(xb.rows()) +
                      " rows for a geometry of " + std::to_string(geometry.nstate()));
  }
  net.validate(geometry.nstate());
  const Vector mean = row_means(xb);
  const Matrix u = deviations(xb, mean);
  const BoxObservationIndex boxes(geometry, net, zeta);

  Matrix xa(xb.rows(), xb.cols());
  for (Index c = 0; c < xb.rows(); ++c) {
    try {
      xa.row(c) = letkf_component(c, xb, u, mean, net, boxes.observations_near(c), inflation).transpose();
    } catch (const NumericalError& e) {
      throw NumericalError("component " + std::to_string(c) + ": " + e.what(), e.residual());
    }
  }
  return xa;
}

}  // namespace enkfmc
