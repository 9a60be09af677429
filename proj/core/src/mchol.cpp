#include <enkfmc/errors.hpp>
#include <enkfmc/mchol.hpp>

#include <Eigen/SVD>

#include <algorithm>
#include <string>

namespace enkfmc {

Vector regression_solve(const Matrix& predictors, const Vector& target) {
  const Index p = predictors.rows();
  if (p < 1) throw DomainError("regression_solve needs at least one predictor");
  if (predictors.cols() != target.size()) {
    throw DomainError("regression_solve: predictor columns (" +
                      std::to_string(predictors.cols()) + ") != target length (" +
                      std::to_string(target.size()) + ")");
  }

  // min || target - predictors^T beta ||
  Eigen::JacobiSVD<Matrix> svd(predictors.transpose(), Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sigma = svd.singularValues();
  Vector beta = Vector::Zero(p);
  if (sigma.size() == 0 || sigma[0] <= 0.0) return beta;

  const double cutoff = kRegressionRankTol * sigma[0];
  const Vector projected = svd.matrixU().transpose() * target;
  for (Index i = 0; i < sigma.size(); ++i) {
    if (sigma[i] <= cutoff) break;  // singular values are sorted descending
    beta += (projected[i] / sigma[i]) * svd.matrixV().col(i);
  }
  return beta;
}

Matrix perturbations(const Matrix& ensemble) {
  const Vector mean = ensemble.rowwise().mean();
  return ensemble.colwise() - mean;
}

PrecisionFactors fit_factors(const Matrix& u, const GridGeometry& geometry,
                             const IndexList& local_order, Index zeta) {
  const Index nens = u.cols();
  if (nens < 2) {
    throw ConfigError("fit_factors needs an ensemble of at least 2 members (got " +
                      std::to_string(nens) + ")");
  }
  if (u.rows() != static_cast<Index>(local_order.size())) {
    throw DomainError("fit_factors: " + std::to_string(u.rows()) +
                      " perturbation rows for " + std::to_string(local_order.size()) +
                      " local components");
  }
  if (!std::is_sorted(local_order.begin(), local_order.end())) {
    throw DomainError("fit_factors: local_order must be ascending in global label");
  }

  const Index n = u.rows();
  const double divisor = static_cast<double>(nens - 1);

  std::vector<Index> row_ptr{0};
  row_ptr.reserve(static_cast<std::size_t>(n) + 1);
  std::vector<Index> cols;
  std::vector<double> values;
  Vector d(n);

  IndexList local_preds;
  for (Index j = 0; j < n; ++j) {
    local_preds.clear();
    for (Index g : predecessors(geometry, local_order[static_cast<std::size_t>(j)], zeta)) {
      auto it = std::lower_bound(local_order.begin(), local_order.end(), g);
      if (it != local_order.end() && *it == g) {
        local_preds.push_back(static_cast<Index>(it - local_order.begin()));
      }
    }

    const Vector target = u.row(j).transpose();
    double residual_ss = target.squaredNorm();
    if (!local_preds.empty()) {
      Matrix x(static_cast<Index>(local_preds.size()), nens);
      for (std::size_t k = 0; k < local_preds.size(); ++k) {
        x.row(static_cast<Index>(k)) = u.row(local_preds[k]);
      }
      const Vector beta = regression_solve(x, target);
      residual_ss = (target - x.transpose() * beta).squaredNorm();
      for (std::size_t k = 0; k < local_preds.size(); ++k) {
        cols.push_back(local_preds[k]);
        values.push_back(-beta[static_cast<Index>(k)]);
      }
    }
    row_ptr.push_back(static_cast<Index>(cols.size()));
    d[j] = std::max(residual_ss / divisor, kVarianceFloor);
  }
  return PrecisionFactors(std::move(row_ptr), std::move(cols), std::move(values), std::move(d));
}

}  // namespace enkfmc
