#pragma once

// Shared fixtures and brute-force oracles for the test suites. Everything in
// here is deliberately naive: dense matrices, explicit inverses, textbook
// loops, so it can serve as a reference for the library kernels.

#include <enkfmc/grid.hpp>
#include <enkfmc/observations.hpp>
#include <enkfmc/precision.hpp>
#include <enkfmc/types.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace enkfmc::testing {

inline double rel_diff(const Matrix& a, const Matrix& b) {
  const double nb = b.norm();
  return nb == 0.0 ? a.norm() : (a - b).norm() / nb;
}

inline Matrix random_matrix(std::mt19937_64& rng, Index rows, Index cols, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = n(rng);
  return m;
}

/// Deviations from the row means, computed the obvious way.
inline Matrix centered(const Matrix& x) {
  Matrix u = x;
  for (Index i = 0; i < x.rows(); ++i) u.row(i).array() -= x.row(i).mean();
  return u;
}

/// Random factors with a full strictly-lower pattern of density `fill`.
inline PrecisionFactors random_factors(std::mt19937_64& rng, Index n, double fill = 0.5) {
  std::uniform_real_distribution<double> u(-0.6, 0.6);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_real_distribution<double> var(0.2, 3.0);
  std::vector<Index> row_ptr{0}, cols;
  std::vector<double> values;
  for (Index j = 0; j < n; ++j) {
    for (Index q = 0; q < j; ++q) {
      if (coin(rng) < fill) {
        cols.push_back(q);
        values.push_back(u(rng));
      }
    }
    row_ptr.push_back(static_cast<Index>(cols.size()));
  }
  Vector d(n);
  for (Index j = 0; j < n; ++j) d[j] = var(rng);
  return PrecisionFactors(row_ptr, cols, values, d);
}

/// Dense T assembled entry by entry from the stored triplets.
inline Matrix dense_t_oracle(const PrecisionFactors& f) {
  Matrix t = Matrix::Identity(f.n(), f.n());
  for (Index j = 0; j < f.n(); ++j) {
    const auto c = f.row_cols(j);
    const auto v = f.row_values(j);
    for (std::size_t a = 0; a < c.size(); ++a) t(j, c[a]) = v[a];
  }
  return t;
}

inline Matrix precision_oracle(const PrecisionFactors& f) {
  const Matrix t = dense_t_oracle(f);
  return t.transpose() * f.d().cwiseInverse().asDiagonal() * t;
}

inline Matrix covariance_oracle(const PrecisionFactors& f) {
  return precision_oracle(f).inverse();
}

inline Matrix selection_matrix(const ObservationNetwork& net, Index n) {
  Matrix h = Matrix::Zero(net.size(), n);
  for (Index k = 0; k < net.size(); ++k) h(k, net.indices[static_cast<std::size_t>(k)]) = 1.0;
  return h;
}

/// Xa = Xb + [Binv + H^T R^-1 H]^-1 H^T R^-1 (Ys - H Xb) by explicit inversion.
inline Matrix primal_oracle(const Matrix& xb, const Matrix& binv, const ObservationNetwork& net,
                            const Matrix& ys) {
  const Matrix h = selection_matrix(net, xb.rows());
  const Matrix rinv = net.r_diag.cwiseInverse().asDiagonal();
  const Matrix a = binv + h.transpose() * rinv * h;
  return xb + a.inverse() * h.transpose() * rinv * (ys - h * xb);
}

/// Random network of `nobs` distinct components out of n.
inline ObservationNetwork random_network(std::mt19937_64& rng, Index n, Index nobs) {
  std::vector<Index> all(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
  std::shuffle(all.begin(), all.end(), rng);
  ObservationNetwork net;
  net.indices.assign(all.begin(), all.begin() + nobs);
  std::sort(net.indices.begin(), net.indices.end());
  std::uniform_real_distribution<double> var(0.1, 2.0);
  std::normal_distribution<double> y(0.0, 2.0);
  net.r_diag.resize(nobs);
  net.y.resize(nobs);
  for (Index k = 0; k < nobs; ++k) {
    net.r_diag[k] = var(rng);
    net.y[k] = y(rng);
  }
  return net;
}

/// Principal square root of an SPD matrix by the Denman-Beavers iteration.
inline Matrix spd_sqrt(const Matrix& a) {
  Matrix y = a;
  Matrix z = Matrix::Identity(a.rows(), a.cols());
  for (int it = 0; it < 100; ++it) {
    const Matrix yi = y.inverse();
    const Matrix zi = z.inverse();
    const Matrix y_next = 0.5 * (y + zi);
    const Matrix z_next = 0.5 * (z + yi);
    const double change = (y_next - y).norm();
    y = y_next;
    z = z_next;
    if (change <= 1e-15 * y.norm()) break;
  }
  return y;
}

/// One global ETKF step using every observation for every component.
inline Matrix etkf_oracle(const Matrix& xb, const ObservationNetwork& net, double inflation) {
  const Index nens = xb.cols();
  Vector mean = Vector::Zero(xb.rows());
  for (Index i = 0; i < nens; ++i) mean += xb.col(i);
  mean /= static_cast<double>(nens);
  Matrix u = xb;
  u.colwise() -= mean;
  const Matrix h = selection_matrix(net, xb.rows());
  const Matrix z = h * u;
  const Matrix rinv = net.r_diag.cwiseInverse().asDiagonal();
  const double m1 = static_cast<double>(nens - 1);
  const Matrix pa =
      (m1 / inflation * Matrix::Identity(nens, nens) + z.transpose() * rinv * z).inverse();
  const Vector wa = pa * z.transpose() * rinv * (net.y - h * mean);
  Matrix w = spd_sqrt(m1 * pa);
  w.colwise() += wa;
  Matrix xa = u * w;
  xa.colwise() += mean;
  return xa;
}

/// Every label within Chebyshev distance zeta of `center`, by brute force.
inline IndexList box_oracle(const GridGeometry& g, Index center, Index zeta) {
  IndexList out;
  for (Index j = 0; j < g.nstate(); ++j)
    if (g.distance(center, j) <= zeta) out.push_back(j);
  return out;
}

}  // namespace enkfmc::testing
