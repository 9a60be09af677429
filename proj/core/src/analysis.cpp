#include <enkfmc/analysis.hpp>
#include <enkfmc/errors.hpp>

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <cmath>
#include <string>

namespace enkfmc {

Vector row_means(const Matrix& x) {
  Vector m(x.rows());
  const auto count = static_cast<double>(x.cols());
  for (Index r = 0; r < x.rows(); ++r) {
    double s = 0.0;
    for (Index c = 0; c < x.cols(); ++c) s += x(r, c);
    m[r] = s / count;
  }
  return m;
}

Matrix deviations(const Matrix& x, const Vector& means) {
  Matrix u(x.rows(), x.cols());
  for (Index c = 0; c < x.cols(); ++c) {
    for (Index r = 0; r < x.rows(); ++r) u(r, c) = x(r, c) - means[r];
  }
  return u;
}

namespace {

void check_conformant(const Matrix& xb, const PrecisionFactors& factors,
                      const ObservationNetwork& net, const Matrix& ys) {
  if (factors.n() != xb.rows()) {
    throw DomainError("analysis: factors of dimension " + std::to_string(factors.n()) +
                      " for a local state of dimension " + std::to_string(xb.rows()));
  }
  net.validate(xb.rows());
  if (ys.rows() != net.size() || ys.cols() != xb.cols()) {
    throw DomainError("analysis: perturbed observations are " + std::to_string(ys.rows()) +
                      "x" + std::to_string(ys.cols()) + ", expected " +
                      std::to_string(net.size()) + "x" + std::to_string(xb.cols()));
  }
}

// H^T R^-1 (Ys - H Xb), an n x Nens matrix nonzero only on observed rows.
Matrix weighted_innovation(const Matrix& xb, const ObservationNetwork& net, const Matrix& ys) {
  Matrix rhs = Matrix::Zero(xb.rows(), xb.cols());
  for (Index k = 0; k < net.size(); ++k) {
    const Index i = net.indices[static_cast<std::size_t>(k)];
    rhs.row(i) = (ys.row(k) - xb.row(i)) / net.r_diag[k];
  }
  return rhs;
}

Vector apply_system(const PrecisionFactors& factors, const ObservationNetwork& net,
                    const Vector& v) {
  Vector out = precision_apply(factors, v);
  for (Index k = 0; k < net.size(); ++k) {
    const Index i = net.indices[static_cast<std::size_t>(k)];
    out[i] += v[i] / net.r_diag[k];
  }
  return out;
}

}  // namespace

Vector primal_cg_solve(const PrecisionFactors& factors, const ObservationNetwork& net,
                       const Vector& b, double rel_tol, Index max_iter) {
  Vector x = Vector::Zero(b.size());
  const double bnorm = b.norm();
  if (bnorm == 0.0) return x;

  Vector r = b;
  Vector p = r;
  double rr = r.squaredNorm();
  for (Index it = 0; it < max_iter; ++it) {
    if (std::sqrt(rr) <= rel_tol * bnorm) return x;
    const Vector ap = apply_system(factors, net, p);
    const double pap = p.dot(ap);
    if (!(pap > 0.0)) {
      throw NumericalError("conjugate gradients hit a non-positive curvature direction",
                           std::sqrt(rr) / bnorm);
    }
    const double alpha = rr / pap;
    x += alpha * p;
    r -= alpha * ap;
    const double rr_next = r.squaredNorm();
    p = r + (rr_next / rr) * p;
    rr = rr_next;
  }
  const double rel = std::sqrt(rr) / bnorm;
  if (rel <= rel_tol) return x;
  throw NumericalError("conjugate gradients did not converge in " + std::to_string(max_iter) +
                           " iterations (relative residual " + std::to_string(rel) + ")",
                       rel);
}

Matrix analysis_primal(const Matrix& xb, const PrecisionFactors& factors,
                       const ObservationNetwork& net, const Matrix& ys,
                       const PrimalOptions& options) {
  check_conformant(xb, factors, net, ys);
  if (net.size() == 0) return xb;

  const Index n = xb.rows();
  const Index nobs = net.size();
  Matrix increment(n, xb.cols());

  if (n <= options.dense_cap) {
    // Least-squares form of the same system: minimize
    // |D^-1/2 T dx|^2 + |R^-1/2 (H dx - d)|^2 by Householder QR, which avoids
    // squaring the condition number of T^T D^-1 T.
    Matrix stacked = Matrix::Zero(n + nobs, n);
    stacked.topRows(n) = factors.d().cwiseSqrt().cwiseInverse().asDiagonal() *
                         dense_t(factors, options.dense_cap);
    Matrix rhs = Matrix::Zero(n + nobs, xb.cols());
    for (Index k = 0; k < nobs; ++k) {
      const Index i = net.indices[static_cast<std::size_t>(k)];
      const double w = 1.0 / std::sqrt(net.r_diag[k]);
      stacked(n + k, i) = w;
      rhs.row(n + k) = w * (ys.row(k) - xb.row(i));
    }
    const Eigen::HouseholderQR<Matrix> qr(stacked);
    increment = qr.solve(rhs);
    if (!increment.allFinite()) {
      throw NumericalError("primal analysis: state-space solve produced non-finite values");
    }
  } else {
    const Matrix rhs = weighted_innovation(xb, net, ys);
    for (Index c = 0; c < xb.cols(); ++c) {
      increment.col(c) =
          primal_cg_solve(factors, net, rhs.col(c), options.cg_rel_tol, 10 * n);
    }
  }
  return xb + increment;
}

Matrix analysis_dual(const Matrix& xb, const PrecisionFactors& factors,
                     const ObservationNetwork& net, const Matrix& ys, Index dense_cap) {
  check_conformant(xb, factors, net, ys);
  if (net.size() == 0) return xb;

  const Index n = xb.rows();
  const Index nobs = net.size();

  // gain_lhs = X V^T = B H^T (n x Nobs), hvt = V V^T = H B H^T (Nobs x Nobs)
  Matrix gain_lhs(n, nobs);
  if (n <= dense_cap) {
    const Matrix x = sqrt_solve(factors, Matrix::Identity(n, n));
    const Matrix v = net.select(x);
    gain_lhs.noalias() = x * v.transpose();
  } else {
    Vector e = Vector::Zero(n);
    for (Index k = 0; k < nobs; ++k) {
      const Index i = net.indices[static_cast<std::size_t>(k)];
      e[i] = 1.0;
      gain_lhs.col(k) = covariance_apply(factors, e);
      e[i] = 0.0;
    }
  }
  Matrix s = net.select(gain_lhs);
  s = 0.5 * (s + s.transpose()).eval();
  s.diagonal() += net.r_diag;

  Eigen::LLT<Matrix> llt(s);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("dual analysis: observation-space system is not positive definite");
  }
  const Matrix innovation = ys - net.select(xb);
  return xb + gain_lhs * llt.solve(innovation);
}

}  // namespace enkfmc
