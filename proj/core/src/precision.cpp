#include <enkfmc/errors.hpp>
#include <enkfmc/precision.hpp>

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

namespace enkfmc {

PrecisionFactors::PrecisionFactors(std::vector<Index> row_ptr, std::vector<Index> cols,
                                   std::vector<double> values, Vector d)
    : row_ptr_(std::move(row_ptr)),
      cols_(std::move(cols)),
      values_(std::move(values)),
      d_(std::move(d)) {
  const Index n = static_cast<Index>(d_.size());
  if (static_cast<Index>(row_ptr_.size()) != n + 1 || row_ptr_.front() != 0 ||
      row_ptr_.back() != static_cast<Index>(cols_.size()) || cols_.size() != values_.size()) {
    throw DomainError("malformed row-compressed layout for T");
  }
  for (Index j = 0; j < n; ++j) {
    const auto b = row_ptr_[static_cast<std::size_t>(j)];
    const auto e = row_ptr_[static_cast<std::size_t>(j) + 1];
    if (e < b) throw DomainError("row pointers of T must be nondecreasing");
    for (Index k = b; k < e; ++k) {
      const Index c = cols_[static_cast<std::size_t>(k)];
      if (c < 0 || c >= j) {
        throw DomainError("T row " + std::to_string(j) + " stores column " + std::to_string(c) +
                          " on or above the diagonal");
      }
      if (k > b && cols_[static_cast<std::size_t>(k) - 1] >= c) {
        throw DomainError("T row " + std::to_string(j) + " columns not strictly ascending");
      }
    }
    if (!(d_[j] >= kVarianceFloor)) {
      throw DomainError("D[" + std::to_string(j) + "] below the variance floor");
    }
  }
}

PrecisionFactors PrecisionFactors::diagonal(Vector d) {
  std::vector<Index> row_ptr(static_cast<std::size_t>(d.size()) + 1, 0);
  return PrecisionFactors(std::move(row_ptr), {}, {}, std::move(d));
}

std::span<const Index> PrecisionFactors::row_cols(Index j) const {
  const auto b = static_cast<std::size_t>(row_ptr_[static_cast<std::size_t>(j)]);
  const auto e = static_cast<std::size_t>(row_ptr_[static_cast<std::size_t>(j) + 1]);
  return {cols_.data() + b, e - b};
}

std::span<const double> PrecisionFactors::row_values(Index j) const {
  const auto b = static_cast<std::size_t>(row_ptr_[static_cast<std::size_t>(j)]);
  const auto e = static_cast<std::size_t>(row_ptr_[static_cast<std::size_t>(j) + 1]);
  return {values_.data() + b, e - b};
}

namespace {

void check_dim(const PrecisionFactors& f, Index m, const char* what) {
  if (m != f.n()) {
    throw DomainError(std::string(what) + ": dimension " + std::to_string(m) +
                      " does not match factors of dimension " + std::to_string(f.n()));
  }
}

// y = T x
Vector apply_t(const PrecisionFactors& f, const Vector& x) {
  Vector y = x;
  for (Index j = 0; j < f.n(); ++j) {
    const auto cols = f.row_cols(j);
    const auto vals = f.row_values(j);
    double acc = 0.0;
    for (std::size_t k = 0; k < cols.size(); ++k) acc += vals[k] * x[cols[k]];
    y[j] += acc;
  }
  return y;
}

// y = T^T x, scattering row j of T into the entries it touches.
Vector apply_tt(const PrecisionFactors& f, const Vector& x) {
  Vector y = x;
  for (Index j = 0; j < f.n(); ++j) {
    const auto cols = f.row_cols(j);
    const auto vals = f.row_values(j);
    for (std::size_t k = 0; k < cols.size(); ++k) y[cols[k]] += vals[k] * x[j];
  }
  return y;
}

}  // namespace

Vector precision_apply(const PrecisionFactors& f, const Vector& v) {
  check_dim(f, v.size(), "precision_apply");
  Vector w = apply_t(f, v);
  w.array() /= f.d().array();
  return apply_tt(f, w);
}

Vector covariance_apply(const PrecisionFactors& f, const Vector& v) {
  check_dim(f, v.size(), "covariance_apply");
  const Index n = f.n();

  // T^T z = v, unknowns resolved from the last label backwards
  Vector z = v;
  for (Index j = n - 1; j >= 0; --j) {
    const auto cols = f.row_cols(j);
    const auto vals = f.row_values(j);
    for (std::size_t k = 0; k < cols.size(); ++k) z[cols[k]] -= vals[k] * z[j];
  }
  z.array() *= f.d().array();

  // T x = z
  for (Index j = 0; j < n; ++j) {
    const auto cols = f.row_cols(j);
    const auto vals = f.row_values(j);
    double acc = 0.0;
    for (std::size_t k = 0; k < cols.size(); ++k) acc += vals[k] * z[cols[k]];
    z[j] -= acc;
  }
  return z;
}

Matrix sqrt_solve(const PrecisionFactors& f, const Matrix& rhs) {
  check_dim(f, rhs.rows(), "sqrt_solve");
  Matrix x(rhs.rows(), rhs.cols());
  for (Index j = 0; j < f.n(); ++j) {
    x.row(j) = std::sqrt(f.d()[j]) * rhs.row(j);
    const auto cols = f.row_cols(j);
    const auto vals = f.row_values(j);
    for (std::size_t k = 0; k < cols.size(); ++k) x.row(j) -= vals[k] * x.row(cols[k]);
  }
  return x;
}

Matrix dense_t(const PrecisionFactors& f, Index cap) {
  if (f.n() > cap) {
    throw CapacityError("dense T of dimension " + std::to_string(f.n()) + " exceeds cap " +
                        std::to_string(cap));
  }
  Matrix t = Matrix::Identity(f.n(), f.n());
  for (Index j = 0; j < f.n(); ++j) {
    const auto cols = f.row_cols(j);
    const auto vals = f.row_values(j);
    for (std::size_t k = 0; k < cols.size(); ++k) t(j, cols[k]) = vals[k];
  }
  return t;
}

Matrix dense_precision(const PrecisionFactors& f, Index cap) {
  if (f.n() > cap) {
    throw CapacityError("dense precision of dimension " + std::to_string(f.n()) +
                        " exceeds cap " + std::to_string(cap));
  }
  // Sum of rank-one terms t_j t_j^T / D_j over the rows t_j of T.
  const Index n = f.n();
  Matrix p = Matrix::Zero(n, n);
  for (Index j = 0; j < n; ++j) {
    const auto cols = f.row_cols(j);
    const auto vals = f.row_values(j);
    const double w = 1.0 / f.d()[j];
    p(j, j) += w;
    for (std::size_t a = 0; a < cols.size(); ++a) {
      const double wa = w * vals[a];
      p(j, cols[a]) += wa;
      p(cols[a], cols[a]) += wa * vals[a];
      for (std::size_t b = 0; b < a; ++b) p(cols[a], cols[b]) += wa * vals[b];
    }
  }
  // only the lower triangle was accumulated; mirror it exactly
  for (Index c = 0; c < n; ++c) {
    for (Index r = c + 1; r < n; ++r) p(c, r) = p(r, c);
  }
  return p;
}

void write_t_triplets(std::ostream& os, const PrecisionFactors& f) {
  char buf[96];
  for (Index j = 0; j < f.n(); ++j) {
    const auto cols = f.row_cols(j);
    const auto vals = f.row_values(j);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%lld %lld %.17g\n", static_cast<long long>(j),
                    static_cast<long long>(cols[k]), vals[k]);
      os << buf;
    }
    std::snprintf(buf, sizeof buf, "%lld %lld 1\n", static_cast<long long>(j),
                  static_cast<long long>(j));
    os << buf;
  }
}

void write_d_vector(std::ostream& os, const PrecisionFactors& f) {
  char buf[48];
  for (Index j = 0; j < f.n(); ++j) {
    std::snprintf(buf, sizeof buf, "%.17g\n", f.d()[j]);
    os << buf;
  }
}

}  // namespace enkfmc
