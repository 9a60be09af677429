#pragma once

#include <enkfmc/types.hpp>

#include <iosfwd>
#include <span>
#include <vector>

namespace enkfmc {

/// Absolute floor applied to every entry of D.
inline constexpr double kVarianceFloor = 1e-10;

/// Default cap on the dimension of dense matrices materialized from factors.
inline constexpr Index kDefaultDenseCap = 4096;

/// Modified Cholesky factors of a precision matrix, B^-1 = T^T D^-1 T.
///
/// T is unit lower-triangular and kept in row-compressed form with the unit
/// diagonal implicit; each row stores the negated regression coefficients of
/// that component on its predecessors, columns strictly ascending. D holds
/// the residual variances.
class PrecisionFactors {
 public:
  PrecisionFactors() = default;

  /// Validates the layout: strictly lower, ascending columns, D >= floor.
  PrecisionFactors(std::vector<Index> row_ptr, std::vector<Index> cols,
                   std::vector<double> values, Vector d);

  /// T = I, D = d.
  static PrecisionFactors diagonal(Vector d);

  Index n() const noexcept { return static_cast<Index>(d_.size()); }
  Index nnz() const noexcept { return static_cast<Index>(cols_.size()); }

  std::span<const Index> row_cols(Index j) const;
  std::span<const double> row_values(Index j) const;
  const Vector& d() const noexcept { return d_; }

  const std::vector<Index>& row_ptr() const noexcept { return row_ptr_; }
  const std::vector<Index>& cols() const noexcept { return cols_; }
  const std::vector<double>& values() const noexcept { return values_; }

 private:
  std::vector<Index> row_ptr_{0};
  std::vector<Index> cols_;
  std::vector<double> values_;
  Vector d_;
};

/// T^T D^-1 T v, never forming the product.
Vector precision_apply(const PrecisionFactors& f, const Vector& v);

/// T^-1 D T^-T v via a backward solve, a diagonal scale and a forward solve.
Vector covariance_apply(const PrecisionFactors& f, const Vector& v);

/// Solves T X = D^{1/2} rhs by forward substitution in label order.
Matrix sqrt_solve(const PrecisionFactors& f, const Matrix& rhs);

/// Dense T^T D^-1 T; throws CapacityError when n exceeds `cap`.
Matrix dense_precision(const PrecisionFactors& f, Index cap = kDefaultDenseCap);

/// Dense unit lower-triangular T; mostly for tests and dumps.
Matrix dense_t(const PrecisionFactors& f, Index cap = kDefaultDenseCap);

/// Writes T as "row col value" triplets (0-based, unit diagonal included).
void write_t_triplets(std::ostream& os, const PrecisionFactors& f);

/// Writes D one value per line.
void write_d_vector(std::ostream& os, const PrecisionFactors& f);

}  // namespace enkfmc
