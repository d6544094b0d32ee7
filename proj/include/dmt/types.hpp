#pragma once

#include <type_traits>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace dmt {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Sample-major sparse design matrix (one row per sample).
template <typename Scalar>
using SparseRows = Eigen::SparseMatrix<Scalar, Eigen::RowMajor>;

using Index = Eigen::Index;

/// Non-deduced vector parameter, so Eigen expressions convert at call sites.
template <typename Scalar>
using VectorArg = std::type_identity_t<Vector<Scalar>>;

/// Column mean of a d×n agent matrix, i.e. `Z * 1 / n`.
template <typename Derived>
auto column_mean(const Eigen::MatrixBase<Derived>& z) {
  return (z.rowwise().sum() / static_cast<typename Derived::Scalar>(z.cols())).eval();
}

/// Deviation from consensus, `Z - Z J` with `J = 11ᵀ/n`.
template <typename Derived>
auto consensus_deviation(const Eigen::MatrixBase<Derived>& z) {
  return (z.colwise() - column_mean(z)).eval();
}

}  // namespace dmt
