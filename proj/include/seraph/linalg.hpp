#pragma once

#include <Eigen/Core>

#include "seraph/types.hpp"

namespace seraph {

/// Symmetric part (M + M^T)/2. All symmetric matrices in this library are
/// produced through this function so that entries (i,j) and (j,i) compare
/// equal exactly, not just up to rounding.
template <typename Derived>
Matrix symmetrize(const Eigen::MatrixBase<Derived>& m) {
  return 0.5 * (m + m.transpose());
}

struct EigenDecomposition {
  Vector values;   // descending
  Matrix vectors;  // orthonormal columns, vectors.col(k) pairs with values[k]
};

/// Spectral decomposition of a symmetric matrix. Eigenvalues are returned in
/// descending order. Throws NumericalError if the solver does not converge
/// and DataError on non-finite input.
EigenDecomposition sym_eigen(const Eigen::Ref<const Matrix>& m);

/// Frobenius-nearest positive semi-definite matrix: eigendecompose and clip
/// negative eigenvalues at zero. Idempotent.
Matrix project_psd(const Eigen::Ref<const Matrix>& m);

/// Rank-one matrix (x - y)(x - y)^T.
Matrix outer_diff(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y);

/// Squared Mahalanobis distance (x - y)^T A (x - y), clamped at zero against
/// rounding on near-null directions.
double mahalanobis_sq(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Vector>& x,
                      const Eigen::Ref<const Vector>& y);

inline double trace(const Eigen::Ref<const Matrix>& m) { return m.trace(); }

inline double frobenius_norm(const Eigen::Ref<const Matrix>& m) { return m.norm(); }

}  // namespace seraph
