#include "seraph/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>

namespace seraph {

EigenDecomposition sym_eigen(const Eigen::Ref<const Matrix>& m) {
  if (m.rows() != m.cols()) {
    throw DataError("sym_eigen: matrix is " + std::to_string(m.rows()) + "x" +
                    std::to_string(m.cols()) + ", expected square");
  }
  if (!m.allFinite()) {
    throw DataError("sym_eigen: matrix has non-finite entries");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetrize(m));
  if (solver.info() != Eigen::Success) {
    throw NumericalError("sym_eigen: eigensolver did not converge");
  }
  // Eigen reports ascending order; flip to descending.
  const Index n = m.rows();
  EigenDecomposition dec;
  dec.values = solver.eigenvalues().reverse();
  dec.vectors.resize(n, n);
  for (Index k = 0; k < n; ++k) {
    dec.vectors.col(k) = solver.eigenvectors().col(n - 1 - k);
  }
  return dec;
}

Matrix project_psd(const Eigen::Ref<const Matrix>& m) {
  const EigenDecomposition dec = sym_eigen(m);
  const Vector clipped = dec.values.cwiseMax(0.0);
  return symmetrize(dec.vectors * clipped.asDiagonal() * dec.vectors.transpose());
}

Matrix outer_diff(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y) {
  if (x.size() != y.size()) {
    throw DataError("outer_diff: dimension mismatch (" + std::to_string(x.size()) + " vs " +
                    std::to_string(y.size()) + ")");
  }
  const Vector d = x - y;
  return d * d.transpose();
}

double mahalanobis_sq(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Vector>& x,
                      const Eigen::Ref<const Vector>& y) {
  if (x.size() != y.size() || a.rows() != x.size() || a.cols() != x.size()) {
    throw DataError("mahalanobis_sq: dimension mismatch (A is " + std::to_string(a.rows()) + "x" +
                    std::to_string(a.cols()) + ", points have " + std::to_string(x.size()) +
                    " and " + std::to_string(y.size()) + " features)");
  }
  const Vector d = x - y;
  const double v = d.dot(a * d);
  return v < 0.0 ? 0.0 : v;
}

}  // namespace seraph
