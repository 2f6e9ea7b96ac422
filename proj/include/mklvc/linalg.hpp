#pragma once

#include <Eigen/Dense>

namespace mklvc {

/// Real symmetric matrix. The constructor symmetrizes its input as
/// (M + M^T) / 2, so entries(i, j) == entries(j, i) holds bit-exactly.
class SymMatrix {
 public:
  explicit SymMatrix(const Eigen::MatrixXd& m);

  static SymMatrix identity(Eigen::Index dim);
  static SymMatrix diagonal(const Eigen::VectorXd& diag);

  Eigen::Index dim() const noexcept { return m_.rows(); }
  const Eigen::MatrixXd& matrix() const noexcept { return m_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

  /// Returns a copy with `value` added to every diagonal entry.
  SymMatrix with_ridge(double value) const;

 private:
  Eigen::MatrixXd m_;
};

struct SymEigen {
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // orthonormal columns
};

/// Eigendecomposition S = Q diag(lambda) Q^T. Throws EigenSolverError when the
/// solver does not converge or the input is not finite.
SymEigen sym_eig(const SymMatrix& s);

/// Relative magnitude below which negative eigenvalues count as rounding noise.
inline constexpr double kPsdTolerance = 1e-6;

/// Principal square root Q diag(sqrt(max(lambda, eig_floor))) Q^T.
///
/// Negative eigenvalues whose magnitude is at most kPsdTolerance * max|lambda|
/// are treated as noise and clamped; anything more negative means the input
/// is genuinely indefinite and NotPsdError is thrown.
SymMatrix sym_sqrt(const SymMatrix& s, double eig_floor = 0.0);

/// Inverse square root Q diag(1 / sqrt(max(lambda, 0) + ridge)) Q^T.
/// Throws SingularMatrixError if any shifted eigenvalue is not positive.
SymMatrix sym_inv_sqrt(const SymMatrix& s, double ridge = 0.0);

}  // namespace mklvc
