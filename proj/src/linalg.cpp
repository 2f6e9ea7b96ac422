#include "mklvc/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mklvc/errors.hpp"

namespace mklvc {

SymMatrix::SymMatrix(const Eigen::MatrixXd& m) {
  if (m.rows() < 1 || m.rows() != m.cols()) {
    std::ostringstream msg;
    msg << "SymMatrix needs a non-empty square matrix, got " << m.rows() << "x"
        << m.cols();
    throw ValidationError(msg.str());
  }
  m_ = 0.5 * (m + m.transpose());
}

SymMatrix SymMatrix::identity(Eigen::Index dim) {
  return SymMatrix(Eigen::MatrixXd::Identity(dim, dim));
}

SymMatrix SymMatrix::diagonal(const Eigen::VectorXd& diag) {
  return SymMatrix(Eigen::MatrixXd(diag.asDiagonal()));
}

SymMatrix SymMatrix::with_ridge(double value) const {
  Eigen::MatrixXd shifted = m_;
  shifted.diagonal().array() += value;
  return SymMatrix(shifted);
}

SymEigen sym_eig(const SymMatrix& s) {
  const auto dim = static_cast<std::size_t>(s.dim());
  if (!s.matrix().allFinite()) throw EigenSolverError(dim);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(s.matrix());
  if (solver.info() != Eigen::Success) throw EigenSolverError(dim);
  return {solver.eigenvalues(), solver.eigenvectors()};
}

namespace {

Eigen::MatrixXd recompose(const Eigen::MatrixXd& q, const Eigen::VectorXd& d) {
  return q * d.asDiagonal() * q.transpose();
}

}  // namespace

SymMatrix sym_sqrt(const SymMatrix& s, double eig_floor) {
  if (eig_floor < 0.0) throw ValidationError("eig_floor must be non-negative");

  const SymEigen eig = sym_eig(s);
  const double scale = eig.eigenvalues.cwiseAbs().maxCoeff();
  const double lowest = eig.eigenvalues(0);
  if (lowest < -kPsdTolerance * scale) {
    std::ostringstream msg;
    msg << "matrix is not positive semi-definite: eigenvalue " << lowest
        << " against largest magnitude " << scale;
    throw NotPsdError(msg.str());
  }

  Eigen::VectorXd roots = eig.eigenvalues.unaryExpr(
      [eig_floor](double v) { return std::sqrt(std::max(v, eig_floor)); });
  return SymMatrix(recompose(eig.eigenvectors, roots));
}

SymMatrix sym_inv_sqrt(const SymMatrix& s, double ridge) {
  if (ridge < 0.0) throw ValidationError("ridge must be non-negative");

  const SymEigen eig = sym_eig(s);
  Eigen::VectorXd shifted = eig.eigenvalues.unaryExpr(
      [ridge](double v) { return std::max(v, 0.0) + ridge; });
  if (shifted.minCoeff() <= 0.0) {
    std::ostringstream msg;
    msg << "matrix is singular: smallest eigenvalue " << eig.eigenvalues(0)
        << " with ridge " << ridge;
    throw SingularMatrixError(msg.str());
  }
  return SymMatrix(recompose(eig.eigenvectors, shifted.cwiseSqrt().cwiseInverse()));
}

}  // namespace mklvc
