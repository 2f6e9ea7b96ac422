#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <vector>

#include "mklvc/linalg.hpp"
#include "mklvc/stats.hpp"

namespace mklvc {

/// x -> A x + b with A symmetric positive semi-definite.
class AffineMap {
 public:
  /// Throws NumericalError if `matrix` is not symmetric PSD within
  /// `tolerance` (relative to its largest entry); the stored matrix is
  /// symmetrized.
  AffineMap(Eigen::MatrixXd matrix, Eigen::VectorXd offset, double tolerance = 1e-8);

  static AffineMap identity(Eigen::Index dim);

  const Eigen::MatrixXd& matrix() const noexcept { return matrix_; }
  const Eigen::VectorXd& offset() const noexcept { return offset_; }
  Eigen::Index dim() const noexcept { return offset_.size(); }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
  /// Applies the map to every row of a frames x dim matrix.
  Eigen::MatrixXd apply_rows(const Eigen::MatrixXd& frames) const;

 private:
  Eigen::MatrixXd matrix_;
  Eigen::VectorXd offset_;
};

/// Closed-form quadratic-cost optimal transport map between two Gaussians,
///
///   A = S1^{-1/2} (S1^{1/2} S2 S1^{1/2})^{1/2} S1^{-1/2},   b = mu2 - A mu1,
///
/// with `ridge` added to both covariance diagonals first. The map pushes
/// N(mu1, S1) forward onto N(mu2, S2) exactly.
///
/// Throws SingularMatrixError when the (ridged) source covariance has
/// condition number above 1e12 or no positive eigenvalue.
AffineMap mkl_fit(const GaussianStats& source, const GaussianStats& target,
                  double ridge = 0.0);

/// Ridge used when none is given: kAutoRidgeScale * mean(diag(source_cov)).
inline constexpr double kAutoRidgeScale = 1e-6;
double auto_ridge(const SymMatrix& source_cov);

/// Direct product of per-block MKL maps over profile-sorted dimensions.
/// Block i covers sorted dimensions [i*K, (i+1)*K).
struct FactorizedMap {
  Eigen::Index block_dim = 0;
  std::vector<Eigen::Index> permutation;
  std::vector<AffineMap> blocks;
  // Per-block mean segments laid out in sorted-dimension order (length D).
  Eigen::VectorXd source_means;
  Eigen::VectorXd target_means;

  Eigen::Index dim() const noexcept {
    return static_cast<Eigen::Index>(permutation.size());
  }
  /// Throws ValidationError if the fields are mutually inconsistent.
  void validate() const;
};

/// Fits one MKL map per K-dimensional block of the sorted embedding.
/// With `ridge` unset each block uses auto_ridge of its source covariance.
FactorizedMap factorize_fit(const EmbeddingSequence& source,
                            const EmbeddingSequence& reference, Eigen::Index block_dim,
                            const SortProfile& profile,
                            std::optional<double> ridge = std::nullopt);

/// Applies each block map to its slice of every frame; time order and T are
/// unchanged.
EmbeddingSequence factorize_apply(const FactorizedMap& map, const EmbeddingSequence& x);

/// Closed-form Wasserstein-2 distance between two Gaussians:
/// W2^2 = |mu1 - mu2|^2 + tr(S1 + S2 - 2 (S1^{1/2} S2 S1^{1/2})^{1/2}).
double gaussian_w2(const GaussianStats& a, const GaussianStats& b);

}  // namespace mklvc
