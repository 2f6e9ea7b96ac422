#include "mklvc/transport.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mklvc/errors.hpp"

namespace mklvc {

namespace {

// Source covariances with a larger condition number are treated as singular.
constexpr double kMaxSourceCondition = 1e12;

void check_stats_dims(const GaussianStats& s, const char* what) {
  if (s.mean.size() != s.cov.dim())
    throw DimensionMismatchError(what, static_cast<std::size_t>(s.cov.dim()),
                                 static_cast<std::size_t>(s.mean.size()));
}

}  // namespace

AffineMap::AffineMap(Eigen::MatrixXd matrix, Eigen::VectorXd offset, double tolerance)
    : matrix_(std::move(matrix)), offset_(std::move(offset)) {
  if (matrix_.rows() != matrix_.cols() || matrix_.rows() != offset_.size())
    throw DimensionMismatchError("affine map", static_cast<std::size_t>(offset_.size()),
                                 static_cast<std::size_t>(matrix_.rows()));
  if (!matrix_.allFinite() || !offset_.allFinite())
    throw NumericalError("affine map has non-finite entries");

  const double scale = std::max(1.0, matrix_.cwiseAbs().maxCoeff());
  const double asym = (matrix_ - matrix_.transpose()).cwiseAbs().maxCoeff();
  if (asym > tolerance * scale)
    throw NumericalError("affine map matrix is not symmetric");
  matrix_ = 0.5 * (matrix_ + matrix_.transpose());

  const SymEigen eig = sym_eig(SymMatrix(matrix_));
  if (eig.eigenvalues(0) < -tolerance * scale)
    throw NumericalError("affine map matrix is not positive semi-definite");
}

AffineMap AffineMap::identity(Eigen::Index dim) {
  return AffineMap(Eigen::MatrixXd::Identity(dim, dim), Eigen::VectorXd::Zero(dim));
}

Eigen::VectorXd AffineMap::apply(const Eigen::VectorXd& x) const {
  if (x.size() != dim())
    throw DimensionMismatchError("affine map input", static_cast<std::size_t>(dim()),
                                 static_cast<std::size_t>(x.size()));
  return matrix_ * x + offset_;
}

Eigen::MatrixXd AffineMap::apply_rows(const Eigen::MatrixXd& frames) const {
  if (frames.cols() != dim())
    throw DimensionMismatchError("affine map input", static_cast<std::size_t>(dim()),
                                 static_cast<std::size_t>(frames.cols()));
  Eigen::MatrixXd out = frames * matrix_.transpose();
  out.rowwise() += offset_.transpose();
  return out;
}

AffineMap mkl_fit(const GaussianStats& source, const GaussianStats& target, double ridge) {
  check_stats_dims(source, "source stats");
  check_stats_dims(target, "target stats");
  if (source.cov.dim() != target.cov.dim())
    throw DimensionMismatchError("mkl_fit", static_cast<std::size_t>(source.cov.dim()),
                                 static_cast<std::size_t>(target.cov.dim()));
  if (!(ridge >= 0.0) || !std::isfinite(ridge))
    throw ValidationError("ridge must be a finite non-negative number");

  const SymMatrix s1 = source.cov.with_ridge(ridge);
  const SymMatrix s2 = target.cov.with_ridge(ridge);

  const SymEigen eig = sym_eig(s1);
  const double largest = eig.eigenvalues.maxCoeff();
  const double smallest = eig.eigenvalues.minCoeff();
  if (!(largest > 0.0) || smallest <= largest / kMaxSourceCondition) {
    std::ostringstream msg;
    msg << "eigenvalues span [" << smallest << ", " << largest << "]";
    throw SingularMatrixError(msg.str());
  }

  const Eigen::MatrixXd& q = eig.eigenvectors;
  const Eigen::VectorXd roots = eig.eigenvalues.cwiseSqrt();
  const Eigen::MatrixXd root1 = q * roots.asDiagonal() * q.transpose();
  const Eigen::MatrixXd inv_root1 = q * roots.cwiseInverse().asDiagonal() * q.transpose();

  const SymMatrix middle(root1 * s2.matrix() * root1);
  const SymMatrix middle_root = sym_sqrt(middle);

  Eigen::MatrixXd a = inv_root1 * middle_root.matrix() * inv_root1;
  a = 0.5 * (a + a.transpose());
  Eigen::VectorXd b = target.mean - a * source.mean;
  return AffineMap(std::move(a), std::move(b));
}

double auto_ridge(const SymMatrix& source_cov) {
  return kAutoRidgeScale * source_cov.matrix().diagonal().mean();
}

void FactorizedMap::validate() const {
  const Eigen::Index d = dim();
  if (block_dim < 1 || d < 1 || d % block_dim != 0)
    throw InvalidBlockDimError(static_cast<std::size_t>(std::max<Eigen::Index>(block_dim, 0)),
                               static_cast<std::size_t>(d));
  check_permutation(permutation, d);
  if (static_cast<Eigen::Index>(blocks.size()) != d / block_dim)
    throw ValidationError("factorized map has " + std::to_string(blocks.size()) +
                          " blocks, expected " + std::to_string(d / block_dim));
  for (const auto& block : blocks)
    if (block.dim() != block_dim)
      throw DimensionMismatchError("factorized map block", static_cast<std::size_t>(block_dim),
                                   static_cast<std::size_t>(block.dim()));
  if (source_means.size() != d || target_means.size() != d)
    throw DimensionMismatchError("factorized map means", static_cast<std::size_t>(d),
                                 static_cast<std::size_t>(source_means.size()));
}

FactorizedMap factorize_fit(const EmbeddingSequence& source,
                            const EmbeddingSequence& reference, Eigen::Index block_dim,
                            const SortProfile& profile, std::optional<double> ridge) {
  const Eigen::Index d = source.dim();
  if (reference.dim() != d)
    throw DimensionMismatchError("reference embeddings", static_cast<std::size_t>(d),
                                 static_cast<std::size_t>(reference.dim()));
  if (profile.dim() != d)
    throw DimensionMismatchError("sort profile", static_cast<std::size_t>(d),
                                 static_cast<std::size_t>(profile.dim()));
  if (block_dim < 1 || d % block_dim != 0)
    throw InvalidBlockDimError(static_cast<std::size_t>(std::max<Eigen::Index>(block_dim, 0)),
                               static_cast<std::size_t>(d));
  const auto min_frames = static_cast<std::size_t>(block_dim + 1);
  if (static_cast<std::size_t>(source.num_frames()) < min_frames)
    throw InsufficientSamplesError("source sequence", min_frames,
                                   static_cast<std::size_t>(source.num_frames()));
  if (static_cast<std::size_t>(reference.num_frames()) < min_frames)
    throw InsufficientSamplesError("reference sequence", min_frames,
                                   static_cast<std::size_t>(reference.num_frames()));
  if (ridge && (!(*ridge >= 0.0) || !std::isfinite(*ridge)))
    throw ValidationError("ridge must be a finite non-negative number");

  const Eigen::MatrixXd src = permute_dims(source.frames(), profile.permutation, false);
  const Eigen::MatrixXd ref = permute_dims(reference.frames(), profile.permutation, false);

  FactorizedMap map;
  map.block_dim = block_dim;
  map.permutation = profile.permutation;
  map.source_means.resize(d);
  map.target_means.resize(d);
  map.blocks.reserve(static_cast<std::size_t>(d / block_dim));

  for (Eigen::Index start = 0, block = 0; start < d; start += block_dim, ++block) {
    const GaussianStats s = fit_gaussian(src.middleCols(start, block_dim));
    const GaussianStats t = fit_gaussian(ref.middleCols(start, block_dim));
    const double r = ridge ? *ridge : auto_ridge(s.cov);
    try {
      map.blocks.push_back(mkl_fit(s, t, r));
    } catch (const SingularMatrixError& e) {
      throw SingularSourceCovarianceError(static_cast<std::size_t>(block), e.what());
    }
    map.source_means.segment(start, block_dim) = s.mean;
    map.target_means.segment(start, block_dim) = t.mean;
  }
  return map;
}

EmbeddingSequence factorize_apply(const FactorizedMap& map, const EmbeddingSequence& x) {
  map.validate();
  if (x.dim() != map.dim())
    throw DimensionMismatchError("factorize_apply input", static_cast<std::size_t>(map.dim()),
                                 static_cast<std::size_t>(x.dim()));

  const Eigen::MatrixXd sorted = permute_dims(x.frames(), map.permutation, false);
  Eigen::MatrixXd mapped(sorted.rows(), sorted.cols());
  const Eigen::Index k = map.block_dim;
  for (std::size_t i = 0; i < map.blocks.size(); ++i) {
    const Eigen::Index start = static_cast<Eigen::Index>(i) * k;
    mapped.middleCols(start, k) = map.blocks[i].apply_rows(sorted.middleCols(start, k));
  }
  return EmbeddingSequence(permute_dims(mapped, map.permutation, true), x.frame_rate_hz());
}

double gaussian_w2(const GaussianStats& a, const GaussianStats& b) {
  check_stats_dims(a, "gaussian_w2 first argument");
  check_stats_dims(b, "gaussian_w2 second argument");
  if (a.cov.dim() != b.cov.dim())
    throw DimensionMismatchError("gaussian_w2", static_cast<std::size_t>(a.cov.dim()),
                                 static_cast<std::size_t>(b.cov.dim()));

  const SymMatrix root_a = sym_sqrt(a.cov);
  const SymMatrix cross(root_a.matrix() * b.cov.matrix() * root_a.matrix());
  const double cross_trace = sym_sqrt(cross).matrix().trace();
  const double squared = (a.mean - b.mean).squaredNorm() + a.cov.matrix().trace() +
                         b.cov.matrix().trace() - 2.0 * cross_trace;
  return std::sqrt(std::max(squared, 0.0));
}

}  // namespace mklvc
