#include "mklvc/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mklvc/errors.hpp"

namespace mklvc {

EmbeddingSequence::EmbeddingSequence(Eigen::MatrixXd frames, double frame_rate_hz)
    : frames_(std::move(frames)), frame_rate_hz_(frame_rate_hz) {
  if (frames_.rows() < 1 || frames_.cols() < 1)
    throw ValidationError("embedding sequence must have at least one frame and one dimension");
  if (!frames_.allFinite())
    throw ValidationError("embedding sequence contains NaN or Inf");
  if (!(frame_rate_hz_ > 0.0) || !std::isfinite(frame_rate_hz_))
    throw ValidationError("frame rate must be a positive finite number");
}

GaussianStats fit_gaussian(const Eigen::MatrixXd& frames) {
  const Eigen::Index t = frames.rows();
  if (t < 2) throw InsufficientSamplesError("fit_gaussian", 2, static_cast<std::size_t>(t));

  Eigen::VectorXd mean = frames.colwise().mean().transpose();
  Eigen::MatrixXd centered = frames.rowwise() - mean.transpose();
  Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(t);
  return {std::move(mean), SymMatrix(cov), static_cast<std::size_t>(t)};
}

GaussianStats fit_gaussian(const EmbeddingSequence& x) { return fit_gaussian(x.frames()); }

Eigen::VectorXd per_dim_std(const EmbeddingSequence& x) {
  const Eigen::Index t = x.num_frames();
  if (t < 2) throw InsufficientSamplesError("per_dim_std", 2, static_cast<std::size_t>(t));

  const Eigen::RowVectorXd mean = x.frames().colwise().mean();
  Eigen::MatrixXd centered = x.frames().rowwise() - mean;
  return (centered.array().square().colwise().sum() / static_cast<double>(t))
      .sqrt()
      .transpose();
}

SortProfile sort_profile(const Eigen::VectorXd& std, std::string source_tag) {
  if (!std.allFinite() || (std.array() < 0.0).any())
    throw ValidationError("standard deviations must be finite and non-negative");

  std::vector<Eigen::Index> perm(static_cast<std::size_t>(std.size()));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  std::stable_sort(perm.begin(), perm.end(),
                   [&std](Eigen::Index a, Eigen::Index b) { return std(a) > std(b); });
  return {std, std::move(perm), std::move(source_tag)};
}

void check_permutation(const std::vector<Eigen::Index>& perm, Eigen::Index dim) {
  if (static_cast<Eigen::Index>(perm.size()) != dim)
    throw DimensionMismatchError("permutation length", static_cast<std::size_t>(dim),
                                 perm.size());
  std::vector<bool> seen(perm.size(), false);
  for (Eigen::Index p : perm) {
    if (p < 0 || p >= dim || seen[static_cast<std::size_t>(p)])
      throw ValidationError("permutation is not a bijection on 0..D-1");
    seen[static_cast<std::size_t>(p)] = true;
  }
}

Eigen::MatrixXd permute_dims(const Eigen::MatrixXd& frames,
                             const std::vector<Eigen::Index>& perm, bool inverse) {
  check_permutation(perm, frames.cols());
  Eigen::MatrixXd out(frames.rows(), frames.cols());
  for (Eigen::Index i = 0; i < frames.cols(); ++i) {
    const Eigen::Index p = perm[static_cast<std::size_t>(i)];
    if (inverse)
      out.col(p) = frames.col(i);
    else
      out.col(i) = frames.col(p);
  }
  return out;
}

EmbeddingSequence permute_dims(const EmbeddingSequence& x,
                               const std::vector<Eigen::Index>& perm, bool inverse) {
  return EmbeddingSequence(permute_dims(x.frames(), perm, inverse), x.frame_rate_hz());
}

EmbeddingSequence concatenate(const std::vector<EmbeddingSequence>& parts) {
  if (parts.empty()) throw ValidationError("nothing to concatenate");
  const Eigen::Index d = parts.front().dim();
  Eigen::Index total = 0;
  for (const auto& p : parts) {
    if (p.dim() != d)
      throw DimensionMismatchError("concatenate", static_cast<std::size_t>(d),
                                   static_cast<std::size_t>(p.dim()));
    total += p.num_frames();
  }
  Eigen::MatrixXd all(total, d);
  Eigen::Index row = 0;
  for (const auto& p : parts) {
    all.middleRows(row, p.num_frames()) = p.frames();
    row += p.num_frames();
  }
  return EmbeddingSequence(std::move(all), parts.front().frame_rate_hz());
}

}  // namespace mklvc
