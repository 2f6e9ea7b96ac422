#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <string>
#include <vector>

#include "mklvc/linalg.hpp"

namespace mklvc {

/// T x D matrix of frame embeddings (rows are frames). Entries are always
/// finite; the constructor rejects empty or non-finite input.
class EmbeddingSequence {
 public:
  explicit EmbeddingSequence(Eigen::MatrixXd frames, double frame_rate_hz = 50.0);

  const Eigen::MatrixXd& frames() const noexcept { return frames_; }
  Eigen::Index num_frames() const noexcept { return frames_.rows(); }
  Eigen::Index dim() const noexcept { return frames_.cols(); }
  double frame_rate_hz() const noexcept { return frame_rate_hz_; }

 private:
  Eigen::MatrixXd frames_;
  double frame_rate_hz_;
};

struct GaussianStats {
  Eigen::VectorXd mean;
  SymMatrix cov;
  std::size_t sample_count;
};

/// Per-dimension spread plus the permutation listing dimensions by
/// descending std (ties by ascending index).
struct SortProfile {
  Eigen::VectorXd std;
  std::vector<Eigen::Index> permutation;
  std::string source_tag;

  Eigen::Index dim() const noexcept { return std.size(); }
};

/// Frame mean and maximum-likelihood (divide by T) covariance. Needs T >= 2.
GaussianStats fit_gaussian(const Eigen::MatrixXd& frames);
GaussianStats fit_gaussian(const EmbeddingSequence& x);

/// Population standard deviation of every dimension over time. Needs T >= 2.
Eigen::VectorXd per_dim_std(const EmbeddingSequence& x);

SortProfile sort_profile(const Eigen::VectorXd& std, std::string source_tag);

/// Throws ValidationError unless `perm` is a bijection on [0, dim).
void check_permutation(const std::vector<Eigen::Index>& perm, Eigen::Index dim);

/// Reorders columns: output column i is input column perm[i]. With
/// `inverse`, input column i goes to output column perm[i], undoing the
/// forward reorder bit-exactly.
Eigen::MatrixXd permute_dims(const Eigen::MatrixXd& frames,
                             const std::vector<Eigen::Index>& perm, bool inverse);
EmbeddingSequence permute_dims(const EmbeddingSequence& x,
                               const std::vector<Eigen::Index>& perm, bool inverse);

/// Stacks sequences along time; all must share D.
EmbeddingSequence concatenate(const std::vector<EmbeddingSequence>& parts);

}  // namespace mklvc
