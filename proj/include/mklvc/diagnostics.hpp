#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "mklvc/stats.hpp"

namespace mklvc {

/// Picks `count` distinct rows (kept in ascending row order) with an RNG
/// seeded from (seed, rows). Returns the input unchanged when count >= rows.
Eigen::MatrixXd subsample_rows(const Eigen::MatrixXd& points, Eigen::Index count,
                               std::uint64_t seed);

/// Draws `count` samples from N(mean, cov) as mean + cov^{1/2} z.
Eigen::MatrixXd draw_gaussian(const GaussianStats& stats, Eigen::Index count,
                              std::uint64_t seed);

/// Exact empirical Wasserstein-2 distance between two point clouds.
///
/// Both clouds are subsampled to s = min(n, m, subsample) points, the
/// optimal assignment under squared-Euclidean cost is solved exactly, and
/// sqrt(cost / s) is returned. The result does not depend on argument order.
double empirical_w2(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, Eigen::Index subsample,
                    std::uint64_t seed);

struct GaussianityProfile {
  Eigen::Index block_dim = 0;
  Eigen::Index stride = 0;
  std::vector<Eigen::Index> block_start_indices;  // in sorted-dimension space
  std::vector<double> w2_values;                  // W2 to the fitted Gaussian, divided by K
  Eigen::Index sample_size = 0;                   // points per cloud in each assignment
  Eigen::Index mc_samples = 0;
  std::uint64_t seed = 0;
  std::string solver = "exact-assignment";

  double mean() const;
};

inline constexpr Eigen::Index kDefaultProfileStride = 8;
inline constexpr Eigen::Index kDefaultSubsample = 512;

/// Distance of each K-dimensional block of the sorted embedding to a
/// Gaussian with the same mean and covariance. Blocks start every `stride`
/// sorted dimensions (blocks may overlap when stride < K).
GaussianityProfile gaussianity_profile(const EmbeddingSequence& x, Eigen::Index block_dim,
                                       const SortProfile& profile, Eigen::Index subsample,
                                       Eigen::Index mc_samples, std::uint64_t seed,
                                       Eigen::Index stride = kDefaultProfileStride);

struct StdSpectrum {
  Eigen::VectorXd values;  // per-dimension std, descending

  /// Fraction of total variance carried by the leading `count` dimensions.
  double variance_share(Eigen::Index count) const;
};

StdSpectrum std_spectrum(const EmbeddingSequence& x);

}  // namespace mklvc
