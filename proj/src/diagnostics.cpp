#include "mklvc/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "mklvc/assignment.hpp"
#include "mklvc/errors.hpp"
#include "mklvc/linalg.hpp"

namespace mklvc {

namespace {

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

bool lexicographically_less(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      if (a(i, j) != b(i, j)) return a(i, j) < b(i, j);
  return false;
}

Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  Eigen::MatrixXd out(x.rows(), y.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < y.rows(); ++j) out(i, j) = (x.row(i) - y.row(j)).squaredNorm();
  return out;
}

}  // namespace

Eigen::MatrixXd subsample_rows(const Eigen::MatrixXd& points, Eigen::Index count,
                               std::uint64_t seed) {
  const Eigen::Index n = points.rows();
  if (count < 1) throw ValidationError("subsample size must be positive");
  if (count >= n) return points;

  auto rng = make_rng(seed, static_cast<std::uint64_t>(n));
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  for (Eigen::Index i = 0; i < count; ++i) {
    std::uniform_int_distribution<Eigen::Index> pick(i, n - 1);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
  }
  idx.resize(static_cast<std::size_t>(count));
  std::sort(idx.begin(), idx.end());
  return points(idx, Eigen::all);
}

Eigen::MatrixXd draw_gaussian(const GaussianStats& stats, Eigen::Index count,
                              std::uint64_t seed) {
  if (count < 1) throw ValidationError("sample count must be positive");
  const Eigen::Index k = stats.mean.size();
  auto rng = make_rng(seed, 0x9a55u);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd z(count, k);
  for (Eigen::Index i = 0; i < count; ++i)
    for (Eigen::Index j = 0; j < k; ++j) z(i, j) = normal(rng);

  const SymMatrix root = sym_sqrt(stats.cov);
  Eigen::MatrixXd out = z * root.matrix();
  out.rowwise() += stats.mean.transpose();
  return out;
}

double empirical_w2(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, Eigen::Index subsample,
                    std::uint64_t seed) {
  if (x.rows() < 1 || y.rows() < 1) throw ValidationError("empirical_w2 needs non-empty point sets");
  if (x.cols() != y.cols())
    throw DimensionMismatchError("empirical_w2", static_cast<std::size_t>(x.cols()),
                                 static_cast<std::size_t>(y.cols()));
  if (subsample < 1) throw ValidationError("subsample size must be positive");

  const Eigen::Index s = std::min({x.rows(), y.rows(), subsample});
  Eigen::MatrixXd xs = subsample_rows(x, s, seed);
  Eigen::MatrixXd ys = subsample_rows(y, s, seed);
  // Fixed argument order for the solver makes the result symmetric bit-for-bit.
  if (lexicographically_less(ys, xs)) std::swap(xs, ys);

  const Assignment best = solve_assignment(squared_distances(xs, ys));
  return std::sqrt(std::max(best.cost, 0.0) / static_cast<double>(s));
}

double GaussianityProfile::mean() const {
  if (w2_values.empty()) return 0.0;
  return std::accumulate(w2_values.begin(), w2_values.end(), 0.0) /
         static_cast<double>(w2_values.size());
}

GaussianityProfile gaussianity_profile(const EmbeddingSequence& x, Eigen::Index block_dim,
                                       const SortProfile& profile, Eigen::Index subsample,
                                       Eigen::Index mc_samples, std::uint64_t seed,
                                       Eigen::Index stride) {
  const Eigen::Index d = x.dim();
  if (block_dim < 1 || d % block_dim != 0)
    throw InvalidBlockDimError(static_cast<std::size_t>(std::max<Eigen::Index>(block_dim, 0)),
                               static_cast<std::size_t>(d));
  if (profile.dim() != d)
    throw DimensionMismatchError("sort profile", static_cast<std::size_t>(d),
                                 static_cast<std::size_t>(profile.dim()));
  if (x.num_frames() < block_dim + 1)
    throw InsufficientSamplesError("gaussianity_profile", static_cast<std::size_t>(block_dim + 1),
                                   static_cast<std::size_t>(x.num_frames()));
  if (stride < 1) throw ValidationError("stride must be positive");
  if (subsample < 1 || mc_samples < 1)
    throw ValidationError("subsample and mc_samples must be positive");

  const Eigen::MatrixXd sorted = permute_dims(x.frames(), profile.permutation, false);

  GaussianityProfile out;
  out.block_dim = block_dim;
  out.stride = stride;
  out.sample_size = std::min({x.num_frames(), mc_samples, subsample});
  out.mc_samples = mc_samples;
  out.seed = seed;

  for (Eigen::Index start = 0; start + block_dim <= d; start += stride) {
    const Eigen::MatrixXd block = sorted.middleCols(start, block_dim);
    const GaussianStats fitted = fit_gaussian(block);
    const auto block_seed = seed ^ (0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(start + 1));
    const Eigen::MatrixXd synthetic = draw_gaussian(fitted, mc_samples, block_seed);
    const double w2 = empirical_w2(block, synthetic, subsample, block_seed);
    out.block_start_indices.push_back(start);
    out.w2_values.push_back(w2 / static_cast<double>(block_dim));
  }
  return out;
}

double StdSpectrum::variance_share(Eigen::Index count) const {
  const double total = values.squaredNorm();
  if (total <= 0.0) return 0.0;
  const Eigen::Index n = std::clamp<Eigen::Index>(count, 0, values.size());
  return values.head(n).squaredNorm() / total;
}

StdSpectrum std_spectrum(const EmbeddingSequence& x) {
  Eigen::VectorXd std = per_dim_std(x);
  std::sort(std.begin(), std.end(), std::greater<>());
  return {std::move(std)};
}

}  // namespace mklvc
