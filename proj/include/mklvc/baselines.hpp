#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>

#include "mklvc/stats.hpp"

namespace mklvc {

enum class Metric { kCosine, kSquaredEuclidean };

Metric parse_metric(const std::string& name);
std::string metric_name(Metric metric);

/// Pairwise frame distances (rows: a, columns: b). Cosine distance is
/// 1 - cos(a_i, b_j), taking cos = 0 when either row is all zeros; squared
/// Euclidean distances are clamped at zero.
Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                   Metric metric);

struct KnnConfig {
  Eigen::Index k = 4;
  // Number of leading profile-sorted dimensions used for distances; unset means D.
  std::optional<Eigen::Index> n_trim;
  Metric metric = Metric::kCosine;
};

/// kNN regression: each source frame becomes the uniform average of its k
/// nearest reference frames. Distances only see the first n_trim
/// dimensions of the profile order (summed in ascending dimension index), the
/// average uses all D. Ties go to the lower reference index.
EmbeddingSequence knn_convert(const EmbeddingSequence& source,
                              const EmbeddingSequence& reference, const KnnConfig& cfg,
                              const SortProfile& profile);

struct SinkhornConfig {
  double epsilon = 1e-2;
  int max_iters = 1000;
  double marginal_tol = 1e-6;
  Metric metric = Metric::kCosine;
};

struct TransportPlan {
  Eigen::MatrixXd weights;
  Eigen::VectorXd row_marginal;
  Eigen::VectorXd col_marginal;
  int iterations = 0;
  bool converged = false;
  // L1 norms of (row sums - row_marginal) and (col sums - col_marginal).
  double row_violation = 0.0;
  double col_violation = 0.0;
  // Empty when converged.
  std::string warning;
};

/// Dual potentials after one full row+column update.
struct SinkhornIterate {
  int iteration;
  const Eigen::VectorXd& f;
  const Eigen::VectorXd& g;
};

/// Entropic OT with uniform marginals, iterated in the log domain on the dual
/// potentials (f, g) so that plan = exp((f_i + g_j - C_ij) / epsilon).
/// Stops once both marginal violations drop below cfg.marginal_tol; hitting
/// max_iters returns the last plan with `converged == false` and a warning.
/// Throws NumericalError if the potentials stop being finite.
TransportPlan sinkhorn_plan(const Eigen::MatrixXd& cost, const SinkhornConfig& cfg,
                            const std::function<void(const SinkhornIterate&)>& on_iteration = {});

struct SinkhornConversion {
  EmbeddingSequence output;
  TransportPlan plan;
};

/// Sinkhorn plan on full-dimension costs, then barycentric projection:
/// out_i = sum_j P_ij ref_j / sum_j P_ij.
SinkhornConversion sinkhorn_convert(const EmbeddingSequence& source,
                                    const EmbeddingSequence& reference,
                                    const SinkhornConfig& cfg);

}  // namespace mklvc
