#include "mklvc/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include "mklvc/errors.hpp"

namespace mklvc {

Metric parse_metric(const std::string& name) {
  if (name == "cosine") return Metric::kCosine;
  if (name == "sqeuclidean" || name == "squared-euclidean") return Metric::kSquaredEuclidean;
  throw ValidationError("unknown metric '" + name + "' (expected cosine or sqeuclidean)");
}

std::string metric_name(Metric metric) {
  return metric == Metric::kCosine ? "cosine" : "sqeuclidean";
}

Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                   Metric metric) {
  if (a.cols() != b.cols())
    throw DimensionMismatchError("pairwise_distances", static_cast<std::size_t>(a.cols()),
                                 static_cast<std::size_t>(b.cols()));

  if (metric == Metric::kCosine) {
    auto unit_rows = [](const Eigen::MatrixXd& m) {
      Eigen::MatrixXd out = m;
      for (Eigen::Index i = 0; i < out.rows(); ++i) {
        const double n = out.row(i).norm();
        if (n > 0.0) out.row(i) /= n;
      }
      return out;
    };
    Eigen::MatrixXd sim = unit_rows(a) * unit_rows(b).transpose();
    return (1.0 - sim.array()).matrix();
  }

  const Eigen::VectorXd a2 = a.rowwise().squaredNorm();
  const Eigen::VectorXd b2 = b.rowwise().squaredNorm();
  Eigen::MatrixXd d = -2.0 * a * b.transpose();
  d.colwise() += a2;
  d.rowwise() += b2.transpose();
  return d.cwiseMax(0.0);
}

EmbeddingSequence knn_convert(const EmbeddingSequence& source,
                              const EmbeddingSequence& reference, const KnnConfig& cfg,
                              const SortProfile& profile) {
  const Eigen::Index d = source.dim();
  if (reference.dim() != d)
    throw DimensionMismatchError("reference embeddings", static_cast<std::size_t>(d),
                                 static_cast<std::size_t>(reference.dim()));
  if (profile.dim() != d)
    throw DimensionMismatchError("sort profile", static_cast<std::size_t>(d),
                                 static_cast<std::size_t>(profile.dim()));
  check_permutation(profile.permutation, d);

  const Eigen::Index n_ref = reference.num_frames();
  if (cfg.k < 1 || cfg.k > n_ref) {
    std::ostringstream msg;
    msg << "k = " << cfg.k << " must lie in [1, " << n_ref << "] (reference frame count)";
    throw ValidationError(msg.str());
  }
  const Eigen::Index n_trim = cfg.n_trim.value_or(d);
  if (n_trim < 1 || n_trim > d) {
    std::ostringstream msg;
    msg << "n_trim = " << n_trim << " must lie in [1, " << d << "]";
    throw ValidationError(msg.str());
  }

  std::vector<Eigen::Index> dims(profile.permutation.begin(),
                                 profile.permutation.begin() + n_trim);
  std::sort(dims.begin(), dims.end());
  const Eigen::MatrixXd src_sel = source.frames()(Eigen::all, dims);
  const Eigen::MatrixXd ref_sel = reference.frames()(Eigen::all, dims);
  const Eigen::MatrixXd dist = pairwise_distances(src_sel, ref_sel, cfg.metric);

  const auto k = static_cast<std::size_t>(cfg.k);
  Eigen::MatrixXd out(source.num_frames(), d);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n_ref));
  for (Eigen::Index i = 0; i < source.num_frames(); ++i) {
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [&](Eigen::Index a, Eigen::Index b) {
                        const double da = dist(i, a), db = dist(i, b);
                        return da < db || (da == db && a < b);
                      });
    Eigen::RowVectorXd acc = reference.frames().row(order[0]);
    for (std::size_t j = 1; j < k; ++j) acc += reference.frames().row(order[j]);
    out.row(i) = acc / static_cast<double>(k);
  }
  return EmbeddingSequence(std::move(out), source.frame_rate_hz());
}

namespace {

// Row-wise log-sum-exp of m.
Eigen::VectorXd row_lse(const Eigen::MatrixXd& m) {
  const Eigen::VectorXd mx = m.rowwise().maxCoeff();
  Eigen::VectorXd out(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    out(i) = mx(i) + std::log((m.row(i).array() - mx(i)).exp().sum());
  return out;
}

}  // namespace

TransportPlan sinkhorn_plan(const Eigen::MatrixXd& cost, const SinkhornConfig& cfg,
                            const std::function<void(const SinkhornIterate&)>& on_iteration) {
  if (cost.rows() < 1 || cost.cols() < 1) throw ValidationError("cost matrix is empty");
  if (!cost.allFinite()) throw ValidationError("cost matrix has non-finite entries");
  if (!(cfg.epsilon > 0.0) || !std::isfinite(cfg.epsilon))
    throw ValidationError("epsilon must be positive");
  if (cfg.max_iters < 1) throw ValidationError("max_iters must be positive");
  if (!(cfg.marginal_tol > 0.0)) throw ValidationError("marginal_tol must be positive");

  const Eigen::Index n = cost.rows(), m = cost.cols();
  const double eps = cfg.epsilon;
  const double log_a = -std::log(static_cast<double>(n));
  const double log_b = -std::log(static_cast<double>(m));
  const Eigen::MatrixXd neg_scaled = -cost / eps;  // -C / eps
  const Eigen::MatrixXd neg_scaled_t = neg_scaled.transpose();

  TransportPlan plan;
  plan.row_marginal = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  plan.col_marginal = Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m));

  Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(m);
  Eigen::MatrixXd logp(n, m);

  for (int it = 1; it <= cfg.max_iters; ++it) {
    Eigen::MatrixXd tmp = neg_scaled;
    tmp.rowwise() += (g / eps).transpose();
    f = eps * (log_a - row_lse(tmp).array()).matrix();

    Eigen::MatrixXd tmp_t = neg_scaled_t;
    tmp_t.rowwise() += (f / eps).transpose();
    g = eps * (log_b - row_lse(tmp_t).array()).matrix();

    if (!f.allFinite() || !g.allFinite()) {
      std::ostringstream msg;
      msg << "Sinkhorn potentials became non-finite at iteration " << it << " with epsilon "
          << eps << "; try a larger epsilon";
      throw NumericalError(msg.str());
    }
    if (on_iteration) on_iteration(SinkhornIterate{it, f, g});

    logp = neg_scaled;
    logp.colwise() += f / eps;
    logp.rowwise() += (g / eps).transpose();
    const Eigen::MatrixXd p = logp.array().exp().matrix();
    plan.row_violation = (p.rowwise().sum() - plan.row_marginal).lpNorm<1>();
    plan.col_violation = (p.colwise().sum().transpose() - plan.col_marginal).lpNorm<1>();
    plan.iterations = it;
    if (plan.row_violation < cfg.marginal_tol && plan.col_violation < cfg.marginal_tol) {
      plan.converged = true;
      plan.weights = p;
      return plan;
    }
    if (it == cfg.max_iters) plan.weights = p;
  }

  std::ostringstream msg;
  msg << "Sinkhorn did not converge in " << cfg.max_iters
      << " iterations: marginal violation rows " << plan.row_violation << ", columns "
      << plan.col_violation;
  plan.warning = msg.str();
  return plan;
}

SinkhornConversion sinkhorn_convert(const EmbeddingSequence& source,
                                    const EmbeddingSequence& reference,
                                    const SinkhornConfig& cfg) {
  if (reference.dim() != source.dim())
    throw DimensionMismatchError("reference embeddings", static_cast<std::size_t>(source.dim()),
                                 static_cast<std::size_t>(reference.dim()));

  const Eigen::MatrixXd cost =
      pairwise_distances(source.frames(), reference.frames(), cfg.metric);
  TransportPlan plan = sinkhorn_plan(cost, cfg);

  const Eigen::VectorXd mass = plan.weights.rowwise().sum();
  if ((mass.array() <= 0.0).any())
    throw NumericalError("transport plan has an empty row; try a larger epsilon");
  Eigen::MatrixXd out = plan.weights * reference.frames();
  out.array().colwise() /= mass.array();
  return {EmbeddingSequence(std::move(out), source.frame_rate_hz()), std::move(plan)};
}

}  // namespace mklvc
