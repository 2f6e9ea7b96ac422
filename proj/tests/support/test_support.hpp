#pragma once

// Generators and independent oracles shared by the unit and acceptance
// suites. Nothing here calls into the code paths it is used to check.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace mklvc::testing {

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng,
                                     double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = n(rng);
  return m;
}

/// M^T M / dim + floor * I: symmetric positive definite with moderate conditioning.
inline Eigen::MatrixXd random_spd(Eigen::Index dim, std::mt19937_64& rng, double floor = 0.1) {
  const Eigen::MatrixXd m = random_matrix(dim, dim, rng);
  Eigen::MatrixXd s = m.transpose() * m / static_cast<double>(dim);
  s.diagonal().array() += floor;
  return 0.5 * (s + s.transpose());
}

/// Samples from N(mean, cov) through a Cholesky factor.
inline Eigen::MatrixXd sample_gaussian(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                                       Eigen::Index count, std::mt19937_64& rng) {
  const Eigen::MatrixXd l = cov.llt().matrixL();
  Eigen::MatrixXd z = random_matrix(count, mean.size(), rng);
  Eigen::MatrixXd out = z * l.transpose();
  out.rowwise() += mean.transpose();
  return out;
}

inline Eigen::VectorXd sample_mean(const Eigen::MatrixXd& x) {
  return x.colwise().mean().transpose();
}

inline Eigen::MatrixXd sample_cov(const Eigen::MatrixXd& x) {
  const Eigen::MatrixXd c = x.rowwise() - x.colwise().mean();
  return c.transpose() * c / static_cast<double>(x.rows());
}

inline double rel_frobenius(const Eigen::MatrixXd& got, const Eigen::MatrixXd& want) {
  return (got - want).norm() / want.norm();
}

/// Values exactly representable in float32, so EMBF round trips are lossless.
inline Eigen::MatrixXd float_valued(Eigen::MatrixXd m) {
  return m.unaryExpr([](double v) { return static_cast<double>(static_cast<float>(v)); });
}

/// Minimum assignment cost by enumerating every permutation (n <= 8).
inline double brute_force_assignment(const Eigen::MatrixXd& cost) {
  std::vector<int> perm(static_cast<std::size_t>(cost.rows()));
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (std::size_t i = 0; i < perm.size(); ++i) c += cost(static_cast<Eigen::Index>(i), perm[i]);
    best = std::min(best, c);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

/// Assignment cost via successive shortest paths with Bellman-Ford on the
/// residual bipartite graph: a deliberately different algorithm from the
/// library's potential-based Hungarian solver.
inline double min_cost_flow_assignment(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  // Nodes: 0 source, 1..n rows, n+1..2n columns, 2n+1 sink.
  const int nodes = 2 * n + 2, source = 0, sink = 2 * n + 1;
  struct Edge {
    int to, rev;
    int cap;
    double cost;
  };
  std::vector<std::vector<Edge>> g(static_cast<std::size_t>(nodes));
  auto add = [&](int u, int v, double c) {
    g[u].push_back({v, static_cast<int>(g[v].size()), 1, c});
    g[v].push_back({u, static_cast<int>(g[u].size()) - 1, 0, -c});
  };
  for (int i = 0; i < n; ++i) add(source, 1 + i, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) add(1 + i, n + 1 + j, cost(i, j));
  for (int j = 0; j < n; ++j) add(n + 1 + j, sink, 0.0);

  double total = 0.0;
  for (int flow = 0; flow < n; ++flow) {
    std::vector<double> dist(static_cast<std::size_t>(nodes), std::numeric_limits<double>::infinity());
    std::vector<int> prev_node(static_cast<std::size_t>(nodes), -1), prev_edge(static_cast<std::size_t>(nodes), -1);
    dist[source] = 0.0;
    for (int round = 0; round < nodes; ++round) {
      bool changed = false;
      for (int u = 0; u < nodes; ++u) {
        if (dist[u] == std::numeric_limits<double>::infinity()) continue;
        for (int e = 0; e < static_cast<int>(g[u].size()); ++e) {
          const Edge& ed = g[u][e];
          if (ed.cap > 0 && dist[u] + ed.cost < dist[ed.to] - 1e-15) {
            dist[ed.to] = dist[u] + ed.cost;
            prev_node[ed.to] = u;
            prev_edge[ed.to] = e;
            changed = true;
          }
        }
      }
      if (!changed) break;
    }
    for (int v = sink; v != source; v = prev_node[v]) {
      Edge& ed = g[prev_node[v]][prev_edge[v]];
      ed.cap -= 1;
      g[v][ed.rev].cap += 1;
    }
    total += dist[sink];
  }
  return total;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("mklvc-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace mklvc::testing
