#pragma once

#include <Eigen/Dense>
#include <vector>

namespace mklvc {

struct Assignment {
  std::vector<Eigen::Index> row_to_col;
  double cost = 0.0;
};

/// Exact minimum-cost assignment of every row to a distinct column
/// (rows <= cols) by shortest augmenting paths with dual potentials, O(n^2 m).
/// `cost` is the sum of the selected entries accumulated in ascending order.
Assignment solve_assignment(const Eigen::MatrixXd& cost);

}  // namespace mklvc
