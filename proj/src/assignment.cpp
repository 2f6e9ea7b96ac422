#include "mklvc/assignment.hpp"

#include <algorithm>
#include <limits>

#include "mklvc/errors.hpp"

namespace mklvc {

Assignment solve_assignment(const Eigen::MatrixXd& cost) {
  const Eigen::Index n = cost.rows();
  const Eigen::Index m = cost.cols();
  if (n < 1) throw ValidationError("assignment problem is empty");
  if (n > m) throw ValidationError("assignment needs at least as many columns as rows");
  if (!cost.allFinite()) throw ValidationError("assignment cost has non-finite entries");

  constexpr double kInf = std::numeric_limits<double>::infinity();
  const auto un = static_cast<std::size_t>(n);
  const auto um = static_cast<std::size_t>(m);

  // 1-based bookkeeping; column 0 is the virtual root of each augmenting tree.
  std::vector<double> u(un + 1, 0.0), v(um + 1, 0.0);
  std::vector<std::size_t> match(um + 1, 0), way(um + 1, 0);
  std::vector<double> slack(um + 1);
  std::vector<char> used(um + 1);

  for (std::size_t row = 1; row <= un; ++row) {
    match[0] = row;
    std::size_t col0 = 0;
    std::fill(slack.begin(), slack.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[col0] = 1;
      const std::size_t r = match[col0];
      double delta = kInf;
      std::size_t next = 0;
      for (std::size_t c = 1; c <= um; ++c) {
        if (used[c]) continue;
        const double reduced = cost(static_cast<Eigen::Index>(r - 1),
                                    static_cast<Eigen::Index>(c - 1)) -
                               u[r] - v[c];
        if (reduced < slack[c]) {
          slack[c] = reduced;
          way[c] = col0;
        }
        if (slack[c] < delta) {
          delta = slack[c];
          next = c;
        }
      }
      for (std::size_t c = 0; c <= um; ++c) {
        if (used[c]) {
          u[match[c]] += delta;
          v[c] -= delta;
        } else {
          slack[c] -= delta;
        }
      }
      col0 = next;
    } while (match[col0] != 0);

    do {
      const std::size_t prev = way[col0];
      match[col0] = match[prev];
      col0 = prev;
    } while (col0 != 0);
  }

  Assignment result;
  result.row_to_col.assign(un, -1);
  for (std::size_t c = 1; c <= um; ++c)
    if (match[c] != 0) result.row_to_col[match[c] - 1] = static_cast<Eigen::Index>(c - 1);

  std::vector<double> picked(un);
  for (std::size_t r = 0; r < un; ++r)
    picked[r] = cost(static_cast<Eigen::Index>(r), result.row_to_col[r]);
  std::sort(picked.begin(), picked.end());
  for (double p : picked) result.cost += p;
  return result;
}

}  // namespace mklvc
