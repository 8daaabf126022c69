#include "warpkit/assignment.hpp"

#include <limits>

#include "warpkit/errors.hpp"

namespace warpkit {

std::vector<int> solve_assignment(const Eigen::MatrixXd& cost) {
  const int n = int(cost.rows());
  if (cost.cols() != n) throw DimensionMismatch("assignment cost matrix must be square");
  if (n == 0) return {};

  const double inf = std::numeric_limits<double>::infinity();
  // 1-based arrays with a virtual row/column 0, the usual formulation.
  std::vector<double> u(size_t(n) + 1, 0.0), v(size_t(n) + 1, 0.0);
  std::vector<int> way(size_t(n) + 1, 0), match(size_t(n) + 1, 0);

  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(size_t(n) + 1, inf);
    std::vector<char> used(size_t(n) + 1, 0);
    do {
      used[size_t(j0)] = 1;
      const int i0 = match[size_t(j0)];
      double delta = inf;
      int j1 = -1;
      for (int j = 1; j <= n; ++j) {
        if (used[size_t(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[size_t(i0)] - v[size_t(j)];
        if (cur < minv[size_t(j)]) {
          minv[size_t(j)] = cur;
          way[size_t(j)] = j0;
        }
        if (minv[size_t(j)] < delta) {
          delta = minv[size_t(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[size_t(j)]) {
          u[size_t(match[size_t(j)])] += delta;
          v[size_t(j)] -= delta;
        } else {
          minv[size_t(j)] -= delta;
        }
      }
      j0 = j1;
    } while (match[size_t(j0)] != 0);
    do {
      const int j1 = way[size_t(j0)];
      match[size_t(j0)] = match[size_t(j1)];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> row_to_col(size_t(n), -1);
  for (int j = 1; j <= n; ++j)
    if (match[size_t(j)] > 0) row_to_col[size_t(match[size_t(j)] - 1)] = j - 1;
  return row_to_col;
}

}  // namespace warpkit
