#pragma once

#include <Eigen/Dense>
#include <vector>

namespace warpkit {

/// Minimum-cost one-to-one assignment on a square cost matrix (Jonker-
/// Volgenant style shortest augmenting paths, O(n^3)). Returns the column
/// assigned to each row. Ties resolve deterministically by column index.
std::vector<int> solve_assignment(const Eigen::MatrixXd& cost);

}  // namespace warpkit
