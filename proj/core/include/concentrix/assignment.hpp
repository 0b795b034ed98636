#pragma once

#include <vector>

#include <Eigen/Core>

namespace concentrix {

struct Assignment {
  /// row i is matched to column column_of_row[i].
  std::vector<int> column_of_row;
  double cost = 0.0;
};

/// Exact minimum-cost perfect matching on a square cost matrix by shortest
/// augmenting paths with dual potentials (Hungarian / Jonker-Volgenant
/// family), O(n^3). The returned cost is summed in row order.
Assignment solve_assignment(const Eigen::Ref<const Eigen::MatrixXd>& cost);

}  // namespace concentrix
