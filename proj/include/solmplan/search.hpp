#pragma once

#include <stdexcept>
#include <vector>

#include "solmplan/sdf.hpp"
#include "solmplan/solm.hpp"
#include "solmplan/se2.hpp"

namespace solmplan {

// Planning failures callers are expected to handle (exit code 3 in the CLI).
class PlanningError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SearchWeights {
  double rho_q = 5.0;   // observation-loss weight in the edge cost
  double l_yaw = 0.5;   // [m/rad] yaw-to-length conversion
  double r_safe = 0.3;  // [m]
};

struct GridCell {
  int i = 0, j = 0, k = 0;
};

struct GridPath {
  std::vector<GridCell> cells;
  std::vector<PlanarPose> poses;  // cell centers
  double total_cost = 0.0;
};

// Cost-optimal search over the SOLM grid. Connectivity is the 26-move
// neighborhood (8 in xy, {-1,0,+1} wrapping in theta). Edge cost is
//   step_length * (1 + rho_q * (q_u + q_v) / 2)
// with step_length = sqrt(dx^2 + dy^2 + (l_yaw * dtheta)^2). Ties break on
// the lexicographic cell index, so results do not depend on expansion order.
GridPath search(const SolmGrid& solm, const SdfField& sdf, const PlanarPose& start,
                const PlanarPose& goal, const SearchWeights& weights);

}  // namespace solmplan
