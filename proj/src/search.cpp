#include "solmplan/search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace solmplan {

namespace {

struct QueueEntry {
  double cost;
  std::size_t idx;
  bool operator>(const QueueEntry& o) const {
    if (cost != o.cost) return cost > o.cost;
    return idx > o.idx;  // lexicographic tie-break
  }
};

}  // namespace

GridPath search(const SolmGrid& solm, const SdfField& sdf, const PlanarPose& start,
                const PlanarPose& goal, const SearchWeights& weights) {
  const SolmGridSpec& s = solm.spec;
  const std::size_t total = static_cast<std::size_t>(s.a) * s.b * s.c;

  auto safe_xy = [&](int i, int j) {
    if (solm.is_obstacle(i, j)) return false;
    const PlanarPose c = solm.cell_center(i, j, 0);
    return sample_sdf(sdf, {c.x, c.y}).d >= weights.r_safe;
  };

  int si, sj, sk, gi, gj, gk;
  if (!solm.pose_to_cell(start, si, sj, sk)) throw PlanningError("start pose outside the SOLM grid");
  if (!solm.pose_to_cell(goal, gi, gj, gk)) throw PlanningError("goal pose outside the SOLM grid");
  if (!safe_xy(si, sj)) throw PlanningError("start cell is occupied or unsafe");
  if (!safe_xy(gi, gj)) throw PlanningError("goal cell is occupied or unsafe");

  const std::size_t start_idx = solm.linear_index(si, sj, sk);
  const std::size_t goal_idx = solm.linear_index(gi, gj, gk);

  std::vector<double> dist(total, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> parent(total, total);
  std::priority_queue<QueueEntry, std::vector<QueueEntry>, std::greater<>> open;
  dist[start_idx] = 0.0;
  open.push({0.0, start_idx});

  while (!open.empty()) {
    const QueueEntry top = open.top();
    open.pop();
    if (top.cost > dist[top.idx]) continue;
    if (top.idx == goal_idx) break;

    const int i = static_cast<int>(top.idx % s.a);
    const int j = static_cast<int>((top.idx / s.a) % s.b);
    const int k = static_cast<int>(top.idx / (static_cast<std::size_t>(s.a) * s.b));
    const double q_u = solm.cell_cost(i, j, k);

    for (int dk = -1; dk <= 1; ++dk) {
      if (s.c == 1 && dk != 0) continue;
      const int nk = ((k + dk) % s.c + s.c) % s.c;
      for (int dj = -1; dj <= 1; ++dj) {
        for (int di = -1; di <= 1; ++di) {
          if (di == 0 && dj == 0 && dk == 0) continue;
          const int ni = i + di, nj = j + dj;
          if (ni < 0 || ni >= s.a || nj < 0 || nj >= s.b) continue;
          if (!safe_xy(ni, nj)) continue;
          const double dx = di * s.rx, dy = dj * s.ry;
          const double dth = dk * s.rtheta();
          const double len =
              std::sqrt(dx * dx + dy * dy + weights.l_yaw * weights.l_yaw * dth * dth);
          const double q_v = solm.cell_cost(ni, nj, nk);
          const double edge = len * (1.0 + weights.rho_q * 0.5 * (q_u + q_v));
          const std::size_t nidx = solm.linear_index(ni, nj, nk);
          const double cand = dist[top.idx] + edge;
          if (cand < dist[nidx] ||
              (cand == dist[nidx] && top.idx < parent[nidx])) {
            dist[nidx] = cand;
            parent[nidx] = top.idx;
            open.push({cand, nidx});
          }
        }
      }
    }
  }

  if (!std::isfinite(dist[goal_idx])) throw PlanningError("no path between start and goal");

  GridPath path;
  path.total_cost = dist[goal_idx];
  std::vector<std::size_t> chain;
  for (std::size_t cur = goal_idx;; cur = parent[cur]) {
    chain.push_back(cur);
    if (cur == start_idx) break;
  }
  std::reverse(chain.begin(), chain.end());
  for (std::size_t idx : chain) {
    GridCell cell;
    cell.i = static_cast<int>(idx % s.a);
    cell.j = static_cast<int>((idx / s.a) % s.b);
    cell.k = static_cast<int>(idx / (static_cast<std::size_t>(s.a) * s.b));
    path.cells.push_back(cell);
    path.poses.push_back(solm.cell_center(cell.i, cell.j, cell.k));
  }
  return path;
}

}  // namespace solmplan
