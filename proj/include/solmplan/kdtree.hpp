#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cstddef>
#include <vector>

namespace solmplan {

// Static 3-d kd-tree owning its point array. Built once, queried concurrently
// (queries keep their scratch on the caller's stack).
class KdTree3 {
 public:
  void build(std::vector<Eigen::Vector3d> points) {
    points_ = std::move(points);
    order_.resize(points_.size());
    for (std::size_t i = 0; i < points_.size(); ++i) order_[i] = static_cast<int>(i);
    nodes_.clear();
    root_ = -1;
    nodes_.reserve(points_.size() / kLeafSize * 4 + 4);
    if (!points_.empty()) root_ = build_range(0, static_cast<int>(points_.size()));
  }

  const std::vector<Eigen::Vector3d>& points() const { return points_; }

  bool empty() const { return points_.empty(); }

  // Indices of the k nearest points to q, ascending by distance.
  // Returns fewer than k if the cloud is smaller.
  void knn(const Eigen::Vector3d& q, int k, std::vector<int>& out_idx) const {
    out_idx.clear();
    if (empty() || k <= 0) return;
    Heap heap;
    heap.reserve(k + 1);
    search(root_, q, k, heap);
    std::sort(heap.begin(), heap.end());
    out_idx.reserve(heap.size());
    for (const auto& e : heap) out_idx.push_back(e.second);
  }

 private:
  using Heap = std::vector<std::pair<double, int>>;

  struct Node {
    int left = -1, right = -1;
    int begin = 0, end = 0;  // leaf payload range in order_
    int axis = 0;
    double split = 0.0;
    bool leaf = false;
  };

  static constexpr int kLeafSize = 8;

  int build_range(int begin, int end) {
    Node n;
    if (end - begin <= kLeafSize) {
      n.leaf = true;
      n.begin = begin;
      n.end = end;
      nodes_.push_back(n);
      return static_cast<int>(nodes_.size()) - 1;
    }
    // split the widest axis at the median
    Eigen::Vector3d lo = Eigen::Vector3d::Constant(1e300), hi = Eigen::Vector3d::Constant(-1e300);
    for (int i = begin; i < end; ++i) {
      const auto& p = points_[order_[i]];
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    const int mid = (begin + end) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](int a, int b) { return points_[a][axis] < points_[b][axis]; });
    n.axis = axis;
    n.split = points_[order_[mid]][axis];
    const int self = static_cast<int>(nodes_.size());
    nodes_.push_back(n);
    const int l = build_range(begin, mid);
    const int r = build_range(mid, end);
    nodes_[self].left = l;
    nodes_[self].right = r;
    return self;
  }

  static double worst(const Heap& heap, int k) {
    return static_cast<int>(heap.size()) < k ? 1e300 : heap.front().first;
  }

  void search(int node_id, const Eigen::Vector3d& q, int k, Heap& heap) const {
    const Node& n = nodes_[node_id];
    if (n.leaf) {
      for (int i = n.begin; i < n.end; ++i) {
        const int idx = order_[i];
        const double d2 = (points_[idx] - q).squaredNorm();
        if (d2 < worst(heap, k)) {
          heap.emplace_back(d2, idx);
          std::push_heap(heap.begin(), heap.end());
          if (static_cast<int>(heap.size()) > k) {
            std::pop_heap(heap.begin(), heap.end());
            heap.pop_back();
          }
        }
      }
      return;
    }
    const double delta = q[n.axis] - n.split;
    const int near = delta < 0.0 ? n.left : n.right;
    const int far = delta < 0.0 ? n.right : n.left;
    search(near, q, k, heap);
    if (delta * delta < worst(heap, k)) search(far, q, k, heap);
  }

  std::vector<Eigen::Vector3d> points_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace solmplan
