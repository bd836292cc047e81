#include "stein_icp/kdtree.hpp"

#include "stein_icp/types.hpp"

#include <algorithm>
#include <limits>

namespace stein_icp {

namespace {

bool closer(const Neighbor& a, const Neighbor& b) {
    return a.squared_distance < b.squared_distance ||
           (a.squared_distance == b.squared_distance && a.index < b.index);
}

}  // namespace

KdTree::KdTree(std::span<const Eigen::Vector3d> points, std::size_t leaf_size)
    : points_(points.begin(), points.end()), leaf_size_(std::max<std::size_t>(leaf_size, 1)) {
    if (points_.empty()) throw InputError("KdTree: empty point set");
    order_.resize(points_.size());
    for (std::uint32_t i = 0; i < order_.size(); ++i) order_[i] = i;
    nodes_.reserve(2 * points_.size() / leaf_size_ + 1);
    build(0, static_cast<std::uint32_t>(order_.size()));
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back({begin, end, -1, -1, -1, 0.0});
    if (end - begin <= leaf_size_) return id;

    Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
    Eigen::Vector3d hi = -lo;
    for (auto i = begin; i < end; ++i) {
        lo = lo.cwiseMin(points_[order_[i]]);
        hi = hi.cwiseMax(points_[order_[i]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    if (hi[axis] - lo[axis] <= 0.0) return id;  // all points coincide

    const std::uint32_t mid = begin + (end - begin) / 2;
    // Stable tie order keeps the build deterministic for a fixed input order.
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) {
                         const double pa = points_[a][axis], pb = points_[b][axis];
                         return pa < pb || (pa == pb && a < b);
                     });
    const double split = points_[order_[mid]][axis];
    const std::int32_t left = build(begin, mid);
    const std::int32_t right = build(mid, end);
    Node& node = nodes_[id];
    node.axis = axis;
    node.split = split;
    node.left = left;
    node.right = right;
    return id;
}

void KdTree::search_nearest(std::int32_t id, const Eigen::Vector3d& q, Neighbor& best) const {
    const Node& node = nodes_[id];
    if (node.axis < 0) {
        for (auto i = node.begin; i < node.end; ++i) {
            const Neighbor cand{order_[i], (points_[order_[i]] - q).squaredNorm()};
            if (closer(cand, best)) best = cand;
        }
        return;
    }
    // Left holds coordinates <= split, right holds coordinates >= split.
    const double diff = q[node.axis] - node.split;
    const std::int32_t near = diff <= 0.0 ? node.left : node.right;
    const std::int32_t far = diff <= 0.0 ? node.right : node.left;
    search_nearest(near, q, best);
    // Equal-distance candidates may sit across the plane, so only prune strictly.
    if (diff * diff <= best.squared_distance) search_nearest(far, q, best);
}

Neighbor KdTree::nearest(const Eigen::Vector3d& query) const {
    Neighbor best{std::numeric_limits<std::uint32_t>::max(), std::numeric_limits<double>::infinity()};
    search_nearest(0, query, best);
    return best;
}

void KdTree::search_k(std::int32_t id, const Eigen::Vector3d& q, std::size_t k,
                      std::vector<Neighbor>& heap) const {
    const Node& node = nodes_[id];
    if (node.axis < 0) {
        for (auto i = node.begin; i < node.end; ++i) {
            const Neighbor cand{order_[i], (points_[order_[i]] - q).squaredNorm()};
            if (heap.size() < k) {
                heap.push_back(cand);
                std::push_heap(heap.begin(), heap.end(), closer);
            } else if (closer(cand, heap.front())) {
                std::pop_heap(heap.begin(), heap.end(), closer);
                heap.back() = cand;
                std::push_heap(heap.begin(), heap.end(), closer);
            }
        }
        return;
    }
    const double diff = q[node.axis] - node.split;
    const std::int32_t near = diff <= 0.0 ? node.left : node.right;
    const std::int32_t far = diff <= 0.0 ? node.right : node.left;
    search_k(near, q, k, heap);
    if (heap.size() < k || diff * diff <= heap.front().squared_distance) search_k(far, q, k, heap);
}

std::vector<Neighbor> KdTree::k_nearest(const Eigen::Vector3d& query, std::size_t k) const {
    std::vector<Neighbor> heap;
    k = std::min(k, points_.size());
    if (k == 0) return heap;
    heap.reserve(k + 1);
    search_k(0, query, k, heap);
    std::sort_heap(heap.begin(), heap.end(), closer);
    return heap;
}

}  // namespace stein_icp
