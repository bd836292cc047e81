#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace stein_icp {

struct Neighbor {
    std::uint32_t index = 0;
    double squared_distance = 0.0;
};

/// Exact kd-tree over a fixed set of 3D points.
///
/// Queries are exact and ties are broken by the lowest point index, so results equal
/// a linear scan. The tree is immutable after construction and safe to query from
/// many threads.
class KdTree {
public:
    explicit KdTree(std::span<const Eigen::Vector3d> points, std::size_t leaf_size = 8);

    std::size_t size() const { return points_.size(); }
    const Eigen::Vector3d& point(std::size_t i) const { return points_[i]; }

    Neighbor nearest(const Eigen::Vector3d& query) const;

    /// k nearest points ordered by (distance, index). Returns min(k, size()) entries.
    std::vector<Neighbor> k_nearest(const Eigen::Vector3d& query, std::size_t k) const;

private:
    struct Node {
        // Leaves own [begin, end) of order_; inner nodes split on `axis` at `split`.
        std::uint32_t begin = 0;
        std::uint32_t end = 0;
        std::int32_t left = -1;
        std::int32_t right = -1;
        int axis = -1;
        double split = 0.0;
    };

    std::int32_t build(std::uint32_t begin, std::uint32_t end);
    void search_nearest(std::int32_t node, const Eigen::Vector3d& q, Neighbor& best) const;
    void search_k(std::int32_t node, const Eigen::Vector3d& q, std::size_t k,
                  std::vector<Neighbor>& heap) const;

    std::vector<Eigen::Vector3d> points_;
    std::vector<std::uint32_t> order_;
    std::vector<Node> nodes_;
    std::size_t leaf_size_;
};

}  // namespace stein_icp
