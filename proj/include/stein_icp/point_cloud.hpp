#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <vector>

namespace stein_icp {

// Ordered 3D point set. When `normals` is non-empty it has one entry per point.
// A zero normal marks a degenerate neighbourhood and is skipped by point-to-plane matching.
struct PointCloud {
    std::vector<Eigen::Vector3d> points;
    std::vector<Eigen::Vector3d> normals;

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
    bool has_normals() const { return !normals.empty(); }
};

}  // namespace stein_icp
