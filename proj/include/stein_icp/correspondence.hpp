#pragma once

#include "stein_icp/geometry.hpp"
#include "stein_icp/kdtree.hpp"
#include "stein_icp/point_cloud.hpp"
#include "stein_icp/random.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace stein_icp {

/// Exact nearest-neighbour index over the reference cloud, carrying its normals.
class NeighborIndex {
public:
    explicit NeighborIndex(const PointCloud& reference);

    std::size_t size() const { return tree_.size(); }
    bool has_normals() const { return !normals_.empty(); }
    const Eigen::Vector3d& point(std::size_t i) const { return tree_.point(i); }
    const Eigen::Vector3d& normal(std::size_t i) const { return normals_[i]; }

    Neighbor nearest(const Eigen::Vector3d& query) const { return tree_.nearest(query); }

private:
    KdTree tree_;
    std::vector<Eigen::Vector3d> normals_;
};

NeighborIndex build_index(const PointCloud& reference);

/// Matched pairs for one mini-batch. All vectors have the same length; reference
/// normals are filled only when `with_normals` was requested.
struct MiniBatch {
    std::vector<std::uint32_t> source_indices;
    std::vector<Eigen::Vector3d> source_points;       // untransformed s_i
    std::vector<Eigen::Vector3d> transformed_points;  // R s_i + u
    std::vector<Eigen::Vector3d> reference_points;    // matched r_i
    std::vector<Eigen::Vector3d> reference_normals;
    std::vector<double> distances;

    std::size_t size() const { return source_points.size(); }
    bool empty() const { return source_points.empty(); }
};

/// Draws distinct indices from [0, population) without replacement.
///
/// Keeps a scratch permutation between draws so each batch costs O(m).
class MiniBatchSampler {
public:
    explicit MiniBatchSampler(std::size_t population);

    std::size_t population() const { return scratch_.size(); }
    void sample(std::size_t m, RandomStream& rng, std::vector<std::uint32_t>& out);

private:
    std::vector<std::uint32_t> scratch_;
};

std::vector<std::uint32_t> sample_minibatch(std::size_t population, std::size_t m, RandomStream& rng);

struct MatchOptions {
    std::optional<double> max_dist;
    // Point-to-plane: keep only pairs whose reference normal is non-zero.
    bool with_normals = false;
};

/// Applies the pose to the selected source points.
std::vector<Eigen::Vector3d> transform_points(const PointCloud& source, std::span<const std::uint32_t> indices,
                                              const Pose6D& pose);

/// Pairs every transformed point with its exact nearest reference point.
///
/// Throws NoCorrespondencesError when filtering leaves no pair, InputError when normals
/// are requested but the reference has none.
MiniBatch match_batch(const PointCloud& source, std::span<const std::uint32_t> indices,
                      std::vector<Eigen::Vector3d> transformed, const NeighborIndex& index,
                      const MatchOptions& options = {});

/// Convenience form that transforms the batch by `pose` first.
MiniBatch match_batch(const PointCloud& source, std::span<const std::uint32_t> indices, const Pose6D& pose,
                      const NeighborIndex& index, const MatchOptions& options = {});

}  // namespace stein_icp
