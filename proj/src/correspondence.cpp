#include "stein_icp/correspondence.hpp"

#include "stein_icp/types.hpp"

#include <cmath>
#include <numeric>
#include <string>
#include <utility>

namespace stein_icp {

NeighborIndex::NeighborIndex(const PointCloud& reference)
    : tree_(reference.empty() ? throw InputError("build_index: empty reference cloud")
                              : std::span<const Eigen::Vector3d>(reference.points)),
      normals_(reference.normals) {}

NeighborIndex build_index(const PointCloud& reference) { return NeighborIndex(reference); }

MiniBatchSampler::MiniBatchSampler(std::size_t population) : scratch_(population) {
    std::iota(scratch_.begin(), scratch_.end(), 0u);
}

void MiniBatchSampler::sample(std::size_t m, RandomStream& rng, std::vector<std::uint32_t>& out) {
    const std::size_t n = scratch_.size();
    if (m < 1 || m > n) {
        throw InputError("sample_minibatch: batch size " + std::to_string(m) + " outside [1, " +
                         std::to_string(n) + "]");
    }
    // Partial Fisher-Yates: the first m slots become a uniform subset whatever the
    // permutation left behind by earlier draws.
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t j = i + rng.uniform_index(n - i);
        std::swap(scratch_[i], scratch_[j]);
    }
    out.assign(scratch_.begin(), scratch_.begin() + static_cast<std::ptrdiff_t>(m));
}

std::vector<std::uint32_t> sample_minibatch(std::size_t population, std::size_t m, RandomStream& rng) {
    MiniBatchSampler sampler(population);
    std::vector<std::uint32_t> out;
    sampler.sample(m, rng, out);
    return out;
}

std::vector<Eigen::Vector3d> transform_points(const PointCloud& source, std::span<const std::uint32_t> indices,
                                              const Pose6D& pose) {
    const RotationMatrix rotation = rotation_from_euler(pose);
    const Eigen::Vector3d t = pose.translation();
    std::vector<Eigen::Vector3d> out;
    out.reserve(indices.size());
    for (const auto i : indices) out.push_back(rotation * source.points[i] + t);
    return out;
}

MiniBatch match_batch(const PointCloud& source, std::span<const std::uint32_t> indices,
                      std::vector<Eigen::Vector3d> transformed, const NeighborIndex& index,
                      const MatchOptions& options) {
    if (indices.empty()) throw InputError("match_batch: empty batch");
    if (transformed.size() != indices.size()) throw InputError("match_batch: batch/point count mismatch");
    if (options.with_normals && !index.has_normals()) {
        throw InputError("point-to-plane matching requires reference normals");
    }
    const double gate = options.max_dist ? *options.max_dist * *options.max_dist : 0.0;

    MiniBatch batch;
    batch.source_indices.reserve(indices.size());
    batch.source_points.reserve(indices.size());
    batch.transformed_points.reserve(indices.size());
    batch.reference_points.reserve(indices.size());
    batch.distances.reserve(indices.size());
    for (std::size_t k = 0; k < indices.size(); ++k) {
        const Neighbor nb = index.nearest(transformed[k]);
        if (options.max_dist && nb.squared_distance > gate) continue;
        if (options.with_normals && index.normal(nb.index).squaredNorm() == 0.0) continue;
        batch.source_indices.push_back(indices[k]);
        batch.source_points.push_back(source.points[indices[k]]);
        batch.transformed_points.push_back(transformed[k]);
        batch.reference_points.push_back(index.point(nb.index));
        if (options.with_normals) batch.reference_normals.push_back(index.normal(nb.index));
        batch.distances.push_back(std::sqrt(nb.squared_distance));
    }
    if (batch.empty()) throw NoCorrespondencesError("match_batch: every pair was rejected");
    return batch;
}

MiniBatch match_batch(const PointCloud& source, std::span<const std::uint32_t> indices, const Pose6D& pose,
                      const NeighborIndex& index, const MatchOptions& options) {
    return match_batch(source, indices, transform_points(source, indices, pose), index, options);
}

}  // namespace stein_icp
