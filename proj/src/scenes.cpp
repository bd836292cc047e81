#include "stein_icp/scenes.hpp"

#include "stein_icp/random.hpp"
#include "stein_icp/types.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <functional>
#include <numbers>

namespace stein_icp {

namespace {

struct Patch {
    double area = 0.0;
    std::function<Eigen::Vector3d(RandomStream&)> sample;
};

Patch rectangle(const Eigen::Vector3d& origin, const Eigen::Vector3d& u, const Eigen::Vector3d& v) {
    return {u.cross(v).norm(), [=](RandomStream& rng) { return Eigen::Vector3d(origin + rng.uniform01() * u + rng.uniform01() * v); }};
}

Patch cylinder_wall(const Eigen::Vector3d& base, double radius, double height) {
    return {2.0 * std::numbers::pi * radius * height, [=](RandomStream& rng) {
                const double a = rng.uniform(-std::numbers::pi, std::numbers::pi);
                return Eigen::Vector3d(base + Eigen::Vector3d(radius * std::cos(a), radius * std::sin(a), height * rng.uniform01()));
            }};
}

Patch disc(const Eigen::Vector3d& center, double radius) {
    return {std::numbers::pi * radius * radius, [=](RandomStream& rng) {
                const double a = rng.uniform(-std::numbers::pi, std::numbers::pi);
                const double r = radius * std::sqrt(rng.uniform01());
                return Eigen::Vector3d(center + Eigen::Vector3d(r * std::cos(a), r * std::sin(a), 0.0));
            }};
}

// Sides and top of an axis-aligned box standing on z = base.z().
std::vector<Patch> box(const Eigen::Vector3d& base_center, const Eigen::Vector3d& size) {
    const Eigen::Vector3d lo = base_center - Eigen::Vector3d(size.x() / 2, size.y() / 2, 0.0);
    const Eigen::Vector3d ex(size.x(), 0, 0), ey(0, size.y(), 0), ez(0, 0, size.z());
    return {rectangle(lo, ex, ez), rectangle(lo + ey, ex, ez), rectangle(lo, ey, ez), rectangle(lo + ex, ey, ez),
            rectangle(lo + ez, ex, ey)};
}

PointCloud sample_surface(const std::vector<Patch>& patches, std::size_t count, double noise, double scale,
                          RandomStream& rng) {
    double total = 0.0;
    for (const auto& p : patches) total += p.area;
    PointCloud cloud;
    cloud.points.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        double pick = rng.uniform01() * total;
        std::size_t k = 0;
        while (k + 1 < patches.size() && pick >= patches[k].area) pick -= patches[k++].area;
        Eigen::Vector3d p = scale * patches[k].sample(rng);
        if (noise > 0.0) p += noise * Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
        cloud.points.push_back(p);
    }
    return cloud;
}

std::vector<Patch> asymmetric_patches() {
    // Room corner centred near the origin.
    const Eigen::Vector3d o(-2.0, -1.5, 0.0);
    std::vector<Patch> patches{
        rectangle(o, {4.0, 0, 0}, {0, 3.0, 0}),  // floor
        rectangle(o, {4.0, 0, 0}, {0, 0, 1.5}),  // wall along x
        rectangle(o, {0, 3.0, 0}, {0, 0, 1.5}),  // wall along y
        cylinder_wall({-0.8, 0.6, 0.0}, 0.3, 1.0),
    };
    for (auto& p : box({0.8, -0.2, 0.0}, {0.8, 0.5, 0.6})) patches.push_back(std::move(p));
    return patches;
}

PointCloud place(const PointCloud& world, const Pose6D& ground_truth) {
    // Express world-frame points in the source frame: source = T^-1 * world.
    return transform_cloud(world, matrix_to_pose(inverse(pose_to_matrix(ground_truth))));
}

}  // namespace

Pose6D asymmetric_ground_truth() { return {0.3, -0.2, 0.1, 0.05, -0.03, 0.4}; }

Scene make_scene(SceneKind kind, const SceneOptions& options) {
    RandomStream rng(options.seed, 0x5ce7e);
    Scene scene;
    scene.name = scene_name(kind);
    switch (kind) {
        case SceneKind::Asymmetric: {
            const auto patches = asymmetric_patches();
            scene.ground_truth = asymmetric_ground_truth();
            scene.reference = sample_surface(patches, options.reference_points, options.noise, options.scale, rng);
            scene.source = place(sample_surface(patches, options.source_points, options.noise, options.scale, rng), scene.ground_truth);
            scene.modes = {scene.ground_truth};
            break;
        }
        case SceneKind::Ring: {
            const std::vector<Patch> patches{cylinder_wall({0, 0, 0}, 1.5, 1.0), disc({0, 0, 0}, 1.5)};
            scene.ground_truth = {0.0, 0.0, 0.1, 0.0, 0.0, 0.0};
            scene.reference = sample_surface(patches, options.reference_points, options.noise, options.scale, rng);
            scene.source = place(sample_surface(patches, options.source_points, options.noise, options.scale, rng), scene.ground_truth);
            scene.modes = {scene.ground_truth};
            break;
        }
        case SceneKind::Block: {
            const Eigen::Vector3d size(0.8, 1.2, 0.8);
            constexpr double offset = 0.6;
            std::vector<Patch> reference{rectangle({-2.4, -1.5, 0.0}, {4.8, 0, 0}, {0, 3.0, 0})};
            for (auto& p : box({-offset, 0, 0}, size)) reference.push_back(std::move(p));
            for (auto& p : box({offset, 0, 0}, size)) reference.push_back(std::move(p));
            // Source: one box with the floor patch around it, centred on the origin.
            std::vector<Patch> source{rectangle({-0.7, -0.9, 0.0}, {1.4, 0, 0}, {0, 1.8, 0})};
            for (auto& p : box({0, 0, 0}, size)) source.push_back(std::move(p));
            scene.ground_truth = {-offset, 0.0, 0.0, 0.0, 0.0, 0.0};
            scene.reference = sample_surface(reference, options.reference_points, options.noise, options.scale, rng);
            scene.source = sample_surface(source, options.source_points, options.noise, options.scale, rng);
            scene.modes = {{-offset, 0, 0, 0, 0, 0}, {offset, 0, 0, 0, 0, 0}};
            break;
        }
    }
    return scene;
}

std::vector<PointCloud> make_sequence(std::size_t frames, const Pose6D& step, const SceneOptions& options) {
    if (frames < 1) throw InputError("make_sequence: need at least one frame");
    RandomStream rng(options.seed, 0x5e9);
    const auto patches = asymmetric_patches();
    std::vector<PointCloud> out;
    out.reserve(frames);
    HomogeneousTransform pose = HomogeneousTransform::Identity();
    const HomogeneousTransform delta = pose_to_matrix(step);
    for (std::size_t i = 0; i < frames; ++i) {
        const PointCloud world = sample_surface(patches, options.source_points, options.noise, options.scale, rng);
        out.push_back(transform_cloud(world, matrix_to_pose(inverse(pose))));
        pose = compose(pose, delta);
    }
    return out;
}

SceneKind parse_scene_kind(const std::string& name) {
    if (name == "asymmetric") return SceneKind::Asymmetric;
    if (name == "ring") return SceneKind::Ring;
    if (name == "block") return SceneKind::Block;
    throw InputError("unknown scene '" + name + "' (expected asymmetric, ring or block)");
}

std::string scene_name(SceneKind kind) {
    switch (kind) {
        case SceneKind::Asymmetric: return "asymmetric";
        case SceneKind::Ring: return "ring";
        case SceneKind::Block: return "block";
    }
    return "unknown";
}

}  // namespace stein_icp
