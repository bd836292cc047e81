#pragma once

#include "stein_icp/geometry.hpp"
#include "stein_icp/point_cloud.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace stein_icp {

enum class SceneKind {
    // Floor, two walls, a box and a cylinder: every degree of freedom is constrained.
    Asymmetric,
    // Cylindrical wall on a disc floor: yaw is unconstrained.
    Ring,
    // Source holds one box, the reference two identical boxes side by side along x.
    Block,
};

/// Synthetic registration fixture. `ground_truth` maps the source onto the reference:
/// transform_cloud(source, ground_truth) lies on the reference surface. `modes` lists
/// every pose with that property (one entry for unambiguous scenes).
struct Scene {
    std::string name;
    PointCloud source;
    PointCloud reference;
    Pose6D ground_truth;
    std::vector<Pose6D> modes;
};

struct SceneOptions {
    std::size_t source_points = 5000;
    std::size_t reference_points = 5000;
    double noise = 0.003;  // per-coordinate Gaussian noise, meters
    double scale = 1.0;    // multiplies scene geometry (not the ground-truth pose)
    std::uint64_t seed = 1;
};

Scene make_scene(SceneKind kind, const SceneOptions& options = {});

SceneKind parse_scene_kind(const std::string& name);
std::string scene_name(SceneKind kind);

/// Default ground truth of the asymmetric scene: (0.3, -0.2, 0.1, 0.05, -0.03, 0.4).
Pose6D asymmetric_ground_truth();

/// Frames of the asymmetric scene seen from poses that advance by `step` per frame.
/// Frame i is the scene expressed in the frame of pose i, so registering frame i + 1
/// onto frame i recovers `step`.
std::vector<PointCloud> make_sequence(std::size_t frames, const Pose6D& step, const SceneOptions& options = {});

}  // namespace stein_icp
