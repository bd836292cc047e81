#pragma once

#include "stein_icp/point_cloud.hpp"
#include "stein_icp/types.hpp"

#include <Eigen/Core>

#include <array>

namespace stein_icp {

/// Six-parameter pose {x, y, z, roll, pitch, yaw}. Translation in meters, angles in radians.
///
/// Rotations follow the ZYX convention: R = Rz(yaw) * Ry(pitch) * Rx(roll).
struct Pose6D {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
    double roll = 0.0;
    double pitch = 0.0;
    double yaw = 0.0;

    static Pose6D from_vector(const Vector6d& v) { return {v[0], v[1], v[2], v[3], v[4], v[5]}; }
    Vector6d vector() const {
        Vector6d v;
        v << x, y, z, roll, pitch, yaw;
        return v;
    }
    Eigen::Vector3d translation() const { return {x, y, z}; }
    Eigen::Vector3d angles() const { return {roll, pitch, yaw}; }

    bool is_finite() const;
    // Copy with the three angles wrapped to [-pi, pi).
    Pose6D wrapped() const;

    // Exact componentwise equality.
    bool operator==(const Pose6D&) const = default;
};

using RotationMatrix = Eigen::Matrix3d;
using HomogeneousTransform = Eigen::Matrix4d;

/// Wraps an angle to [-pi, pi).
double wrap_angle(double a);

RotationMatrix rotation_from_euler(const Pose6D& pose);

/// dR/droll, dR/dpitch, dR/dyaw of the ZYX composition.
std::array<Eigen::Matrix3d, 3> rotation_partials(const Pose6D& pose);

/// Applies R*p + u to every point; normals are rotated only.
PointCloud transform_cloud(const PointCloud& cloud, const Pose6D& pose);

HomogeneousTransform pose_to_matrix(const Pose6D& pose);

/// Inverse of pose_to_matrix. At pitch = +-pi/2 the roll is fixed to 0 and the
/// remaining rotation is assigned to yaw.
Pose6D matrix_to_pose(const HomogeneousTransform& transform);

/// Matrix product a*b. The rotation block is re-orthonormalized when drift exceeds 1e-8.
HomogeneousTransform compose(const HomogeneousTransform& a, const HomogeneousTransform& b);

HomogeneousTransform inverse(const HomogeneousTransform& transform);

/// Pose of the composed transform pose_to_matrix(a) * pose_to_matrix(b).
Pose6D compose_poses(const Pose6D& a, const Pose6D& b);

/// Largest absolute entry of R^T R - I.
double orthonormality_error(const RotationMatrix& rotation);

/// Nearest rotation in the Frobenius sense (polar decomposition via SVD).
RotationMatrix orthonormalize(const RotationMatrix& rotation);

Eigen::Matrix3d skew(const Eigen::Vector3d& v);

/// SE(3) adjoint for twists ordered (translation, rotation).
Matrix6d adjoint(const HomogeneousTransform& transform);

/// Rotation angle of R in [0, pi].
double rotation_angle(const RotationMatrix& rotation);

}  // namespace stein_icp
