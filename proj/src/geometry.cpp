#include "stein_icp/geometry.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace stein_icp {

bool Pose6D::is_finite() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(z) && std::isfinite(roll) &&
           std::isfinite(pitch) && std::isfinite(yaw);
}

Pose6D Pose6D::wrapped() const {
    return {x, y, z, wrap_angle(roll), wrap_angle(pitch), wrap_angle(yaw)};
}

double wrap_angle(double a) {
    // Values already in range are returned untouched so wrapping is idempotent.
    if (a >= -std::numbers::pi && a < std::numbers::pi) return a;
    double r = std::atan2(std::sin(a), std::cos(a));
    // atan2 returns (-pi, pi]; fold the upper end.
    if (r >= std::numbers::pi) r -= 2.0 * std::numbers::pi;
    return r;
}

namespace {

Eigen::Matrix3d rot_x(double a) {
    const double c = std::cos(a), s = std::sin(a);
    Eigen::Matrix3d m;
    m << 1, 0, 0, 0, c, -s, 0, s, c;
    return m;
}

Eigen::Matrix3d rot_y(double a) {
    const double c = std::cos(a), s = std::sin(a);
    Eigen::Matrix3d m;
    m << c, 0, s, 0, 1, 0, -s, 0, c;
    return m;
}

Eigen::Matrix3d rot_z(double a) {
    const double c = std::cos(a), s = std::sin(a);
    Eigen::Matrix3d m;
    m << c, -s, 0, s, c, 0, 0, 0, 1;
    return m;
}

Eigen::Matrix3d d_rot_x(double a) {
    const double c = std::cos(a), s = std::sin(a);
    Eigen::Matrix3d m;
    m << 0, 0, 0, 0, -s, -c, 0, c, -s;
    return m;
}

Eigen::Matrix3d d_rot_y(double a) {
    const double c = std::cos(a), s = std::sin(a);
    Eigen::Matrix3d m;
    m << -s, 0, c, 0, 0, 0, -c, 0, -s;
    return m;
}

Eigen::Matrix3d d_rot_z(double a) {
    const double c = std::cos(a), s = std::sin(a);
    Eigen::Matrix3d m;
    m << -s, -c, 0, c, -s, 0, 0, 0, 0;
    return m;
}

}  // namespace

RotationMatrix rotation_from_euler(const Pose6D& pose) {
    return rot_z(pose.yaw) * rot_y(pose.pitch) * rot_x(pose.roll);
}

std::array<Eigen::Matrix3d, 3> rotation_partials(const Pose6D& pose) {
    const Eigen::Matrix3d rx = rot_x(pose.roll);
    const Eigen::Matrix3d ry = rot_y(pose.pitch);
    const Eigen::Matrix3d rz = rot_z(pose.yaw);
    return {rz * ry * d_rot_x(pose.roll), rz * d_rot_y(pose.pitch) * rx, d_rot_z(pose.yaw) * ry * rx};
}

PointCloud transform_cloud(const PointCloud& cloud, const Pose6D& pose) {
    if (cloud.empty()) throw InputError("transform_cloud: empty cloud");
    const RotationMatrix rotation = rotation_from_euler(pose);
    const Eigen::Vector3d t = pose.translation();
    PointCloud out;
    out.points.reserve(cloud.size());
    for (const auto& p : cloud.points) out.points.push_back(rotation * p + t);
    out.normals.reserve(cloud.normals.size());
    for (const auto& n : cloud.normals) out.normals.push_back(rotation * n);
    return out;
}

HomogeneousTransform pose_to_matrix(const Pose6D& pose) {
    HomogeneousTransform t = HomogeneousTransform::Identity();
    t.topLeftCorner<3, 3>() = rotation_from_euler(pose);
    t.topRightCorner<3, 1>() = pose.translation();
    return t;
}

Pose6D matrix_to_pose(const HomogeneousTransform& transform) {
    const Eigen::Matrix3d r = transform.topLeftCorner<3, 3>();
    Pose6D pose;
    pose.x = transform(0, 3);
    pose.y = transform(1, 3);
    pose.z = transform(2, 3);
    const double sp = std::clamp(-r(2, 0), -1.0, 1.0);
    pose.pitch = std::asin(sp);
    if (std::abs(sp) > 1.0 - 1e-12) {
        pose.roll = 0.0;
        pose.yaw = std::atan2(-r(0, 1), r(1, 1));
    } else {
        pose.roll = std::atan2(r(2, 1), r(2, 2));
        pose.yaw = std::atan2(r(1, 0), r(0, 0));
    }
    return pose.wrapped();
}

double orthonormality_error(const RotationMatrix& rotation) {
    return (rotation.transpose() * rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
}

RotationMatrix orthonormalize(const RotationMatrix& rotation) {
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(rotation, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d u = svd.matrixU();
    const Eigen::Matrix3d v = svd.matrixV();
    if ((u * v.transpose()).determinant() < 0.0) u.col(2) *= -1.0;
    return u * v.transpose();
}

HomogeneousTransform compose(const HomogeneousTransform& a, const HomogeneousTransform& b) {
    HomogeneousTransform out = a * b;
    out.row(3) << 0, 0, 0, 1;
    if (orthonormality_error(out.topLeftCorner<3, 3>()) > 1e-8) {
        out.topLeftCorner<3, 3>() = orthonormalize(out.topLeftCorner<3, 3>());
    }
    return out;
}

HomogeneousTransform inverse(const HomogeneousTransform& transform) {
    HomogeneousTransform out = HomogeneousTransform::Identity();
    const Eigen::Matrix3d rt = transform.topLeftCorner<3, 3>().transpose();
    out.topLeftCorner<3, 3>() = rt;
    out.topRightCorner<3, 1>() = -rt * transform.topRightCorner<3, 1>();
    return out;
}

Pose6D compose_poses(const Pose6D& a, const Pose6D& b) {
    return matrix_to_pose(compose(pose_to_matrix(a), pose_to_matrix(b)));
}

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
    Eigen::Matrix3d m;
    m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
    return m;
}

Matrix6d adjoint(const HomogeneousTransform& transform) {
    const Eigen::Matrix3d r = transform.topLeftCorner<3, 3>();
    const Eigen::Vector3d t = transform.topRightCorner<3, 1>();
    Matrix6d ad = Matrix6d::Zero();
    ad.topLeftCorner<3, 3>() = r;
    ad.topRightCorner<3, 3>() = skew(t) * r;
    ad.bottomRightCorner<3, 3>() = r;
    return ad;
}

double rotation_angle(const RotationMatrix& rotation) {
    // acos loses precision near 0; use the atan2 form on the skew part.
    const Eigen::Vector3d axis(rotation(2, 1) - rotation(1, 2), rotation(0, 2) - rotation(2, 0),
                               rotation(1, 0) - rotation(0, 1));
    return std::atan2(0.5 * axis.norm(), 0.5 * (rotation.trace() - 1.0));
}

}  // namespace stein_icp
