#include "stein_icp/odometry.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <fstream>
#include <numbers>
#include <string>

namespace stein_icp {

namespace {

Eigen::Vector3d vee(const Eigen::Matrix3d& m) { return {m(2, 1), m(0, 2), m(1, 0)}; }

Eigen::Matrix3d curly3(const Eigen::Matrix3d& b) { return -b.trace() * Eigen::Matrix3d::Identity() + b; }

Eigen::Matrix3d curly3(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) { return curly3(a) * curly3(b) + curly3(b * a); }

Matrix6d curly6(const Matrix6d& a) {
    const Eigen::Matrix3d rho_phi = a.topRightCorner<3, 3>();
    Matrix6d out = Matrix6d::Zero();
    out.topLeftCorner<3, 3>() = curly3(Eigen::Matrix3d(a.bottomRightCorner<3, 3>()));
    out.topRightCorner<3, 3>() = curly3(Eigen::Matrix3d(rho_phi + rho_phi.transpose()));
    out.bottomRightCorner<3, 3>() = curly3(Eigen::Matrix3d(a.bottomRightCorner<3, 3>()));
    return out;
}

void require_psd(const Matrix6d& m, const char* what) {
    if (!m.allFinite()) throw InputError(std::string(what) + " has non-finite entries");
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
        throw InputError(std::string(what) + " is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Matrix6d> eig(0.5 * (m + m.transpose()));
    if (eig.eigenvalues().minCoeff() < -1e-10 * scale) {
        throw InputError(std::string(what) + " is not positive semidefinite");
    }
}

}  // namespace

Matrix6d euler_to_tangent_jacobian(const Pose6D& pose) {
    const Eigen::Matrix3d rt = rotation_from_euler(pose).transpose();
    const auto partials = rotation_partials(pose);
    Eigen::Matrix3d e;
    for (int k = 0; k < 3; ++k) e.col(k) = vee(partials[k] * rt);
    Matrix6d j = Matrix6d::Zero();
    j.topLeftCorner<3, 3>().setIdentity();
    j.topRightCorner<3, 3>() = skew(pose.translation()) * e;
    j.bottomRightCorner<3, 3>() = e;
    return j;
}

Matrix6d tangent_covariance(const PoseDistribution& step) {
    const Matrix6d j = euler_to_tangent_jacobian(step.mean);
    const Matrix6d c = j * step.covariance * j.transpose();
    return 0.5 * (c + c.transpose());
}

Matrix6d compound_covariance(const Matrix6d& sigma_acc, const HomogeneousTransform& t_acc,
                             const Matrix6d& sigma_step, CompoundingOrder order) {
    require_psd(sigma_acc, "accumulated covariance");
    require_psd(sigma_step, "step covariance");
    const Matrix6d ad = adjoint(t_acc);
    const Matrix6d s1 = sigma_acc;
    const Matrix6d s2 = ad * sigma_step * ad.transpose();
    Matrix6d out = s1 + s2;
    if (order == CompoundingOrder::Fourth) {
        const Matrix6d a1 = curly6(s1);
        const Matrix6d a2 = curly6(s2);
        const Eigen::Matrix3d s1_rr = s1.topLeftCorner<3, 3>(), s1_rp = s1.topRightCorner<3, 3>(),
                              s1_pp = s1.bottomRightCorner<3, 3>();
        const Eigen::Matrix3d s2_rr = s2.topLeftCorner<3, 3>(), s2_rp = s2.topRightCorner<3, 3>(),
                              s2_pp = s2.bottomRightCorner<3, 3>();
        Matrix6d b = Matrix6d::Zero();
        const Eigen::Matrix3d b_rr = curly3(s1_pp, s2_rr) + curly3(s1_rp.transpose(), s2_rp) +
                                     curly3(s1_rp, s2_rp.transpose()) + curly3(s1_rr, s2_pp);
        const Eigen::Matrix3d b_rp = curly3(s1_pp, s2_rp.transpose()) + curly3(s1_rp.transpose(), s2_pp);
        const Eigen::Matrix3d b_pp = curly3(s1_pp, s2_pp);
        b.topLeftCorner<3, 3>() = b_rr;
        b.topRightCorner<3, 3>() = b_rp;
        b.bottomLeftCorner<3, 3>() = b_rp.transpose();
        b.bottomRightCorner<3, 3>() = b_pp;
        out += (1.0 / 12.0) * (a1 * s2 + s2 * a1.transpose() + a2 * s1 + s1 * a2.transpose()) + 0.25 * b;
    }
    return 0.5 * (out + out.transpose());
}

TrajectoryEstimate compound_poses(std::span<const PoseDistribution> steps, CompoundingOrder order) {
    if (steps.empty()) throw InputError("compound_poses: need at least one step");
    TrajectoryEstimate traj;
    traj.poses.reserve(steps.size() + 1);
    traj.covariances.reserve(steps.size() + 1);
    traj.poses.push_back(HomogeneousTransform::Identity());
    traj.covariances.push_back(Matrix6d::Zero());
    for (const auto& step : steps) {
        const HomogeneousTransform& acc = traj.poses.back();
        traj.covariances.push_back(compound_covariance(traj.covariances.back(), acc, tangent_covariance(step), order));
        traj.poses.push_back(compose(acc, pose_to_matrix(step.mean)));
    }
    return traj;
}

Ellipse confidence_ellipse(const Eigen::Matrix2d& cov2d, double level) {
    if (!(level > 0.0 && level < 1.0)) throw InputError("confidence_ellipse: level must lie in (0, 1)");
    const double scale = std::max(1e-300, cov2d.cwiseAbs().maxCoeff());
    if (!cov2d.allFinite() || std::abs(cov2d(0, 1) - cov2d(1, 0)) > 1e-12 * scale) {
        throw InputError("confidence_ellipse: covariance is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov2d);
    const Eigen::Vector2d ev = eig.eigenvalues();  // ascending
    if (ev[0] < -1e-12 * scale) throw InputError("confidence_ellipse: covariance is not positive semidefinite");
    const double quantile = -2.0 * std::log(1.0 - level);
    Ellipse e;
    e.semi_major = std::sqrt(std::max(ev[1], 0.0) * quantile);
    e.semi_minor = std::sqrt(std::max(ev[0], 0.0) * quantile);
    if (ev[1] - ev[0] <= 1e-12 * scale) return e;  // circle: orientation is arbitrary, report 0
    const Eigen::Vector2d axis = eig.eigenvectors().col(1);
    double angle = std::atan2(axis.y(), axis.x());
    if (angle <= -std::numbers::pi / 2) angle += std::numbers::pi;
    if (angle > std::numbers::pi / 2) angle -= std::numbers::pi;
    e.orientation = angle;
    return e;
}

void write_trajectory_csv(const std::filesystem::path& path, const TrajectoryEstimate& trajectory) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out.precision(17);
    out << "index,x,y,z,roll,pitch,yaw";
    for (int r = 0; r < 6; ++r) {
        for (int c = r; c < 6; ++c) out << ",c" << r << c;
    }
    out << '\n';
    for (std::size_t i = 0; i < trajectory.poses.size(); ++i) {
        const Pose6D p = matrix_to_pose(trajectory.poses[i]);
        out << i << ',' << p.x << ',' << p.y << ',' << p.z << ',' << p.roll << ',' << p.pitch << ',' << p.yaw;
        const Matrix6d cov = i < trajectory.covariances.size() ? trajectory.covariances[i] : Matrix6d::Zero();
        for (int r = 0; r < 6; ++r) {
            for (int c = r; c < 6; ++c) out << ',' << cov(r, c);
        }
        out << '\n';
    }
}

void write_ellipses_csv(const std::filesystem::path& path, const TrajectoryEstimate& trajectory, double level) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out.precision(12);
    out << "index,x,y,semi_major,semi_minor,orientation\n";
    for (std::size_t i = 0; i < trajectory.poses.size() && i < trajectory.covariances.size(); ++i) {
        const Ellipse e = confidence_ellipse(trajectory.covariances[i].topLeftCorner<2, 2>(), level);
        out << i << ',' << trajectory.poses[i](0, 3) << ',' << trajectory.poses[i](1, 3) << ',' << e.semi_major << ','
            << e.semi_minor << ',' << e.orientation << '\n';
    }
}

}  // namespace stein_icp
