#pragma once

#include "stein_icp/evaluation.hpp"
#include "stein_icp/geometry.hpp"
#include "stein_icp/pose_distribution.hpp"
#include "stein_icp/types.hpp"

#include <filesystem>
#include <span>

namespace stein_icp {

// Covariances here are over left tangent perturbations T = exp(xi^) T_mean, with
// xi = (rho, phi): translation first, matching the pose parameter order.

enum class CompoundingOrder { Second, Fourth };

/// Jacobian mapping Euler-parameter perturbations at `pose` to tangent perturbations.
Matrix6d euler_to_tangent_jacobian(const Pose6D& pose);

/// Step covariance in tangent coordinates from a pose distribution's Euler covariance.
Matrix6d tangent_covariance(const PoseDistribution& step);

/// Covariance of T_acc * T_step given the accumulated covariance, the accumulated mean
/// transform and the step covariance. Second order is sigma_acc + Ad sigma_step Ad^T;
/// fourth order adds the Barfoot-Furgale correction terms. The result is symmetrized.
Matrix6d compound_covariance(const Matrix6d& sigma_acc, const HomogeneousTransform& t_acc,
                             const Matrix6d& sigma_step, CompoundingOrder order = CompoundingOrder::Second);

/// Chains per-step mean transforms (circular means for angles) starting from identity.
/// The trajectory has steps + 1 poses; covariances are compounded alongside.
TrajectoryEstimate compound_poses(std::span<const PoseDistribution> steps,
                                  CompoundingOrder order = CompoundingOrder::Second);

struct Ellipse {
    double semi_major = 0.0;
    double semi_minor = 0.0;
    double orientation = 0.0;  // major axis angle from +x, in (-pi/2, pi/2]
};

/// Confidence ellipse of a 2D Gaussian: eigen-axes scaled by the chi-square(2) quantile
/// -2 ln(1 - level).
Ellipse confidence_ellipse(const Eigen::Matrix2d& cov2d, double level = 0.95);

/// index,x,y,z,roll,pitch,yaw followed by the 21 upper-triangle covariance entries.
void write_trajectory_csv(const std::filesystem::path& path, const TrajectoryEstimate& trajectory);

/// index,x,y,semi_major,semi_minor,orientation for the ground-plane (x, y) marginal.
void write_ellipses_csv(const std::filesystem::path& path, const TrajectoryEstimate& trajectory,
                        double level = 0.95);

}  // namespace stein_icp
