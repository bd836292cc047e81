#pragma once

#include "stein_icp/correspondence.hpp"
#include "stein_icp/geometry.hpp"
#include "stein_icp/pose_distribution.hpp"
#include "stein_icp/sgd_icp.hpp"
#include "stein_icp/types.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace stein_icp {

/// Poses of consecutive frames in the first frame, with optional 6x6 covariances in
/// tangent coordinates (translation first).
struct TrajectoryEstimate {
    std::vector<HomogeneousTransform> poses;
    std::vector<Matrix6d> covariances;
};

struct McOptions {
    std::size_t runs = 1000;
    double trans_range = 1.0;    // +- meters around the center
    double rot_range = 0.1745;   // +- radians around the center
    Pose6D center;
    std::size_t threads = 1;
};

struct McResult {
    PoseDistribution distribution;
    std::size_t failures = 0;
    std::vector<std::string> failure_messages;
};

/// Monte-Carlo ground truth: independent SGD-ICP runs from uniform random initial poses.
///
/// Run r uses its own seed derived from (config.seed, r), so results do not depend on the
/// thread count. Failed runs are recorded; throws NumericalError when more than half fail.
McResult mc_ground_truth(const PointCloud& source, const PointCloud& reference, const McOptions& options,
                         const IcpConfig& config);
McResult mc_ground_truth(const PointCloud& source, const NeighborIndex& reference, const McOptions& options,
                         const IcpConfig& config);

/// Closed-form KL(p || q) between 6D Gaussians. Angular mean differences are wrapped.
double kl_gaussian(const FittedGaussian& p, const FittedGaussian& q);

/// KL over a 3D block: 0 for translation (x, y, z), 3 for rotation (roll, pitch, yaw).
double kl_gaussian_block(const FittedGaussian& p, const FittedGaussian& q, int first_dim);

/// Overlap integral of two 1D Gaussians by adaptive Simpson quadrature.
double ovl_1d(double mean_p, double sd_p, double mean_q, double sd_q, double tolerance = 1e-6);

/// Per-dimension OVL of the marginals (angular mean gaps wrapped).
Vector6d ovl_per_dimension(const FittedGaussian& p, const FittedGaussian& q);

/// Mean of the six per-dimension overlaps, in [0, 1].
double ovl_coefficient(const FittedGaussian& p, const FittedGaussian& q);

struct KdeCurve {
    std::vector<double> grid;
    std::vector<double> density;
    double bandwidth = 0.0;
    bool periodic = false;
};

/// Silverman's rule 0.9 min(sd, IQR / 1.34) n^(-1/5). Periodic data uses the circular
/// spread about the circular mean.
double silverman_bandwidth(std::span<const double> samples, bool periodic = false);

/// Gaussian KDE on 512 points. Linear data spans [min - 3h, max + 3h]; periodic data
/// uses a wrapped kernel on [-pi, pi).
KdeCurve kde_1d(std::span<const double> samples, std::optional<double> bandwidth = std::nullopt,
                bool periodic = false);

/// Local maxima whose density is at least `relative_threshold` of the curve maximum.
std::vector<double> find_modes(const KdeCurve& curve, double relative_threshold = 0.5);

/// grid,density rows.
void write_kde_csv(const std::filesystem::path& path, const KdeCurve& curve);

struct RelativeError {
    double translation = 0.0;  // meters
    double rotation = 0.0;     // radians
};

/// E = (G_i^-1 G_{i+d})^-1 (T_i^-1 T_{i+d}) for ground truth G and estimate T.
std::vector<RelativeError> relative_pose_error(const TrajectoryEstimate& estimate,
                                               const TrajectoryEstimate& ground_truth, std::size_t delta = 1);

/// KL, OVL and per-dimension statistics of an estimated posterior against a reference.
struct MetricsReport {
    double kl_6d = 0.0;
    double kl_trans = 0.0;
    double kl_rot = 0.0;
    double ovl = 0.0;
    Vector6d ovl_dims = Vector6d::Zero();
    Vector6d estimate_std = Vector6d::Zero();
    Vector6d reference_std = Vector6d::Zero();
};

MetricsReport compare_distributions(const PoseDistribution& estimate, const PoseDistribution& reference);

void write_metrics_json(const std::filesystem::path& path, const MetricsReport& report);

}  // namespace stein_icp
