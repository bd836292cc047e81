#pragma once

#include "stein_icp/correspondence.hpp"
#include "stein_icp/geometry.hpp"
#include "stein_icp/pose_distribution.hpp"
#include "stein_icp/random.hpp"
#include "stein_icp/sgd_icp.hpp"
#include "stein_icp/types.hpp"

#include <Eigen/Core>

#include <optional>
#include <span>
#include <vector>

namespace stein_icp {

/// RBF kernel value and its gradient with respect to the first argument.
struct KernelValue {
    double value = 0.0;
    Eigen::Vector3d gradient = Eigen::Vector3d::Zero();
};

/// k(a, b) = exp(-|a - b|^2 / h).
KernelValue translation_kernel(const Eigen::Vector3d& a, const Eigen::Vector3d& b, double h);

/// k(a, b) = exp(-sum wrap(a_i - b_i)^2 / h), periodic in every component.
KernelValue rotation_kernel(const Eigen::Vector3d& a, const Eigen::Vector3d& b, double h);

/// median(d) / log K, floored at 1e-8; 1 when K = 1.
double median_bandwidth(std::vector<double> squared_distances, std::size_t particle_count);

/// Pairwise squared distances (i < j) of the translation block.
std::vector<double> translation_sq_distances(std::span<const Pose6D> particles);
/// Pairwise squared wrapped distances (i < j) of the rotation block.
std::vector<double> rotation_sq_distances(std::span<const Pose6D> particles);

struct PriorConfig {
    enum class Kind { Uniform, Informed };
    Kind kind = Kind::Uniform;
    Vector6d mean = Vector6d::Zero();
    // Gaussian variances of x, y, z in m^2.
    Eigen::Vector3d variance = Eigen::Vector3d::Ones();
    // von Mises concentrations of roll, pitch, yaw.
    Eigen::Vector3d kappa = Eigen::Vector3d::Zero();

    void validate() const;
};

/// Gradient of the log prior: -(t - mu) / sigma for translation, -kappa sin(a - mu) for angles.
Vector6d prior_gradient(const Pose6D& pose, const PriorConfig& prior);

struct SteinDirectionOptions {
    // Divide the kernel sum by K. Off means the literal sum over particles.
    bool average = true;
    bool repulsion = true;
};

/// phi(theta_i) = sum_j [(-N g_j + grad log p(theta_j)) k(theta_j, theta_i) + grad_{theta_j} k(theta_j, theta_i)]
/// evaluated separately for the translation and rotation blocks.
///
/// `likelihood_gradients[j]` is N * g for particle j.
std::vector<Vector6d> stein_direction(std::span<const Pose6D> particles,
                                      std::span<const Vector6d> likelihood_gradients, const PriorConfig& prior,
                                      double h_trans, double h_rot, const SteinDirectionOptions& options = {});

struct InitRange {
    Pose6D center;
    Vector6d half_width = Vector6d::Zero();
};

/// Uniform draws in center +- half_width, or prior draws when the prior is informed.
std::vector<Pose6D> sample_initial_particles(std::size_t count, const InitRange& range, const PriorConfig& prior,
                                             RandomStream& rng);

enum class Bandwidth { MedianHeuristic, Fixed };

struct SteinConfig {
    IcpConfig icp;
    std::size_t particles = 100;
    Bandwidth bandwidth = Bandwidth::MedianHeuristic;
    double fixed_bandwidth = 1.0;
    InitRange init;
    // Overrides the random initialization when set.
    std::optional<std::vector<Pose6D>> initial_particles;
    bool average = true;
    bool repulsion = true;
    // When false the likelihood term is dropped (kernel dynamics only).
    bool likelihood = true;
    // All particles share one mini-batch per iteration instead of drawing their own.
    bool shared_batch = false;
    std::size_t threads = 1;
    bool record_trace = false;

    void validate() const;
};

struct SteinResult {
    PoseDistribution distribution;
    // Particle poses after every iteration; filled when record_trace is set.
    std::vector<std::vector<Pose6D>> trace;
    PhaseTimes times;
    double total_seconds = 0.0;
};

/// Stein ICP. Each iteration: every particle samples a mini-batch, transforms and matches
/// it and computes N * g; bandwidths come from the median heuristic per block; the Stein
/// direction drives a per-particle Adam (or SGD) step on -phi.
///
/// Per-particle work runs on `config.threads` workers; results do not depend on the
/// thread count.
SteinResult run_stein_icp(const PointCloud& source, const PointCloud& reference, const SteinConfig& config,
                          const PriorConfig& prior = {});
SteinResult run_stein_icp(const PointCloud& source, const NeighborIndex& reference, const SteinConfig& config,
                          const PriorConfig& prior = {});

}  // namespace stein_icp
