#pragma once

#include "stein_icp/correspondence.hpp"
#include "stein_icp/geometry.hpp"
#include "stein_icp/point_cloud.hpp"
#include "stein_icp/random.hpp"
#include "stein_icp/types.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace stein_icp {

enum class Metric { PointToPoint, PointToPlane };

/// How the gradient is turned into a parameter step: Adam, or plain SGD (A = I).
enum class Stepper { Adam, Sgd };

struct IcpConfig {
    Metric metric = Metric::PointToPoint;
    std::size_t batch_size = 300;
    double step_size = 0.01;
    std::size_t iterations = 100;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 0;
    std::optional<double> max_dist;
    Stepper stepper = Stepper::Adam;

    /// Throws InputError on out-of-range values.
    void validate() const;
};

/// Mean squared residual over the pairs, recomputed at `pose` from the untransformed
/// source points: point-to-point |R s + u - r|^2, point-to-plane (n^T (R s + u - r))^2.
double residual_cost(const MiniBatch& pairs, const Pose6D& pose, Metric metric);

/// Mini-batch gradient g = (1/m) sum res_i^T d(R s_i + u)/d theta.
///
/// This is the gradient of half the residual cost. For point-to-plane the residual is
/// replaced by n_i (n_i^T res_i).
Vector6d batch_gradients(const MiniBatch& pairs, const Pose6D& pose, Metric metric);

struct AdamState {
    Vector6d first_moment = Vector6d::Zero();
    Vector6d second_moment = Vector6d::Zero();
    std::size_t step = 0;
};

/// Bias-corrected Adam update. Returns the parameter delta -eta * m_hat / (sqrt(v_hat) + eps).
Vector6d adam_step(AdamState& state, const Vector6d& gradient, double step_size, double beta1 = 0.9,
                   double beta2 = 0.999, double epsilon = 1e-8);

/// Applies `config.stepper` to a descent gradient and returns the new pose with wrapped angles.
Pose6D apply_step(const Pose6D& pose, AdamState& state, const Vector6d& gradient, const IcpConfig& config);

/// Wall time per phase of a registration run, in seconds.
struct PhaseTimes {
    double sampling = 0.0;
    double transform = 0.0;
    double matching = 0.0;
    double gradients = 0.0;
    double update = 0.0;

    double sum() const { return sampling + transform + matching + gradients + update; }
    PhaseTimes& operator+=(const PhaseTimes& o);
};

/// Registration inputs shared read-only by every particle or restart.
struct IcpProblem {
    const PointCloud& source;
    const NeighborIndex& index;
    Metric metric = Metric::PointToPoint;
    std::size_t batch_size = 300;
    std::optional<double> max_dist;

    /// Number of likelihood terms N (source size).
    double scale() const { return static_cast<double>(source.size()); }
};

/// Per-particle mutable state for the sample -> transform -> match -> gradient pipeline.
///
/// Particle j of a run with seed s draws batches from RandomStream(s, j + 1); plain
/// SGD-ICP is particle 0.
struct ParticleWorkspace {
    ParticleWorkspace(std::size_t population, std::uint64_t seed, std::uint64_t particle_id);

    RandomStream rng;
    MiniBatchSampler sampler;
    std::vector<std::uint32_t> indices;
    std::vector<Eigen::Vector3d> transformed;
    MiniBatch batch;
    AdamState adam;
    double cost = 0.0;

    void sample(const IcpProblem& problem);
    void transform(const IcpProblem& problem, const Pose6D& pose);
    void match(const IcpProblem& problem);
    /// Returns the likelihood-scale gradient N * g and records the batch cost.
    Vector6d gradient(const IcpProblem& problem, const Pose6D& pose);
};

struct IterationRecord {
    std::size_t iteration = 0;
    double cost = 0.0;  // batch cost before the update
    Pose6D pose;        // pose after the update
};

struct SgdIcpResult {
    Pose6D pose;
    std::vector<IterationRecord> trace;
    PhaseTimes times;
};

/// SGD-ICP: T iterations of sample, transform, match, gradient and step.
///
/// The step consumes N * g, the gradient of the summed squared residual, which is the
/// negative log-likelihood Stein ICP uses; with Adam the scale only matters through eps.
SgdIcpResult run_sgd_icp(const PointCloud& source, const PointCloud& reference, const Pose6D& init,
                         const IcpConfig& config);
SgdIcpResult run_sgd_icp(const PointCloud& source, const NeighborIndex& reference, const Pose6D& init,
                         const IcpConfig& config);

/// CSV with columns iteration,cost,x,y,z,roll,pitch,yaw.
void write_trace_csv(const std::filesystem::path& path, const std::vector<IterationRecord>& trace);

}  // namespace stein_icp
