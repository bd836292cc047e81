#include "stein_icp/sgd_icp.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <string>

namespace stein_icp {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

void require_normals(const MiniBatch& pairs, Metric metric) {
    if (metric == Metric::PointToPlane && pairs.reference_normals.size() != pairs.size()) {
        throw InputError("point-to-plane metric requires reference normals");
    }
}

}  // namespace

void IcpConfig::validate() const {
    if (batch_size < 1) throw InputError("batch size must be >= 1");
    if (iterations < 1) throw InputError("iterations must be >= 1");
    if (!(step_size > 0.0) || !std::isfinite(step_size)) throw InputError("step size must be > 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw InputError("beta1 must lie in [0, 1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw InputError("beta2 must lie in [0, 1)");
    if (!(epsilon > 0.0)) throw InputError("epsilon must be > 0");
    if (max_dist && !(*max_dist >= 0.0)) throw InputError("max_dist must be >= 0");
}

double residual_cost(const MiniBatch& pairs, const Pose6D& pose, Metric metric) {
    if (pairs.empty()) throw InputError("residual_cost: empty batch");
    require_normals(pairs, metric);
    const RotationMatrix rotation = rotation_from_euler(pose);
    const Eigen::Vector3d u = pose.translation();
    double total = 0.0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const Eigen::Vector3d res = rotation * pairs.source_points[i] + u - pairs.reference_points[i];
        if (metric == Metric::PointToPoint) {
            total += res.squaredNorm();
        } else {
            const double d = pairs.reference_normals[i].dot(res);
            total += d * d;
        }
    }
    return total / static_cast<double>(pairs.size());
}

Vector6d batch_gradients(const MiniBatch& pairs, const Pose6D& pose, Metric metric) {
    if (pairs.empty()) throw InputError("batch_gradients: empty batch");
    require_normals(pairs, metric);
    const RotationMatrix rotation = rotation_from_euler(pose);
    const auto partials = rotation_partials(pose);
    const Eigen::Vector3d u = pose.translation();
    Eigen::Vector3d g_trans = Eigen::Vector3d::Zero();
    Eigen::Vector3d g_rot = Eigen::Vector3d::Zero();
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const Eigen::Vector3d& s = pairs.source_points[i];
        Eigen::Vector3d res = rotation * s + u - pairs.reference_points[i];
        if (metric == Metric::PointToPlane) {
            const Eigen::Vector3d& n = pairs.reference_normals[i];
            res = n * n.dot(res);
        }
        g_trans += res;
        for (int k = 0; k < 3; ++k) g_rot[k] += res.dot(partials[k] * s);
    }
    const double inv_m = 1.0 / static_cast<double>(pairs.size());
    Vector6d g;
    g << g_trans * inv_m, g_rot * inv_m;
    return g;
}

Vector6d adam_step(AdamState& state, const Vector6d& gradient, double step_size, double beta1, double beta2,
                   double epsilon) {
    ++state.step;
    state.first_moment = beta1 * state.first_moment + (1.0 - beta1) * gradient;
    state.second_moment = beta2 * state.second_moment + (1.0 - beta2) * gradient.cwiseProduct(gradient);
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(beta1, t);
    const double c2 = 1.0 - std::pow(beta2, t);
    Vector6d delta;
    for (int i = 0; i < 6; ++i) {
        const double m_hat = state.first_moment[i] / c1;
        const double v_hat = state.second_moment[i] / c2;
        delta[i] = -step_size * m_hat / (std::sqrt(v_hat) + epsilon);
    }
    return delta;
}

Pose6D apply_step(const Pose6D& pose, AdamState& state, const Vector6d& gradient, const IcpConfig& config) {
    const Vector6d delta = config.stepper == Stepper::Adam
                               ? adam_step(state, gradient, config.step_size, config.beta1, config.beta2,
                                           config.epsilon)
                               : Vector6d(-config.step_size * gradient);
    const Pose6D next = Pose6D::from_vector(pose.vector() + delta).wrapped();
    if (!next.is_finite()) throw NumericalError("pose update produced a non-finite parameter");
    return next;
}

PhaseTimes& PhaseTimes::operator+=(const PhaseTimes& o) {
    sampling += o.sampling;
    transform += o.transform;
    matching += o.matching;
    gradients += o.gradients;
    update += o.update;
    return *this;
}

ParticleWorkspace::ParticleWorkspace(std::size_t population, std::uint64_t seed, std::uint64_t particle_id)
    : rng(seed, particle_id + 1), sampler(population) {}

void ParticleWorkspace::sample(const IcpProblem& problem) {
    sampler.sample(std::min(problem.batch_size, problem.source.size()), rng, indices);
}

void ParticleWorkspace::transform(const IcpProblem& problem, const Pose6D& pose) {
    transformed = transform_points(problem.source, indices, pose);
}

void ParticleWorkspace::match(const IcpProblem& problem) {
    MatchOptions options;
    options.max_dist = problem.max_dist;
    options.with_normals = problem.metric == Metric::PointToPlane;
    batch = match_batch(problem.source, indices, std::move(transformed), problem.index, options);
    transformed.clear();
}

Vector6d ParticleWorkspace::gradient(const IcpProblem& problem, const Pose6D& pose) {
    cost = residual_cost(batch, pose, problem.metric);
    const Vector6d g = batch_gradients(batch, pose, problem.metric);
    return problem.scale() * g;
}

SgdIcpResult run_sgd_icp(const PointCloud& source, const NeighborIndex& reference, const Pose6D& init,
                         const IcpConfig& config) {
    config.validate();
    if (source.empty()) throw InputError("run_sgd_icp: empty source cloud");
    if (!init.is_finite()) throw InputError("run_sgd_icp: non-finite initial pose");

    const IcpProblem problem{source, reference, config.metric, config.batch_size, config.max_dist};
    ParticleWorkspace ws(source.size(), config.seed, 0);
    SgdIcpResult result;
    result.pose = init.wrapped();
    result.trace.reserve(config.iterations);
    for (std::size_t it = 0; it < config.iterations; ++it) {
        auto t0 = Clock::now();
        ws.sample(problem);
        result.times.sampling += seconds_since(t0);

        t0 = Clock::now();
        ws.transform(problem, result.pose);
        result.times.transform += seconds_since(t0);

        t0 = Clock::now();
        ws.match(problem);
        result.times.matching += seconds_since(t0);

        t0 = Clock::now();
        const Vector6d grad = ws.gradient(problem, result.pose);
        result.times.gradients += seconds_since(t0);

        t0 = Clock::now();
        result.pose = apply_step(result.pose, ws.adam, grad, config);
        result.times.update += seconds_since(t0);

        result.trace.push_back({it, ws.cost, result.pose});
    }
    return result;
}

SgdIcpResult run_sgd_icp(const PointCloud& source, const PointCloud& reference, const Pose6D& init,
                         const IcpConfig& config) {
    config.validate();
    const NeighborIndex index(reference);
    return run_sgd_icp(source, index, init, config);
}

void write_trace_csv(const std::filesystem::path& path, const std::vector<IterationRecord>& trace) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out.precision(17);
    out << "iteration,cost,x,y,z,roll,pitch,yaw\n";
    for (const auto& r : trace) {
        out << r.iteration << ',' << r.cost << ',' << r.pose.x << ',' << r.pose.y << ',' << r.pose.z << ','
            << r.pose.roll << ',' << r.pose.pitch << ',' << r.pose.yaw << '\n';
    }
}

}  // namespace stein_icp
