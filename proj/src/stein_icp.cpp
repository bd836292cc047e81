#include "stein_icp/stein_icp.hpp"

#include "stein_icp/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

namespace stein_icp {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

Eigen::Vector3d wrapped_difference(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
    return {wrap_angle(a[0] - b[0]), wrap_angle(a[1] - b[1]), wrap_angle(a[2] - b[2])};
}

}  // namespace

KernelValue translation_kernel(const Eigen::Vector3d& a, const Eigen::Vector3d& b, double h) {
    const Eigen::Vector3d d = a - b;
    KernelValue k;
    k.value = std::exp(-d.squaredNorm() / h);
    k.gradient = (-2.0 / h) * k.value * d;
    return k;
}

KernelValue rotation_kernel(const Eigen::Vector3d& a, const Eigen::Vector3d& b, double h) {
    // d wrap(x)/dx = 1 away from the branch cut, so the chain rule keeps the RBF form.
    const Eigen::Vector3d d = wrapped_difference(a, b);
    KernelValue k;
    k.value = std::exp(-d.squaredNorm() / h);
    k.gradient = (-2.0 / h) * k.value * d;
    return k;
}

double median_bandwidth(std::vector<double> squared_distances, std::size_t particle_count) {
    if (particle_count < 2 || squared_distances.empty()) return 1.0;
    const std::size_t n = squared_distances.size();
    const auto mid = squared_distances.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(squared_distances.begin(), mid, squared_distances.end());
    double median = *mid;
    if (n % 2 == 0) median = 0.5 * (median + *std::max_element(squared_distances.begin(), mid));
    return std::max(median / std::log(static_cast<double>(particle_count)), 1e-8);
}

std::vector<double> translation_sq_distances(std::span<const Pose6D> particles) {
    std::vector<double> out;
    out.reserve(particles.size() * (particles.size() - 1) / 2);
    for (std::size_t i = 0; i < particles.size(); ++i) {
        for (std::size_t j = i + 1; j < particles.size(); ++j) {
            out.push_back((particles[i].translation() - particles[j].translation()).squaredNorm());
        }
    }
    return out;
}

std::vector<double> rotation_sq_distances(std::span<const Pose6D> particles) {
    std::vector<double> out;
    out.reserve(particles.size() * (particles.size() - 1) / 2);
    for (std::size_t i = 0; i < particles.size(); ++i) {
        for (std::size_t j = i + 1; j < particles.size(); ++j) {
            out.push_back(wrapped_difference(particles[i].angles(), particles[j].angles()).squaredNorm());
        }
    }
    return out;
}

void PriorConfig::validate() const {
    if (kind == Kind::Uniform) return;
    if (!mean.allFinite()) throw InputError("prior mean must be finite");
    if (!(variance.array() > 0.0).all()) throw InputError("prior variances must be > 0");
    if (!(kappa.array() >= 0.0).all()) throw InputError("prior concentrations must be >= 0");
}

Vector6d prior_gradient(const Pose6D& pose, const PriorConfig& prior) {
    Vector6d g = Vector6d::Zero();
    if (prior.kind == PriorConfig::Kind::Uniform) return g;
    const Vector6d theta = pose.vector();
    for (int d = 0; d < 3; ++d) g[d] = -(theta[d] - prior.mean[d]) / prior.variance[d];
    for (int d = 0; d < 3; ++d) g[3 + d] = -prior.kappa[d] * std::sin(theta[3 + d] - prior.mean[3 + d]);
    return g;
}

std::vector<Vector6d> stein_direction(std::span<const Pose6D> particles,
                                      std::span<const Vector6d> likelihood_gradients, const PriorConfig& prior,
                                      double h_trans, double h_rot, const SteinDirectionOptions& options) {
    const std::size_t k = particles.size();
    if (likelihood_gradients.size() != k) {
        throw InputError("stein_direction: " + std::to_string(likelihood_gradients.size()) +
                         " gradients for " + std::to_string(k) + " particles");
    }
    if (!(h_trans > 0.0) || !(h_rot > 0.0)) throw InputError("stein_direction: bandwidths must be > 0");

    std::vector<Vector6d> drive(k);
    for (std::size_t j = 0; j < k; ++j) drive[j] = -likelihood_gradients[j] + prior_gradient(particles[j], prior);

    std::vector<Vector6d> phi(k, Vector6d::Zero());
    for (std::size_t i = 0; i < k; ++i) {
        const Eigen::Vector3d ti = particles[i].translation();
        const Eigen::Vector3d ri = particles[i].angles();
        Eigen::Vector3d sum_t = Eigen::Vector3d::Zero();
        Eigen::Vector3d sum_r = Eigen::Vector3d::Zero();
        for (std::size_t j = 0; j < k; ++j) {
            const KernelValue kt = translation_kernel(particles[j].translation(), ti, h_trans);
            const KernelValue kr = rotation_kernel(particles[j].angles(), ri, h_rot);
            sum_t += drive[j].head<3>() * kt.value;
            sum_r += drive[j].tail<3>() * kr.value;
            if (options.repulsion) {
                sum_t += kt.gradient;
                sum_r += kr.gradient;
            }
        }
        phi[i] << sum_t, sum_r;
        if (options.average) phi[i] /= static_cast<double>(k);
    }
    return phi;
}

std::vector<Pose6D> sample_initial_particles(std::size_t count, const InitRange& range, const PriorConfig& prior,
                                             RandomStream& rng) {
    if (count < 1) throw InputError("particle count must be >= 1");
    if (!range.half_width.allFinite() || (range.half_width.array() < 0.0).any() || !range.center.is_finite()) {
        throw InputError("initial ranges must be finite and non-negative");
    }
    std::vector<Pose6D> out;
    out.reserve(count);
    const Vector6d c = range.center.vector();
    for (std::size_t i = 0; i < count; ++i) {
        Vector6d v;
        if (prior.kind == PriorConfig::Kind::Informed) {
            for (int d = 0; d < 3; ++d) v[d] = prior.mean[d] + std::sqrt(prior.variance[d]) * rng.normal();
            for (int d = 0; d < 3; ++d) v[3 + d] = rng.von_mises(prior.mean[3 + d], prior.kappa[d]);
        } else {
            for (int d = 0; d < 6; ++d) v[d] = rng.uniform(c[d] - range.half_width[d], c[d] + range.half_width[d]);
        }
        out.push_back(Pose6D::from_vector(v).wrapped());
    }
    return out;
}

void SteinConfig::validate() const {
    icp.validate();
    if (particles < 1) throw InputError("particle count must be >= 1");
    if (bandwidth == Bandwidth::Fixed && !(fixed_bandwidth > 0.0)) throw InputError("fixed bandwidth must be > 0");
    if (initial_particles && initial_particles->size() != particles) {
        throw InputError("initial particle list has " + std::to_string(initial_particles->size()) +
                         " entries, expected " + std::to_string(particles));
    }
    if (!init.half_width.allFinite() || (init.half_width.array() < 0.0).any()) {
        throw InputError("initial ranges must be finite and non-negative");
    }
}

SteinResult run_stein_icp(const PointCloud& source, const NeighborIndex& reference, const SteinConfig& config,
                          const PriorConfig& prior) {
    config.validate();
    prior.validate();
    if (source.empty()) throw InputError("run_stein_icp: empty source cloud");
    const auto start = Clock::now();

    const std::size_t k = config.particles;
    std::vector<Pose6D> particles;
    if (config.initial_particles) {
        particles = *config.initial_particles;
        for (auto& p : particles) p = p.wrapped();
    } else {
        RandomStream init_rng(config.icp.seed, 0);
        particles = sample_initial_particles(k, config.init, prior, init_rng);
    }

    const IcpProblem problem{source, reference, config.icp.metric, config.icp.batch_size, config.icp.max_dist};
    std::vector<ParticleWorkspace> ws;
    ws.reserve(k);
    for (std::size_t j = 0; j < k; ++j) ws.emplace_back(source.size(), config.icp.seed, j);

    ThreadPool pool(config.threads);
    std::vector<Vector6d> grads(k, Vector6d::Zero());
    const SteinDirectionOptions dir_options{config.average, config.repulsion};
    SteinResult result;
    if (config.record_trace) result.trace.reserve(config.icp.iterations);

    for (std::size_t it = 0; it < config.icp.iterations; ++it) {
        if (config.likelihood) {
            auto t0 = Clock::now();
            if (config.shared_batch) {
                ws[0].sample(problem);
                for (std::size_t j = 1; j < k; ++j) ws[j].indices = ws[0].indices;
            } else {
                pool.parallel_for(k, [&](std::size_t j) { ws[j].sample(problem); });
            }
            result.times.sampling += seconds_since(t0);

            t0 = Clock::now();
            pool.parallel_for(k, [&](std::size_t j) { ws[j].transform(problem, particles[j]); });
            result.times.transform += seconds_since(t0);

            t0 = Clock::now();
            pool.parallel_for(k, [&](std::size_t j) { ws[j].match(problem); });
            result.times.matching += seconds_since(t0);
        }

        auto t0 = Clock::now();
        if (config.likelihood) {
            pool.parallel_for(k, [&](std::size_t j) { grads[j] = ws[j].gradient(problem, particles[j]); });
        }
        double h_trans = config.fixed_bandwidth;
        double h_rot = config.fixed_bandwidth;
        if (config.bandwidth == Bandwidth::MedianHeuristic) {
            h_trans = median_bandwidth(translation_sq_distances(particles), k);
            h_rot = median_bandwidth(rotation_sq_distances(particles), k);
        }
        const auto phi = stein_direction(particles, grads, prior, h_trans, h_rot, dir_options);
        result.times.gradients += seconds_since(t0);

        t0 = Clock::now();
        pool.parallel_for(k, [&](std::size_t j) {
            particles[j] = apply_step(particles[j], ws[j].adam, -phi[j], config.icp);
        });
        result.times.update += seconds_since(t0);

        if (config.record_trace) result.trace.push_back(particles);
    }

    result.distribution = PoseDistribution::from_samples(std::move(particles));
    result.total_seconds = seconds_since(start);
    return result;
}

SteinResult run_stein_icp(const PointCloud& source, const PointCloud& reference, const SteinConfig& config,
                          const PriorConfig& prior) {
    config.validate();
    const NeighborIndex index(reference);
    return run_stein_icp(source, index, config, prior);
}

}  // namespace stein_icp
