#include "stein_icp/evaluation.hpp"

#include "stein_icp/parallel.hpp"

#include <Eigen/Cholesky>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>

namespace stein_icp {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double normal_pdf(double x, double mean, double sd) {
    const double z = (x - mean) / sd;
    return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
}

double simpson(double a, double b, double fa, double fm, double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double fa, double fm,
                        double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = simpson(a, m, fa, flm, fm);
    const double right = simpson(m, b, fm, frm, fb);
    const double diff = left + right - whole;
    if (depth <= 0 || std::abs(diff) <= 15.0 * tol) return left + right + diff / 15.0;
    return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    return adaptive_simpson(f, a, b, fa, fm, fb, simpson(a, b, fa, fm, fb), tol, 48);
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

// Angle of a^T b. Each skew entry is summed from paired products so a == b gives exactly 0.
double relative_rotation_angle(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
    double trace = 0.0;
    Eigen::Vector3d axis = Eigen::Vector3d::Zero();
    for (int k = 0; k < 3; ++k) {
        for (int i = 0; i < 3; ++i) trace += a(k, i) * b(k, i);
        axis[0] += a(k, 2) * b(k, 1) - a(k, 1) * b(k, 2);
        axis[1] += a(k, 0) * b(k, 2) - a(k, 2) * b(k, 0);
        axis[2] += a(k, 1) * b(k, 0) - a(k, 0) * b(k, 1);
    }
    return std::atan2(0.5 * axis.norm(), 0.5 * (trace - 1.0));
}

void validate_trajectory(const TrajectoryEstimate& t) {
    for (const auto& p : t.poses) {
        if (p.row(3) != Eigen::RowVector4d(0, 0, 0, 1)) throw InputError("trajectory pose has invalid bottom row");
    }
}

}  // namespace

McResult mc_ground_truth(const PointCloud& source, const NeighborIndex& reference, const McOptions& options,
                         const IcpConfig& config) {
    config.validate();
    if (options.runs < 2) throw InputError("mc_ground_truth: need at least 2 runs");
    if (!(options.trans_range >= 0.0) || !(options.rot_range >= 0.0)) {
        throw InputError("mc_ground_truth: ranges must be non-negative");
    }
    std::vector<std::optional<Pose6D>> finals(options.runs);
    std::vector<std::string> errors(options.runs);
    ThreadPool pool(options.threads);
    pool.parallel_for(options.runs, [&](std::size_t r) {
        IcpConfig run = config;
        run.seed = splitmix64(config.seed ^ splitmix64(r));
        RandomStream init_rng(run.seed, 0);
        const Vector6d c = options.center.vector();
        Vector6d v;
        for (int d = 0; d < 6; ++d) {
            const double w = d < 3 ? options.trans_range : options.rot_range;
            v[d] = init_rng.uniform(c[d] - w, c[d] + w);
        }
        try {
            finals[r] = run_sgd_icp(source, reference, Pose6D::from_vector(v).wrapped(), run).pose;
        } catch (const NumericalError& e) {
            errors[r] = e.what();
        }
    });
    McResult result;
    std::vector<Pose6D> samples;
    samples.reserve(options.runs);
    for (std::size_t r = 0; r < options.runs; ++r) {
        if (finals[r]) {
            samples.push_back(*finals[r]);
        } else {
            ++result.failures;
            result.failure_messages.push_back("run " + std::to_string(r) + ": " + errors[r]);
        }
    }
    if (2 * samples.size() < options.runs || samples.size() < 2) {
        throw NumericalError("mc_ground_truth: " + std::to_string(result.failures) + " of " +
                             std::to_string(options.runs) + " runs failed");
    }
    result.distribution = PoseDistribution::from_samples(std::move(samples));
    return result;
}

McResult mc_ground_truth(const PointCloud& source, const PointCloud& reference, const McOptions& options,
                         const IcpConfig& config) {
    const NeighborIndex index(reference);
    return mc_ground_truth(source, index, options, config);
}

namespace {

// delta = mu_q - mu_p with angular components already wrapped.
double kl_impl(const Eigen::MatrixXd& cov_p, const Eigen::MatrixXd& cov_q, const Eigen::VectorXd& delta) {
    const auto dim = static_cast<double>(delta.size());
    const Eigen::LLT<Eigen::MatrixXd> lp(cov_p), lq(cov_q);
    if (lp.info() != Eigen::Success || lq.info() != Eigen::Success) {
        throw NumericalError("kl_gaussian: covariance is not positive definite");
    }
    const Eigen::MatrixXd lq_mat = lq.matrixL();
    const Eigen::MatrixXd lp_mat = lp.matrixL();
    const double logdet_p = 2.0 * lp_mat.diagonal().array().log().sum();
    const double logdet_q = 2.0 * lq_mat.diagonal().array().log().sum();
    const double trace = lq.solve(cov_p).trace();
    const double maha = delta.dot(lq.solve(delta));
    return std::max(0.0, 0.5 * (trace + maha - dim + logdet_q - logdet_p));
}

Eigen::VectorXd mean_gap(const FittedGaussian& p, const FittedGaussian& q, int first, int count) {
    Eigen::VectorXd d(count);
    for (int i = 0; i < count; ++i) {
        const int dim = first + i;
        const double gap = q.mean[dim] - p.mean[dim];
        d[i] = is_angular(dim) ? wrap_angle(gap) : gap;
    }
    return d;
}

}  // namespace

double kl_gaussian(const FittedGaussian& p, const FittedGaussian& q) {
    return kl_impl(p.covariance, q.covariance, mean_gap(p, q, 0, 6));
}

double kl_gaussian_block(const FittedGaussian& p, const FittedGaussian& q, int first_dim) {
    if (first_dim != 0 && first_dim != 3) throw InputError("kl_gaussian_block: block must start at 0 or 3");
    return kl_impl(p.covariance.block(first_dim, first_dim, 3, 3), q.covariance.block(first_dim, first_dim, 3, 3),
                   mean_gap(p, q, first_dim, 3));
}

double ovl_1d(double mean_p, double sd_p, double mean_q, double sd_q, double tolerance) {
    if (!(sd_p > 0.0) || !(sd_q > 0.0)) throw InputError("ovl_1d: standard deviations must be > 0");
    const auto f = [&](double x) { return std::min(normal_pdf(x, mean_p, sd_p), normal_pdf(x, mean_q, sd_q)); };

    // Break the line where the integrand changes shape so each Simpson panel sees a smooth piece.
    std::vector<double> cuts;
    for (const double k : {-12.0, -6.0, -3.0, -1.0, 0.0, 1.0, 3.0, 6.0, 12.0}) {
        cuts.push_back(mean_p + k * sd_p);
        cuts.push_back(mean_q + k * sd_q);
    }
    const double a = 1.0 / (sd_p * sd_p) - 1.0 / (sd_q * sd_q);
    const double b = -2.0 * (mean_p / (sd_p * sd_p) - mean_q / (sd_q * sd_q));
    const double c = mean_p * mean_p / (sd_p * sd_p) - mean_q * mean_q / (sd_q * sd_q) - 2.0 * std::log(sd_q / sd_p);
    if (std::abs(a) < 1e-12 * (1.0 / (sd_p * sd_p))) {
        if (b != 0.0) cuts.push_back(-c / b);
    } else {
        const double disc = b * b - 4.0 * a * c;
        if (disc >= 0.0) {
            cuts.push_back((-b + std::sqrt(disc)) / (2.0 * a));
            cuts.push_back((-b - std::sqrt(disc)) / (2.0 * a));
        }
    }
    const double lo = std::min(mean_p - 12.0 * sd_p, mean_q - 12.0 * sd_q);
    const double hi = std::max(mean_p + 12.0 * sd_p, mean_q + 12.0 * sd_q);
    std::erase_if(cuts, [&](double x) { return !(x >= lo && x <= hi); });
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    double total = 0.0;
    const double tol = tolerance / static_cast<double>(cuts.size());
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        if (cuts[i + 1] > cuts[i]) total += integrate(f, cuts[i], cuts[i + 1], tol);
    }
    return std::clamp(total, 0.0, 1.0);
}

Vector6d ovl_per_dimension(const FittedGaussian& p, const FittedGaussian& q) {
    Vector6d out;
    for (int d = 0; d < 6; ++d) {
        const double gap = q.mean[d] - p.mean[d];
        const double mq = p.mean[d] + (is_angular(d) ? wrap_angle(gap) : gap);
        out[d] = ovl_1d(p.mean[d], std::sqrt(p.covariance(d, d)), mq, std::sqrt(q.covariance(d, d)));
    }
    return out;
}

double ovl_coefficient(const FittedGaussian& p, const FittedGaussian& q) { return ovl_per_dimension(p, q).mean(); }

double silverman_bandwidth(std::span<const double> samples, bool periodic) {
    if (samples.size() < 2) throw InputError("silverman_bandwidth: need at least two samples");
    const auto n = static_cast<double>(samples.size());
    std::vector<double> centered(samples.begin(), samples.end());
    double sd = 0.0;
    if (periodic) {
        const double mu = circular_mean(samples);
        for (auto& v : centered) v = wrap_angle(v - mu);
        sd = std::min(circular_std(samples), std::numbers::pi);
    } else {
        double mean = 0.0;
        for (const double v : centered) mean += v;
        mean /= n;
        double ss = 0.0;
        for (const double v : centered) ss += (v - mean) * (v - mean);
        sd = std::sqrt(ss / (n - 1.0));
    }
    std::sort(centered.begin(), centered.end());
    const double iqr = quantile_sorted(centered, 0.75) - quantile_sorted(centered, 0.25);
    double spread = std::min(sd, iqr / 1.34);
    if (!(spread > 0.0)) spread = sd;
    if (!(spread > 0.0)) spread = 1e-3;  // all samples identical
    return 0.9 * spread * std::pow(n, -0.2);
}

KdeCurve kde_1d(std::span<const double> samples, std::optional<double> bandwidth, bool periodic) {
    if (samples.size() < 2) throw InputError("kde_1d: need at least two samples");
    constexpr std::size_t grid_size = 512;
    KdeCurve curve;
    curve.periodic = periodic;
    curve.bandwidth = bandwidth ? *bandwidth : silverman_bandwidth(samples, periodic);
    if (!(curve.bandwidth > 0.0)) throw InputError("kde_1d: bandwidth must be > 0");
    const double h = curve.bandwidth;
    const auto n = static_cast<double>(samples.size());
    curve.grid.resize(grid_size);
    curve.density.assign(grid_size, 0.0);
    if (periodic) {
        const double two_pi = 2.0 * std::numbers::pi;
        const int images = static_cast<int>(std::ceil(8.0 * h / two_pi)) + 1;
        for (std::size_t g = 0; g < grid_size; ++g) {
            curve.grid[g] = -std::numbers::pi + two_pi * static_cast<double>(g) / grid_size;
        }
        for (const double s : samples) {
            const double w = wrap_angle(s);
            for (std::size_t g = 0; g < grid_size; ++g) {
                double acc = 0.0;
                for (int k = -images; k <= images; ++k) acc += normal_pdf(curve.grid[g], w + k * two_pi, h);
                curve.density[g] += acc / n;
            }
        }
    } else {
        const auto [mn, mx] = std::minmax_element(samples.begin(), samples.end());
        const double lo = *mn - 3.0 * h, hi = *mx + 3.0 * h;
        for (std::size_t g = 0; g < grid_size; ++g) {
            curve.grid[g] = lo + (hi - lo) * static_cast<double>(g) / (grid_size - 1);
        }
        for (const double s : samples) {
            for (std::size_t g = 0; g < grid_size; ++g) curve.density[g] += normal_pdf(curve.grid[g], s, h) / n;
        }
    }
    return curve;
}

std::vector<double> find_modes(const KdeCurve& curve, double relative_threshold) {
    std::vector<double> modes;
    const std::size_t n = curve.density.size();
    if (n < 3) return modes;
    const double peak = *std::max_element(curve.density.begin(), curve.density.end());
    const double floor = relative_threshold * peak;
    for (std::size_t i = 0; i < n; ++i) {
        const bool has_left = curve.periodic || i > 0;
        const bool has_right = curve.periodic || i + 1 < n;
        if (!has_left || !has_right) continue;
        const double left = curve.density[(i + n - 1) % n];
        const double right = curve.density[(i + 1) % n];
        const double here = curve.density[i];
        if (here > left && here >= right && here >= floor) modes.push_back(curve.grid[i]);
    }
    return modes;
}

void write_kde_csv(const std::filesystem::path& path, const KdeCurve& curve) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out.precision(12);
    out << "grid,density\n";
    for (std::size_t i = 0; i < curve.grid.size(); ++i) out << curve.grid[i] << ',' << curve.density[i] << '\n';
}

std::vector<RelativeError> relative_pose_error(const TrajectoryEstimate& estimate,
                                               const TrajectoryEstimate& ground_truth, std::size_t delta) {
    if (delta < 1) throw InputError("relative_pose_error: delta must be >= 1");
    if (estimate.poses.size() != ground_truth.poses.size()) {
        throw InputError("relative_pose_error: trajectories have different lengths");
    }
    if (estimate.poses.size() < delta + 1) throw InputError("relative_pose_error: trajectory shorter than delta + 1");
    validate_trajectory(estimate);
    validate_trajectory(ground_truth);
    std::vector<RelativeError> out;
    out.reserve(estimate.poses.size() - delta);
    for (std::size_t i = 0; i + delta < estimate.poses.size(); ++i) {
        const HomogeneousTransform gt_rel = inverse(ground_truth.poses[i]) * ground_truth.poses[i + delta];
        const HomogeneousTransform est_rel = inverse(estimate.poses[i]) * estimate.poses[i + delta];
        // E = gt_rel^-1 * est_rel written out so equal inputs cancel exactly.
        const Eigen::Matrix3d rg_t = gt_rel.topLeftCorner<3, 3>().transpose();
        const Eigen::Vector3d dt = est_rel.topRightCorner<3, 1>() - gt_rel.topRightCorner<3, 1>();
        out.push_back({(rg_t * dt).norm(),
                       relative_rotation_angle(gt_rel.topLeftCorner<3, 3>(), est_rel.topLeftCorner<3, 3>())});
    }
    return out;
}

MetricsReport compare_distributions(const PoseDistribution& estimate, const PoseDistribution& reference) {
    const FittedGaussian p = fit_gaussian(estimate.samples);
    const FittedGaussian q = fit_gaussian(reference.samples);
    MetricsReport r;
    r.kl_6d = kl_gaussian(p, q);
    r.kl_trans = kl_gaussian_block(p, q, 0);
    r.kl_rot = kl_gaussian_block(p, q, 3);
    r.ovl_dims = ovl_per_dimension(p, q);
    r.ovl = r.ovl_dims.mean();
    r.estimate_std = dimension_std(estimate.samples);
    r.reference_std = dimension_std(reference.samples);
    return r;
}

void write_metrics_json(const std::filesystem::path& path, const MetricsReport& report) {
    static constexpr const char* names[] = {"x", "y", "z", "roll", "pitch", "yaw"};
    nlohmann::json j;
    j["kl_6d"] = report.kl_6d;
    j["kl_trans"] = report.kl_trans;
    j["kl_rot"] = report.kl_rot;
    j["ovl"] = report.ovl;
    for (int d = 0; d < 6; ++d) {
        j["dimensions"][names[d]] = {{"ovl", report.ovl_dims[d]},
                                     {"estimate_std", report.estimate_std[d]},
                                     {"reference_std", report.reference_std[d]}};
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << j.dump(2) << '\n';
}

}  // namespace stein_icp
