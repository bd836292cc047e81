// Acceptance checks. Prints one PASS/FAIL line per criterion and exits non-zero when any
// criterion fails.

#include "oracles.hpp"

#include "stein_icp/evaluation.hpp"
#include "stein_icp/odometry.hpp"
#include "stein_icp/parallel.hpp"
#include "stein_icp/scenes.hpp"
#include "stein_icp/sgd_icp.hpp"
#include "stein_icp/stein_icp.hpp"

#include <Eigen/LU>

#include <chrono>
#include <cstdio>
#include <iostream>
#include <map>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <thread>

using namespace stein_icp;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

struct Verdict {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

int g_failures = 0;

void report(int id, const std::string& title, Verdict& v) {
    if (!v.pass) ++g_failures;
    std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << title << "):" << v.detail.str() << std::endl;
}

std::string fmt(const Vector6d& v) {
    std::ostringstream s;
    s.precision(4);
    s << "(";
    for (int d = 0; d < 6; ++d) s << (d ? ", " : "") << v[d];
    s << ")";
    return s.str();
}

MiniBatch random_pairs(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    MiniBatch b;
    const Vector6d truth = oracle::uniform6(rng, 0.5, 0.5);
    const Eigen::Matrix3d r = oracle::euler(truth);
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Vector3d s(u(rng), u(rng), u(rng));
        b.source_points.push_back(s);
        b.reference_points.push_back(r * s + truth.head<3>() + 0.05 * Eigen::Vector3d(u(rng), u(rng), u(rng)));
        b.reference_normals.push_back(Eigen::Vector3d(u(rng), u(rng), u(rng)).normalized());
    }
    b.source_indices.assign(n, 0);
    b.transformed_points = b.source_points;
    b.distances.assign(n, 0.0);
    return b;
}

// ---- shared fixtures ----

constexpr std::size_t kParticles = 100;
constexpr std::size_t kIterations = 100;
constexpr std::uint64_t kSeed = 7;

struct SceneRun {
    Scene scene;
    std::unique_ptr<NeighborIndex> index;
    SteinConfig config;
    SteinResult stein;
    SteinResult collapsed;
    McResult mc;
    double stein_seconds = 0.0;
    double mc_seconds = 0.0;
};

// Stein initial ranges: +-0.1 around identity; the ring spans the full yaw circle and the
// block spans both box positions along x.
SteinConfig stein_config_for(SceneKind kind) {
    SteinConfig c;
    c.particles = kParticles;
    c.icp.iterations = kIterations;
    c.icp.seed = kSeed;
    c.init.half_width = Vector6d::Constant(0.1);
    if (kind == SceneKind::Ring) c.init.half_width[5] = oracle::kPi;
    if (kind == SceneKind::Block) c.init.half_width[0] = 1.0;
    return c;
}

// Monte-Carlo reference: 1000 SGD-ICP restarts from +-1 m / +-0.1745 rad around the mean
// of the scene's modes.
McResult run_mc(const Scene& s, const NeighborIndex& index, double* seconds) {
    McOptions mo;
    mo.runs = 1000;
    mo.trans_range = 1.0;
    mo.rot_range = 0.1745;
    Vector6d center = Vector6d::Zero();
    for (const auto& m : s.modes) center += m.vector();
    mo.center = Pose6D::from_vector(center / static_cast<double>(s.modes.size()));
    mo.threads = resolve_thread_count(0);
    IcpConfig ic;
    ic.iterations = 300;
    ic.seed = 3;
    const auto t0 = Clock::now();
    McResult r = mc_ground_truth(s.source, index, mo, ic);
    *seconds = seconds_since(t0);
    return r;
}

SceneRun& scene_run(SceneKind kind) {
    static std::map<SceneKind, std::unique_ptr<SceneRun>> cache;
    auto& slot = cache[kind];
    if (slot) return *slot;
    slot = std::make_unique<SceneRun>();
    SceneRun& r = *slot;
    r.scene = make_scene(kind);
    r.index = std::make_unique<NeighborIndex>(r.scene.reference);
    r.config = stein_config_for(kind);
    const auto t0 = Clock::now();
    r.stein = run_stein_icp(r.scene.source, *r.index, r.config);
    r.stein_seconds = seconds_since(t0);

    // Collapsed baseline: identical initial particles, no repulsion, one shared batch.
    SteinConfig col = r.config;
    col.repulsion = false;
    col.shared_batch = true;
    col.initial_particles = std::vector<Pose6D>(kParticles, r.config.init.center);
    r.collapsed = run_stein_icp(r.scene.source, *r.index, col);

    r.mc = run_mc(r.scene, *r.index, &r.mc_seconds);
    return r;
}

// ---- criteria ----

void criterion1() {
    Verdict v;
    const auto t0 = Clock::now();
    std::mt19937_64 rng(101);
    double worst = 0.0;
    int instances = 0;
    for (int k = 0; k < 200; ++k) {
        const MiniBatch b = random_pairs(rng, 40);
        const Vector6d pose = oracle::uniform6(rng, 1.0, 1.5);
        for (bool plane : {false, true}) {
            const Vector6d g = batch_gradients(b, Pose6D::from_vector(pose), plane ? Metric::PointToPlane : Metric::PointToPoint);
            const auto half_cost = [&](const Vector6d& x) { return 0.5 * oracle::naive_cost(b, x, plane); };
            const Vector6d fd = oracle::central_gradient(half_cost, pose, 1e-6);
            worst = std::max(worst, (g - fd).cwiseAbs().maxCoeff() / std::max(1.0, fd.cwiseAbs().maxCoeff()));
            ++instances;
        }
    }
    const double secs = seconds_since(t0);
    v.detail << " " << instances << " instances, worst relative error " << worst << ", " << secs << " s";
    v.require(worst < 1e-5, "relative error < 1e-5");
    v.require(secs < 10.0, "runtime < 10 s");
    report(1, "gradient suite", v);
}

void criterion2() {
    Verdict v;
    const Scene s = make_scene(SceneKind::Asymmetric);
    const Pose6D init{0.05, -0.05, 0.02, 0.01, 0.02, -0.03};
    SteinConfig cfg;
    cfg.particles = 1;
    cfg.initial_particles = std::vector<Pose6D>{init};
    cfg.icp.iterations = 100;
    cfg.icp.seed = kSeed;
    cfg.record_trace = true;
    const SteinResult stein = run_stein_icp(s.source, s.reference, cfg);
    const SgdIcpResult sgd = run_sgd_icp(s.source, s.reference, init, cfg.icp);
    std::size_t mismatches = 0;
    for (std::size_t it = 0; it < cfg.icp.iterations; ++it)
        if (!(stein.trace[it][0] == sgd.trace[it].pose)) ++mismatches;
    v.detail << " " << cfg.icp.iterations << " iterations compared, " << mismatches << " differing poses";
    v.require(stein.trace.size() == 100 && sgd.trace.size() == 100 && mismatches == 0, "bit-exact trace");
    report(2, "single-particle reduction", v);
}

void criterion3() {
    Verdict v;
    SceneRun& r = scene_run(SceneKind::Asymmetric);
    const Pose6D truth = r.scene.ground_truth;
    const Pose6D mean = r.stein.distribution.mean;
    const double terr = (mean.translation() - truth.translation()).cwiseAbs().maxCoeff();
    double rerr = 0.0;
    for (int d = 0; d < 3; ++d) rerr = std::max(rerr, std::abs(wrap_angle(mean.angles()[d] - truth.angles()[d])));
    const Vector6d sd = dimension_std(r.stein.distribution.samples);
    v.detail << " " << r.scene.source.size() << " points, mean error " << terr << " m / " << rerr << " rad, std "
             << fmt(sd) << ", " << r.stein_seconds << " s";
    v.require(terr < 0.02, "mean translation within 0.02 m");
    v.require(rerr < 0.02, "mean rotation within 0.02 rad");
    v.require(sd.head<3>().maxCoeff() < 0.01, "translation std < 0.01 m");
    v.require(r.stein_seconds < 60.0, "runtime < 60 s");
    report(3, "known-transform recovery", v);
}

void criterion4() {
    Verdict v;
    SceneRun& r = scene_run(SceneKind::Ring);
    const auto check = [&](const char* tag, const std::vector<Pose6D>& samples) {
        const double yaw_r = circular_resultant_length(column(samples, 5));
        const Vector6d sd = dimension_std(samples);
        const double other = std::max(sd.head<5>().maxCoeff(), 0.0);
        v.detail << " " << tag << ": yaw resultant " << yaw_r << ", max other std " << other << ";";
        v.require(yaw_r < 0.5, std::string(tag) + " yaw resultant < 0.5");
        v.require(other < 0.05, std::string(tag) + " other stds < 0.05");
    };
    check("stein", r.stein.distribution.samples);
    check("mc", r.mc.distribution.samples);
    report(4, "rotational symmetry", v);
}

void criterion5() {
    Verdict v;
    SceneRun& r = scene_run(SceneKind::Block);
    const auto stein_modes = find_modes(kde_1d(column(r.stein.distribution.samples, 0)), 0.5);
    const auto mc_modes = find_modes(kde_1d(column(r.mc.distribution.samples, 0)), 0.5);
    v.detail << " stein x modes";
    for (double m : stein_modes) v.detail << " " << m;
    v.detail << "; mc x modes";
    for (double m : mc_modes) v.detail << " " << m;
    v.require(stein_modes.size() == 2, "exactly 2 Stein modes");
    double worst = 0.0;
    for (double m : stein_modes) {
        double nearest = std::numeric_limits<double>::infinity();
        for (double q : mc_modes) nearest = std::min(nearest, std::abs(m - q));
        worst = std::max(worst, nearest);
    }
    v.detail << "; worst mode gap " << worst;
    v.require(mc_modes.size() == 2 && worst <= 0.05, "modes match MC within 0.05 m");
    report(5, "multi-modality", v);
}

void criterion6() {
    Verdict v;
    for (SceneKind kind : {SceneKind::Asymmetric, SceneKind::Ring, SceneKind::Block}) {
        SceneRun& r = scene_run(kind);
        const MetricsReport s = compare_distributions(r.stein.distribution, r.mc.distribution);
        const MetricsReport c = compare_distributions(r.collapsed.distribution, r.mc.distribution);
        const std::string name = scene_name(kind);
        v.detail << " " << name << ": kl_trans " << s.kl_trans << " vs collapsed " << c.kl_trans << ", kl_rot "
                 << s.kl_rot << " vs collapsed " << c.kl_rot << ", ovl " << s.ovl << ";";
        v.require(2.0 * s.kl_trans <= c.kl_trans, name + " kl_trans factor 2");
        v.require(2.0 * s.kl_rot <= c.kl_rot, name + " kl_rot factor 2");
        if (kind == SceneKind::Asymmetric) v.require(s.ovl >= 0.6, name + " ovl >= 0.6");
    }
    report(6, "distribution quality", v);
}

void criterion7() {
    Verdict v;
    PointCloud cloud;
    for (int i = 0; i < 10; ++i) cloud.points.emplace_back(i * 0.1, (i % 3) * 0.1, (i % 4) * 0.1);
    const NeighborIndex index(cloud);
    int failures = 0, runs = 0;
    for (std::size_t k : {2u, 10u}) {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            SteinConfig cfg;
            cfg.particles = k;
            cfg.likelihood = false;
            cfg.icp.stepper = Stepper::Sgd;
            cfg.icp.step_size = 0.01;
            cfg.icp.iterations = 100;
            cfg.icp.seed = seed;
            cfg.init.half_width = Vector6d::Constant(0.1);
            RandomStream init_rng(seed, 0);
            const auto start = sample_initial_particles(k, cfg.init, PriorConfig{}, init_rng);
            const auto end = run_stein_icp(cloud, index, cfg).distribution.samples;
            const auto min_dist = [](const std::vector<Pose6D>& ps) {
                double best = std::numeric_limits<double>::infinity();
                for (std::size_t i = 0; i < ps.size(); ++i)
                    for (std::size_t j = i + 1; j < ps.size(); ++j) {
                        Vector6d d = ps[i].vector() - ps[j].vector();
                        for (int a = 3; a < 6; ++a) d[a] = wrap_angle(d[a]);
                        best = std::min(best, d.norm());
                    }
                return best;
            };
            ++runs;
            if (!(min_dist(end) > min_dist(start))) ++failures;
        }
    }
    v.detail << " " << runs - failures << "/" << runs << " runs increased the minimum pairwise distance";
    v.require(failures == 0, "every run spreads");
    report(7, "repulsion", v);
}

void criterion8() {
    Verdict v;
    std::mt19937_64 rng(108);
    const Matrix6d c = oracle::random_spd(rng, 0.01, 1.0);
    const FittedGaussian p{oracle::uniform6(rng, 1.0, 1.0), c};
    const double kl = kl_gaussian(p, p);
    const double ovl_self = ovl_coefficient(p, p);
    const double ovl_shift = ovl_1d(0.0, 1.0, 2.0, 1.0);
    TrajectoryEstimate t;
    for (int i = 0; i < 10; ++i) t.poses.push_back(oracle::homogeneous(oracle::uniform6(rng, 2.0, 1.0)));
    double rpe = 0.0;
    for (const auto& e : relative_pose_error(t, t)) rpe = std::max({rpe, e.translation, e.rotation});
    v.detail << " kl(p,p) " << kl << ", ovl(p,p) " << ovl_self << ", ovl(N(0,1),N(2,1)) " << ovl_shift
             << ", max RPE of identical trajectories " << rpe;
    v.require(std::abs(kl) <= 1e-10, "kl(p,p) = 0");
    v.require(std::abs(ovl_self - 1.0) <= 1e-4, "ovl(p,p) = 1");
    v.require(std::abs(ovl_shift - 0.3173) <= 1e-3, "ovl shift = 0.3173");
    v.require(rpe == 0.0, "RPE exactly 0");
    report(8, "metric identities", v);
}

void criterion9() {
    Verdict v;
    std::mt19937_64 rng(109);
    double worst = 0.0;
    for (int chain = 0; chain < 10; ++chain) {
        std::vector<Eigen::Matrix4d> means;
        std::vector<Matrix6d> covs;
        Matrix6d acc = Matrix6d::Zero();
        Eigen::Matrix4d t_acc = Eigen::Matrix4d::Identity();
        for (int i = 0; i < 10; ++i) {
            means.push_back(oracle::homogeneous(oracle::uniform6(rng, 0.5, 0.3)));
            Matrix6d s = oracle::random_spd(rng, 0.1, 1.0);
            s = 0.5 * (s + s.transpose());
            s *= 1e-2 / s.trace();
            covs.push_back(s);
            acc = compound_covariance(acc, t_acc, s);
            t_acc = t_acc * means.back();
        }
        const Eigen::Matrix4d mean_inv = t_acc.inverse();
        Matrix6d mc = Matrix6d::Zero();
        const int n = 100000;
        for (int k = 0; k < n; ++k) {
            Eigen::Matrix4d t = Eigen::Matrix4d::Identity();
            for (int i = 0; i < 10; ++i) t = t * oracle::se3_exp(oracle::gaussian_draw(covs[i], rng)) * means[i];
            const Vector6d xi = oracle::se3_log(t * mean_inv);
            mc += xi * xi.transpose();
        }
        mc /= n;
        worst = std::max(worst, (acc - mc).norm() / mc.norm());
    }
    v.detail << " worst relative Frobenius error over 10 chains " << worst;
    v.require(worst <= 0.10, "within 10%");
    report(9, "covariance compounding", v);
}

void criterion10() {
    Verdict v;
    const Scene s = make_scene(SceneKind::Asymmetric);
    const NeighborIndex index(s.reference);
    SteinConfig cfg = stein_config_for(SceneKind::Asymmetric);
    cfg.threads = 1;
    const SteinResult one = run_stein_icp(s.source, index, cfg);
    cfg.threads = 8;
    const SteinResult eight = run_stein_icp(s.source, index, cfg);
    const double speedup = one.total_seconds / eight.total_seconds;
    const bool identical = one.distribution.samples == eight.distribution.samples;
    v.detail << " " << std::thread::hardware_concurrency() << " hardware threads, 1 worker " << one.total_seconds
             << " s, 8 workers " << eight.total_seconds << " s, speedup " << speedup
             << (identical ? ", identical outputs" : ", outputs differ");
    v.require(identical, "identical outputs");
    v.require(speedup >= 3.0, "speedup >= 3x");
    report(10, "parallel scaling", v);
}

}  // namespace

int main() {
    std::cout.precision(4);
    criterion1();
    criterion2();
    criterion3();
    criterion4();
    criterion5();
    criterion6();
    criterion7();
    criterion8();
    criterion9();
    criterion10();
    std::cout << (g_failures == 0 ? "all criteria passed" : std::to_string(g_failures) + " criteria failed") << std::endl;
    return g_failures == 0 ? 0 : 1;
}
