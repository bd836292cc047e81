#include "stein_icp/cli.hpp"

#include "stein_icp/cloud_io.hpp"
#include "stein_icp/evaluation.hpp"
#include "stein_icp/odometry.hpp"
#include "stein_icp/parallel.hpp"
#include "stein_icp/pose_distribution.hpp"
#include "stein_icp/scenes.hpp"
#include "stein_icp/sgd_icp.hpp"
#include "stein_icp/stein_icp.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace stein_icp {
namespace {

namespace fs = std::filesystem;

constexpr const char* kDimNames[] = {"x", "y", "z", "roll", "pitch", "yaw"};

// Options shared by register, odometry and bench.
struct RunOptions {
    std::string source;
    std::string reference;
    std::string method = "stein";
    Metric metric = Metric::PointToPoint;
    Stepper stepper = Stepper::Adam;
    std::size_t particles = 100;
    std::size_t iterations = 100;
    std::size_t batch = 300;
    double step = 0.01;
    std::uint64_t seed = 0;
    std::optional<double> max_dist;
    std::vector<double> init_center;
    double init_trans = 0.1;
    double init_rot = 0.1;
    std::vector<double> init_half_width;
    std::optional<double> bandwidth;
    bool sum = false;
    bool no_repulsion = false;
    bool shared_batch = false;
    std::string prior = "uniform";
    std::vector<double> prior_mean;
    std::vector<double> prior_variance;
    std::vector<double> prior_kappa;
    std::size_t normal_neighbors = 10;
};

void add_algorithm_options(CLI::App& app, RunOptions& o) {
    const std::map<std::string, Metric> metrics{{"point", Metric::PointToPoint}, {"plane", Metric::PointToPlane}};
    const std::map<std::string, Stepper> steppers{{"adam", Stepper::Adam}, {"sgd", Stepper::Sgd}};
    app.add_option("--metric", o.metric, "Error metric: point or plane")
        ->transform(CLI::CheckedTransformer(metrics, CLI::ignore_case));
    app.add_option("--stepper", o.stepper, "Step rule: adam or sgd")
        ->transform(CLI::CheckedTransformer(steppers, CLI::ignore_case));
    app.add_option("--particles", o.particles, "Number of particles K")->capture_default_str();
    app.add_option("--iterations", o.iterations, "Iterations T")->capture_default_str();
    app.add_option("--batch", o.batch, "Mini-batch size m")->capture_default_str();
    app.add_option("--step", o.step, "Step size")->capture_default_str();
    app.add_option("--seed", o.seed, "Random seed")->capture_default_str();
    app.add_option("--max-dist", o.max_dist, "Correspondence distance gate in meters");
    app.add_option("--init-center", o.init_center, "Initial pose x y z roll pitch yaw")->expected(6);
    app.add_option("--init-trans", o.init_trans, "Initial translation half-width")->capture_default_str();
    app.add_option("--init-rot", o.init_rot, "Initial rotation half-width")->capture_default_str();
    app.add_option("--init-half-width", o.init_half_width, "Per-dimension initial half-widths")->expected(6);
    app.add_option("--bandwidth", o.bandwidth, "Fixed kernel bandwidth (default: median heuristic)");
    app.add_flag("--sum", o.sum, "Sum the Stein direction over particles instead of averaging");
    app.add_flag("--no-repulsion", o.no_repulsion, "Drop the kernel gradient term");
    app.add_flag("--shared-batch", o.shared_batch, "One mini-batch per iteration for all particles");
    app.add_option("--prior", o.prior, "Prior: uniform or informed")
        ->check(CLI::IsMember({"uniform", "informed"}))
        ->capture_default_str();
    app.add_option("--prior-mean", o.prior_mean, "Prior mean x y z roll pitch yaw")->expected(6);
    app.add_option("--prior-variance", o.prior_variance, "Gaussian translation prior variances")->expected(3);
    app.add_option("--prior-kappa", o.prior_kappa, "von Mises rotation prior concentrations")->expected(3);
    app.add_option("--normal-neighbors", o.normal_neighbors, "k for normal estimation (point-to-plane)")
        ->capture_default_str();
}

Pose6D pose_from(const std::vector<double>& v) {
    if (v.empty()) return {};
    return Pose6D::from_vector(Eigen::Map<const Vector6d>(v.data()));
}

IcpConfig icp_config(const RunOptions& o) {
    IcpConfig c;
    c.metric = o.metric;
    c.stepper = o.stepper;
    c.batch_size = o.batch;
    c.step_size = o.step;
    c.iterations = o.iterations;
    c.seed = o.seed;
    c.max_dist = o.max_dist;
    c.validate();
    return c;
}

PriorConfig prior_config(const RunOptions& o) {
    PriorConfig p;
    if (o.prior == "informed") {
        p.kind = PriorConfig::Kind::Informed;
        if (!o.prior_mean.empty()) p.mean = Eigen::Map<const Vector6d>(o.prior_mean.data());
        if (!o.prior_variance.empty()) p.variance = Eigen::Map<const Eigen::Vector3d>(o.prior_variance.data());
        if (!o.prior_kappa.empty()) p.kappa = Eigen::Map<const Eigen::Vector3d>(o.prior_kappa.data());
    }
    p.validate();
    return p;
}

SteinConfig stein_config(const RunOptions& o, std::size_t threads) {
    SteinConfig c;
    c.icp = icp_config(o);
    c.particles = o.particles;
    if (o.bandwidth) {
        c.bandwidth = Bandwidth::Fixed;
        c.fixed_bandwidth = *o.bandwidth;
    }
    c.init.center = pose_from(o.init_center);
    if (o.init_half_width.empty()) {
        c.init.half_width << o.init_trans, o.init_trans, o.init_trans, o.init_rot, o.init_rot, o.init_rot;
    } else {
        c.init.half_width = Eigen::Map<const Vector6d>(o.init_half_width.data());
    }
    c.average = !o.sum;
    c.repulsion = !o.no_repulsion;
    c.shared_batch = o.shared_batch;
    c.threads = threads;
    c.validate();
    return c;
}

// Point-to-plane needs reference normals; estimate them when the file has none.
PointCloud prepare_reference(PointCloud reference, const RunOptions& o) {
    if (o.metric == Metric::PointToPlane && !reference.has_normals()) {
        reference = estimate_normals(reference, o.normal_neighbors);
    }
    return reference;
}

void print_pose(std::ostream& out, const std::string& label, const Pose6D& pose) {
    const Vector6d v = pose.vector();
    out << label;
    for (int d = 0; d < 6; ++d) out << ' ' << kDimNames[d] << '=' << std::setprecision(6) << v[d];
    out << '\n';
}

void ensure_directory(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

void write_json(const fs::path& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << j.dump(2) << '\n';
}

nlohmann::json pose_json(const Pose6D& pose) {
    const Vector6d v = pose.vector();
    return std::vector<double>(v.data(), v.data() + 6);
}

// ---- register ----

struct RegisterOptions {
    RunOptions run;
    std::string out_dir = ".";
    bool trace = false;
};

int cmd_register(const RegisterOptions& o, std::size_t threads, std::ostream& out) {
    const SteinConfig config = stein_config(o.run, threads);
    const PriorConfig prior = prior_config(o.run);
    const PointCloud source = load_cloud(o.run.source);
    const PointCloud reference = prepare_reference(load_cloud(o.run.reference), o.run);
    ensure_directory(o.out_dir);
    const fs::path dir(o.out_dir);

    PoseDistribution dist;
    if (o.run.method == "sgd") {
        const SgdIcpResult r = run_sgd_icp(source, reference, config.init.center, config.icp);
        dist = PoseDistribution::from_samples({r.pose});
        if (o.trace) write_trace_csv(dir / "trace.csv", r.trace);
    } else {
        SteinConfig c = config;
        c.record_trace = o.trace;
        const SteinResult r = run_stein_icp(source, reference, c, prior);
        dist = r.distribution;
        if (o.trace) {
            // One row per particle per iteration.
            std::ofstream t(dir / "trace.csv");
            if (!t) throw IoError("cannot write '" + (dir / "trace.csv").string() + "'");
            t << "iteration,particle,x,y,z,roll,pitch,yaw\n" << std::setprecision(17);
            for (std::size_t it = 0; it < r.trace.size(); ++it) {
                for (std::size_t k = 0; k < r.trace[it].size(); ++k) {
                    const Vector6d v = r.trace[it][k].vector();
                    t << it << ',' << k;
                    for (int d = 0; d < 6; ++d) t << ',' << v[d];
                    t << '\n';
                }
            }
        }
    }
    write_samples_csv(dir / "samples.csv", dist.samples);
    write_summary_json(dir / "summary.json", dist);
    print_pose(out, "mean", dist.mean);
    return kExitOk;
}

// ---- ground-truth ----

struct GroundTruthOptions {
    RunOptions run;
    std::size_t runs = 1000;
    double trans_range = 1.0;
    double rot_range = 0.1745;
    std::vector<double> center;
    std::string out_dir = ".";
};

int cmd_ground_truth(const GroundTruthOptions& o, std::size_t threads, std::ostream& out, std::ostream& err) {
    const IcpConfig config = icp_config(o.run);
    McOptions mc;
    mc.runs = o.runs;
    mc.trans_range = o.trans_range;
    mc.rot_range = o.rot_range;
    mc.center = pose_from(o.center);
    mc.threads = threads;
    if (mc.runs < 2) throw InputError("--runs must be at least 2");
    const PointCloud source = load_cloud(o.run.source);
    const PointCloud reference = prepare_reference(load_cloud(o.run.reference), o.run);
    const McResult r = mc_ground_truth(source, reference, mc, config);
    for (const auto& m : r.failure_messages) err << "warning: " << m << '\n';
    ensure_directory(o.out_dir);
    const fs::path dir(o.out_dir);
    write_samples_csv(dir / "ground_truth.csv", r.distribution.samples);
    write_summary_json(dir / "ground_truth_summary.json", r.distribution);
    out << "runs " << o.runs << " failures " << r.failures << '\n';
    print_pose(out, "mean", r.distribution.mean);
    return kExitOk;
}

// ---- evaluate ----

struct EvaluateOptions {
    std::string posterior;
    std::string ground_truth;
    std::string out_dir = ".";
};

int cmd_evaluate(const EvaluateOptions& o, std::ostream& out) {
    const PoseDistribution estimate = PoseDistribution::from_samples(read_samples_csv(o.posterior));
    const PoseDistribution reference = PoseDistribution::from_samples(read_samples_csv(o.ground_truth));
    if (estimate.samples.size() < 2 || reference.samples.size() < 2) {
        throw InputError("evaluate needs at least two samples in each file");
    }
    const MetricsReport report = compare_distributions(estimate, reference);
    ensure_directory(o.out_dir);
    const fs::path dir(o.out_dir);
    write_metrics_json(dir / "metrics.json", report);
    for (int d = 0; d < 6; ++d) {
        const bool periodic = is_angular(d);
        write_kde_csv(dir / ("kde_posterior_" + std::string(kDimNames[d]) + ".csv"),
                      kde_1d(column(estimate.samples, d), std::nullopt, periodic));
        write_kde_csv(dir / ("kde_ground_truth_" + std::string(kDimNames[d]) + ".csv"),
                      kde_1d(column(reference.samples, d), std::nullopt, periodic));
    }
    out << std::setprecision(6) << "kl_6d " << report.kl_6d << "\nkl_trans " << report.kl_trans << "\nkl_rot "
        << report.kl_rot << "\novl " << report.ovl << '\n';
    return kExitOk;
}

// ---- odometry ----

struct OdometryOptions {
    RunOptions run;
    std::string frames;
    std::string out_dir = ".";
    std::string order = "second";
    double level = 0.95;
};

bool is_cloud_file(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".ply" || ext == ".pcd" || ext == ".csv" || ext == ".xyz" || ext == ".txt";
}

int cmd_odometry(const OdometryOptions& o, std::size_t threads, std::ostream& out) {
    const SteinConfig base = stein_config(o.run, threads);
    const PriorConfig prior = prior_config(o.run);
    if (!(o.level > 0.0 && o.level < 1.0)) throw InputError("--level must lie in (0, 1)");
    if (!fs::is_directory(o.frames)) throw IoError("no such directory '" + o.frames + "'");
    // Frames are processed in lexicographic file-name order.
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(o.frames)) {
        if (entry.is_regular_file() && is_cloud_file(entry.path())) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
    if (files.size() < 2) {
        throw InputError("odometry needs at least two frames in '" + o.frames + "', found " +
                         std::to_string(files.size()));
    }

    std::vector<PoseDistribution> steps;
    PointCloud reference = prepare_reference(load_cloud(files[0]), o.run);
    for (std::size_t i = 1; i < files.size(); ++i) {
        PointCloud source = load_cloud(files[i]);
        SteinConfig c = base;
        c.icp.seed = base.icp.seed + i;
        steps.push_back(run_stein_icp(source, reference, c, prior).distribution);
        out << "step " << i << ' ' << files[i - 1].filename().string() << " <- " << files[i].filename().string()
            << '\n';
        reference = prepare_reference(std::move(source), o.run);
    }
    const CompoundingOrder order = o.order == "fourth" ? CompoundingOrder::Fourth : CompoundingOrder::Second;
    const TrajectoryEstimate trajectory = compound_poses(steps, order);
    ensure_directory(o.out_dir);
    const fs::path dir(o.out_dir);
    write_trajectory_csv(dir / "trajectory.csv", trajectory);
    write_ellipses_csv(dir / "ellipses.csv", trajectory, o.level);
    print_pose(out, "final", matrix_to_pose(trajectory.poses.back()));
    return kExitOk;
}

// ---- bench ----

struct BenchOptions {
    RunOptions run;
    std::string scene = "asymmetric";
    std::size_t max_threads = 0;
    std::string out_dir;
};

int cmd_bench(const BenchOptions& o, std::size_t threads, std::ostream& out) {
    SteinConfig config = stein_config(o.run, 1);
    const PriorConfig prior = prior_config(o.run);
    PointCloud source;
    PointCloud reference;
    if (!o.run.source.empty() || !o.run.reference.empty()) {
        if (o.run.source.empty() || o.run.reference.empty()) {
            throw InputError("bench needs both --source and --reference, or neither");
        }
        source = load_cloud(o.run.source);
        reference = load_cloud(o.run.reference);
    } else {
        Scene scene = make_scene(parse_scene_kind(o.scene));
        source = std::move(scene.source);
        reference = std::move(scene.reference);
    }
    reference = prepare_reference(std::move(reference), o.run);
    const NeighborIndex index(reference);

    const std::size_t top = o.max_threads > 0 ? o.max_threads : threads;
    std::vector<std::size_t> counts{1};
    for (std::size_t p = 2; p < top; p *= 2) counts.push_back(p);
    if (top > 1) counts.push_back(top);

    struct Row {
        std::size_t threads;
        double seconds;
        bool identical;
    };
    std::vector<Row> rows;
    SteinResult baseline;
    for (const std::size_t p : counts) {
        config.threads = p;
        SteinResult r = run_stein_icp(source, index, config, prior);
        const bool same = rows.empty() || r.distribution.samples == baseline.distribution.samples;
        rows.push_back({p, r.total_seconds, same});
        if (rows.size() == 1) baseline = std::move(r);
    }

    const PhaseTimes& t = baseline.times;
    const std::pair<const char*, double> phases[] = {{"sampling", t.sampling},
                                                     {"transform", t.transform},
                                                     {"matching", t.matching},
                                                     {"gradients", t.gradients},
                                                     {"update", t.update}};
    out << std::fixed << std::setprecision(4);
    out << "phase        seconds   share\n";
    for (const auto& [name, sec] : phases) {
        out << std::left << std::setw(12) << name << std::right << std::setw(8) << sec << std::setw(7)
            << std::setprecision(1) << 100.0 * sec / baseline.total_seconds << "%\n"
            << std::setprecision(4);
    }
    out << std::left << std::setw(12) << "sum" << std::right << std::setw(8) << t.sum() << '\n';
    out << std::left << std::setw(12) << "total" << std::right << std::setw(8) << baseline.total_seconds << "\n\n";
    out << "threads   seconds  speedup  identical\n";
    bool all_same = true;
    for (const Row& r : rows) {
        all_same = all_same && r.identical;
        out << std::setw(7) << r.threads << std::setw(10) << r.seconds << std::setw(9) << std::setprecision(2)
            << rows.front().seconds / r.seconds << std::setw(11) << (r.identical ? "yes" : "no") << '\n'
            << std::setprecision(4);
    }
    out.unsetf(std::ios::floatfield);

    if (!o.out_dir.empty()) {
        ensure_directory(o.out_dir);
        nlohmann::json j;
        for (const auto& [name, sec] : phases) j["phases"][name] = sec;
        j["phase_sum"] = t.sum();
        j["total"] = baseline.total_seconds;
        for (const Row& r : rows) {
            j["scaling"].push_back({{"threads", r.threads},
                                    {"seconds", r.seconds},
                                    {"speedup", rows.front().seconds / r.seconds},
                                    {"identical", r.identical}});
        }
        write_json(fs::path(o.out_dir) / "bench.json", j);
    }
    if (!all_same) throw NumericalError("outputs differ across thread counts");
    return kExitOk;
}

// ---- synth ----

struct SynthOptions {
    std::string scene = "all";
    std::string out_dir = ".";
    std::size_t points = 5000;
    double noise = 0.003;
    double scale = 1.0;
    std::uint64_t seed = 1;
    std::size_t frames = 0;
    std::vector<double> step{0.1, 0.0, 0.0, 0.0, 0.0, 0.02};
};

int cmd_synth(const SynthOptions& o, std::ostream& out) {
    if (o.points == 0) throw InputError("--points must be positive");
    if (!(o.noise >= 0.0)) throw InputError("--noise must be non-negative");
    if (!(o.scale > 0.0)) throw InputError("--scale must be positive");
    SceneOptions so;
    so.source_points = so.reference_points = o.points;
    so.noise = o.noise;
    so.scale = o.scale;
    so.seed = o.seed;
    std::vector<SceneKind> kinds;
    if (o.scene == "all") {
        kinds = {SceneKind::Asymmetric, SceneKind::Ring, SceneKind::Block};
    } else {
        kinds = {parse_scene_kind(o.scene)};
    }
    ensure_directory(o.out_dir);
    const fs::path dir(o.out_dir);
    for (const SceneKind kind : kinds) {
        const Scene s = make_scene(kind, so);
        save_cloud(dir / (s.name + "_source.ply"), s.source);
        save_cloud(dir / (s.name + "_reference.ply"), s.reference);
        nlohmann::json j;
        j["scene"] = s.name;
        j["ground_truth"] = pose_json(s.ground_truth);
        j["modes"] = nlohmann::json::array();
        for (const auto& m : s.modes) j["modes"].push_back(pose_json(m));
        j["source_points"] = s.source.size();
        j["reference_points"] = s.reference.size();
        j["noise"] = o.noise;
        j["scale"] = o.scale;
        j["seed"] = o.seed;
        write_json(dir / (s.name + "_ground_truth.json"), j);
        out << s.name << ": " << s.source.size() << " source, " << s.reference.size() << " reference points\n";
    }
    if (o.frames > 0) {
        const Pose6D step = pose_from(o.step);
        const std::vector<PointCloud> frames = make_sequence(o.frames, step, so);
        const fs::path seq = dir / "sequence";
        ensure_directory(seq);
        std::ofstream poses(dir / "sequence_poses.csv");
        if (!poses) throw IoError("cannot write '" + (dir / "sequence_poses.csv").string() + "'");
        poses << "index,x,y,z,roll,pitch,yaw\n" << std::setprecision(17);
        HomogeneousTransform pose = HomogeneousTransform::Identity();
        const HomogeneousTransform step_t = pose_to_matrix(step);
        for (std::size_t i = 0; i < frames.size(); ++i) {
            char name[32];
            std::snprintf(name, sizeof(name), "frame_%04zu.ply", i);
            save_cloud(seq / name, frames[i]);
            const Vector6d v = matrix_to_pose(pose).vector();
            poses << i;
            for (int d = 0; d < 6; ++d) poses << ',' << v[d];
            poses << '\n';
            pose = compose(pose, step_t);
        }
        out << "sequence: " << frames.size() << " frames\n";
    }
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Probabilistic point cloud registration with Stein ICP", "stein_icp"};
    app.set_config("--config", "", "INI file with [command] sections; flags override it");
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.require_subcommand(1);
    app.fallthrough();
    std::size_t threads_flag = 0;
    app.add_option("--threads", threads_flag, "Worker threads (default: STEIN_ICP_THREADS, then all cores)");

    RegisterOptions reg;
    auto* reg_cmd = app.add_subcommand("register", "Estimate the pose posterior between two clouds");
    reg_cmd->add_option("--source", reg.run.source, "Source cloud")->required();
    reg_cmd->add_option("--reference", reg.run.reference, "Reference cloud")->required();
    reg_cmd->add_option("--method", reg.run.method, "stein or sgd")
        ->check(CLI::IsMember({"stein", "sgd"}))
        ->capture_default_str();
    reg_cmd->add_option("--out", reg.out_dir, "Output directory")->capture_default_str();
    reg_cmd->add_flag("--trace", reg.trace, "Write per-iteration poses to trace.csv");
    add_algorithm_options(*reg_cmd, reg.run);

    GroundTruthOptions gt;
    gt.run.iterations = 300;
    auto* gt_cmd = app.add_subcommand("ground-truth", "Monte-Carlo reference distribution from SGD-ICP restarts");
    gt_cmd->add_option("--source", gt.run.source, "Source cloud")->required();
    gt_cmd->add_option("--reference", gt.run.reference, "Reference cloud")->required();
    gt_cmd->add_option("--runs", gt.runs, "Number of restarts")->capture_default_str();
    gt_cmd->add_option("--trans-range", gt.trans_range, "Initial translation half-width")->capture_default_str();
    gt_cmd->add_option("--rot-range", gt.rot_range, "Initial rotation half-width")->capture_default_str();
    gt_cmd->add_option("--center", gt.center, "Center of the initial poses")->expected(6);
    gt_cmd->add_option("--out", gt.out_dir, "Output directory")->capture_default_str();
    add_algorithm_options(*gt_cmd, gt.run);

    EvaluateOptions ev;
    auto* ev_cmd = app.add_subcommand("evaluate", "KL, OVL and KDE curves of a posterior against a reference");
    ev_cmd->add_option("--posterior", ev.posterior, "Posterior samples CSV")->required();
    ev_cmd->add_option("--ground-truth", ev.ground_truth, "Reference samples CSV")->required();
    ev_cmd->add_option("--out", ev.out_dir, "Output directory")->capture_default_str();

    OdometryOptions od;
    auto* od_cmd = app.add_subcommand("odometry", "Frame-to-frame Stein ICP with compounded covariances");
    od_cmd->add_option("--frames", od.frames, "Directory of clouds, processed in file-name order")->required();
    od_cmd->add_option("--out", od.out_dir, "Output directory")->capture_default_str();
    od_cmd->add_option("--order", od.order, "Covariance compounding: second or fourth")
        ->check(CLI::IsMember({"second", "fourth"}))
        ->capture_default_str();
    od_cmd->add_option("--level", od.level, "Ellipse confidence level")->capture_default_str();
    add_algorithm_options(*od_cmd, od.run);

    BenchOptions be;
    auto* be_cmd = app.add_subcommand("bench", "Per-phase runtime and thread scaling of a Stein ICP run");
    be_cmd->add_option("--source", be.run.source, "Source cloud (default: a synthetic scene)");
    be_cmd->add_option("--reference", be.run.reference, "Reference cloud");
    be_cmd->add_option("--scene", be.scene, "Synthetic scene when no clouds are given")
        ->check(CLI::IsMember({"asymmetric", "ring", "block"}))
        ->capture_default_str();
    be_cmd->add_option("--max-threads", be.max_threads, "Largest worker count (default: --threads)");
    be_cmd->add_option("--out", be.out_dir, "Directory for bench.json");
    add_algorithm_options(*be_cmd, be.run);

    SynthOptions sy;
    auto* sy_cmd = app.add_subcommand("synth", "Write the synthetic scenes and an odometry sequence");
    sy_cmd->add_option("--scene", sy.scene, "asymmetric, ring, block or all")
        ->check(CLI::IsMember({"all", "asymmetric", "ring", "block"}))
        ->capture_default_str();
    sy_cmd->add_option("--out", sy.out_dir, "Output directory")->capture_default_str();
    sy_cmd->add_option("--points", sy.points, "Points per cloud")->capture_default_str();
    sy_cmd->add_option("--noise", sy.noise, "Gaussian noise per coordinate, meters")->capture_default_str();
    sy_cmd->add_option("--scale", sy.scale, "Scene size multiplier")->capture_default_str();
    sy_cmd->add_option("--seed", sy.seed, "Random seed")->capture_default_str();
    sy_cmd->add_option("--frames", sy.frames, "Sequence length (0: no sequence)")->capture_default_str();
    sy_cmd->add_option("--step", sy.step, "Per-frame motion x y z roll pitch yaw")->expected(6);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitInput;
    }

    try {
        const std::size_t threads = resolve_thread_count(threads_flag);
        if (reg_cmd->parsed()) return cmd_register(reg, threads, out);
        if (gt_cmd->parsed()) return cmd_ground_truth(gt, threads, out, err);
        if (ev_cmd->parsed()) return cmd_evaluate(ev, out);
        if (od_cmd->parsed()) return cmd_odometry(od, threads, out);
        if (be_cmd->parsed()) return cmd_bench(be, threads, out);
        if (sy_cmd->parsed()) return cmd_synth(sy, out);
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitNumerical;
    }
    return kExitInput;
}

}  // namespace stein_icp
