#include "oracles.hpp"
#include "temp_dir.hpp"

#include "stein_icp/evaluation.hpp"
#include "stein_icp/pose_distribution.hpp"
#include "stein_icp/scenes.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <Eigen/LU>

#include <cmath>
#include <random>

using namespace stein_icp;

namespace {

// KL(p || q) through explicit inverse and determinants.
double kl_oracle(const Vector6d& mp, const Matrix6d& cp, const Vector6d& mq, const Matrix6d& cq) {
    const Matrix6d qi = cq.inverse();
    const Vector6d d = mq - mp;
    return 0.5 * ((qi * cp).trace() + d.dot(qi * d) - 6.0 + std::log(cq.determinant() / cp.determinant()));
}

// Riemann sum of min(p, q) on a fine grid.
double ovl_oracle(double mp, double sp, double mq, double sq) {
    const double lo = std::min(mp - 10 * sp, mq - 10 * sq), hi = std::max(mp + 10 * sp, mq + 10 * sq);
    const int n = 200000;
    const double dx = (hi - lo) / n;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = lo + (i + 0.5) * dx;
        const double p = std::exp(-0.5 * std::pow((x - mp) / sp, 2)) / (sp * std::sqrt(2 * oracle::kPi));
        const double q = std::exp(-0.5 * std::pow((x - mq) / sq, 2)) / (sq * std::sqrt(2 * oracle::kPi));
        sum += std::min(p, q) * dx;
    }
    return sum;
}

FittedGaussian gaussian(const Vector6d& mean, const Matrix6d& cov) { return {mean, cov}; }

double trapezoid(const KdeCurve& c) {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < c.grid.size(); ++i)
        s += 0.5 * (c.density[i] + c.density[i + 1]) * (c.grid[i + 1] - c.grid[i]);
    return s;
}

HomogeneousTransform random_transform(std::mt19937_64& rng) { return oracle::homogeneous(oracle::uniform6(rng, 2.0, 1.0)); }

}  // namespace

TEST(CircularStats, MeanResultantAndStd) {
    const std::vector<double> same(10, 0.7);
    EXPECT_NEAR(circular_mean(same), 0.7, 1e-12);
    EXPECT_NEAR(circular_resultant_length(same), 1.0, 1e-12);
    EXPECT_NEAR(circular_std(same), 0.0, 1e-6);

    const std::vector<double> cut{oracle::kPi - 0.1, -oracle::kPi + 0.1};
    EXPECT_NEAR(std::abs(oracle::wrap(circular_mean(cut) - oracle::kPi)), 0.0, 1e-12);
    EXPECT_NEAR(circular_resultant_length(cut), std::cos(0.1), 1e-12);

    std::vector<double> ring;
    for (int i = 0; i < 360; ++i) ring.push_back(-oracle::kPi + 2 * oracle::kPi * i / 360.0);
    EXPECT_LT(circular_resultant_length(ring), 1e-12);
    EXPECT_GT(circular_std(ring), 5.0);

    const std::vector<double> two{0.0, 1.0};
    EXPECT_NEAR(circular_std(two), std::sqrt(-2.0 * std::log(std::cos(0.5))), 1e-12);
}

TEST(FitGaussian, IdenticalSamplesGiveRegularizedZeroCovariance) {
    const std::vector<Pose6D> s(5, Pose6D{1, 2, 3, 0.1, 0.2, 0.3});
    const FittedGaussian g = fit_gaussian(s);
    EXPECT_LT((g.mean - s[0].vector()).norm(), 1e-12);
    EXPECT_LT((g.covariance - 1e-12 * Matrix6d::Identity()).cwiseAbs().maxCoeff(), 1e-20);
}

TEST(FitGaussian, AnglesStraddlingCutAverageToPi) {
    std::vector<Pose6D> s;
    for (double a : {oracle::kPi - 0.05, -oracle::kPi + 0.05, oracle::kPi - 0.02, -oracle::kPi + 0.02})
        s.push_back(Pose6D{0, 0, 0, 0, 0, a});
    const FittedGaussian g = fit_gaussian(s);
    EXPECT_LT(std::abs(oracle::wrap(g.mean[5] - oracle::kPi)), 1e-12);
    // Residuals are +-0.05, +-0.02 after wrapping.
    EXPECT_NEAR(g.covariance(5, 5), (2 * 0.0025 + 2 * 0.0004) / 3.0, 1e-12);
}

TEST(FitGaussian, RecoversKnownGaussian) {
    std::mt19937_64 rng(31);
    const Matrix6d cov = oracle::random_spd(rng, 0.001, 0.004);
    Vector6d mean;
    mean << 1, -2, 0.5, 0.2, -0.1, 2.9;
    std::vector<Pose6D> s;
    for (int i = 0; i < 10000; ++i) s.push_back(Pose6D::from_vector(mean + oracle::gaussian_draw(cov, rng)).wrapped());
    const FittedGaussian g = fit_gaussian(s);
    for (int d = 0; d < 6; ++d) {
        EXPECT_NEAR(g.covariance(d, d), cov(d, d), 0.05 * cov(d, d));
        EXPECT_LT(std::abs(oracle::wrap(g.mean[d] - mean[d])), 3 * std::sqrt(cov(d, d) / 10000.0) + 1e-9);
    }
    EXPECT_THROW(fit_gaussian(std::vector<Pose6D>(1)), InputError);
}

TEST(PoseDistribution, SingleSampleHasZeroCovariance) {
    const auto d = PoseDistribution::from_samples({Pose6D{1, 0, 0, 0, 0, 0}});
    EXPECT_EQ(d.covariance, Matrix6d::Zero());
    EXPECT_EQ(d.mean, (Pose6D{1, 0, 0, 0, 0, 0}));
}

TEST(PoseDistribution, DimensionStdUsesCircularSpreadForAngles) {
    std::vector<Pose6D> s;
    for (double a : {oracle::kPi - 0.1, -oracle::kPi + 0.1}) s.push_back(Pose6D{a, 0, 0, 0, 0, a});
    const Vector6d sd = dimension_std(s);
    EXPECT_GT(sd[0], 4.0);
    EXPECT_NEAR(sd[5], std::sqrt(-2.0 * std::log(std::cos(0.1))), 1e-9);
}

TEST(SamplesCsv, RoundTripAndColumnCheck) {
    TempDir dir;
    std::mt19937_64 rng(32);
    std::vector<Pose6D> s;
    for (int i = 0; i < 50; ++i) s.push_back(Pose6D::from_vector(oracle::uniform6(rng, 3.0, 3.0)));
    write_samples_csv(dir / "s.csv", s);
    const std::string text = read_file(dir / "s.csv");
    EXPECT_EQ(text.substr(0, text.find('\n')), "x,y,z,roll,pitch,yaw");
    EXPECT_EQ(read_samples_csv(dir / "s.csv"), s);
    EXPECT_THROW(read_samples_csv(dir.write("bad.csv", "x,y,z,roll,pitch\n1,2,3,4,5\n")), ParseError);
    EXPECT_THROW(read_samples_csv(dir / "missing.csv"), IoError);
}

TEST(SummaryJson, HoldsMeanCovarianceAndCount) {
    TempDir dir;
    const auto d = PoseDistribution::from_samples({Pose6D{0, 0, 0, 0, 0, 0}, Pose6D{2, 0, 0, 0, 0, 0}});
    write_summary_json(dir / "s.json", d);
    const auto j = nlohmann::json::parse(read_file(dir / "s.json"));
    EXPECT_EQ(j.dump().find("null"), std::string::npos);
    EXPECT_NE(j.dump().find("2"), std::string::npos);
}

TEST(KlGaussian, SelfDivergenceIsZero) {
    std::mt19937_64 rng(33);
    const Matrix6d c = oracle::random_spd(rng, 0.1, 2.0);
    const Vector6d m = oracle::uniform6(rng, 1.0, 1.0);
    EXPECT_NEAR(kl_gaussian(gaussian(m, c), gaussian(m, c)), 0.0, 1e-12);
}

TEST(KlGaussian, UnitMeanShiftGivesOneHalf) {
    Vector6d shift = Vector6d::Zero();
    shift[0] = 1.0;
    EXPECT_NEAR(kl_gaussian(gaussian(Vector6d::Zero(), Matrix6d::Identity()), gaussian(shift, Matrix6d::Identity())),
                0.5, 1e-12);
    EXPECT_NEAR(kl_gaussian_block(gaussian(Vector6d::Zero(), Matrix6d::Identity()), gaussian(shift, Matrix6d::Identity()), 0),
                0.5, 1e-12);
    EXPECT_NEAR(kl_gaussian_block(gaussian(Vector6d::Zero(), Matrix6d::Identity()), gaussian(shift, Matrix6d::Identity()), 3),
                0.0, 1e-12);
}

TEST(KlGaussian, AngularMeanGapIsWrapped) {
    Vector6d a = Vector6d::Zero(), b = Vector6d::Zero();
    a[5] = oracle::kPi - 0.05;
    b[5] = -oracle::kPi + 0.05;
    const Matrix6d c = 0.01 * Matrix6d::Identity();
    EXPECT_NEAR(kl_gaussian(gaussian(a, c), gaussian(b, c)), 0.5 * 0.01 / 0.01, 1e-9);
}

TEST(KlGaussian, IsAsymmetric) {
    const FittedGaussian p = gaussian(Vector6d::Zero(), Matrix6d::Identity());
    const FittedGaussian q = gaussian(Vector6d::Zero(), 2.0 * Matrix6d::Identity());
    EXPECT_GT(std::abs(kl_gaussian(p, q) - kl_gaussian(q, p)), 0.1);
}

TEST(KlGaussian, MatchesOracleAndIsNonNegative) {
    std::mt19937_64 rng(34);
    for (int k = 0; k < 200; ++k) {
        const Matrix6d cp = oracle::random_spd(rng, 0.05, 2.0), cq = oracle::random_spd(rng, 0.05, 2.0);
        const Vector6d mp = oracle::uniform6(rng, 1.0, 1.0), mq = oracle::uniform6(rng, 1.0, 1.0);
        const double got = kl_gaussian(gaussian(mp, cp), gaussian(mq, cq));
        EXPECT_GE(got, 0.0);
        EXPECT_NEAR(got, kl_oracle(mp, cp, mq, cq), 1e-8 * std::max(1.0, got));
    }
}

TEST(KlGaussian, NonPositiveDefiniteThrows) {
    Matrix6d bad = Matrix6d::Identity();
    bad(2, 2) = -1.0;
    EXPECT_THROW(kl_gaussian(gaussian(Vector6d::Zero(), bad), gaussian(Vector6d::Zero(), Matrix6d::Identity())),
                 NumericalError);
}

TEST(Ovl, IdenticalDistributionsOverlapFully) { EXPECT_NEAR(ovl_1d(0.3, 0.2, 0.3, 0.2), 1.0, 1e-6); }

TEST(Ovl, DisjointDistributionsDoNotOverlap) { EXPECT_LT(ovl_1d(0.0, 0.01, 10.0, 0.01), 1e-6); }

TEST(Ovl, TwoSigmaShiftGivesClosedForm) {
    EXPECT_NEAR(ovl_1d(0.0, 1.0, 2.0, 1.0), 2.0 * oracle::normal_cdf(-1.0), 1e-6);
}

TEST(Ovl, MatchesRiemannSumAndIsSymmetric) {
    std::mt19937_64 rng(35);
    std::uniform_real_distribution<double> m(-1.0, 1.0), s(0.05, 1.0);
    for (int k = 0; k < 50; ++k) {
        const double mp = m(rng), sp = s(rng), mq = m(rng), sq = s(rng);
        const double v = ovl_1d(mp, sp, mq, sq);
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
        EXPECT_NEAR(v, ovl_oracle(mp, sp, mq, sq), 1e-5);
        EXPECT_NEAR(v, ovl_1d(mq, sq, mp, sp), 1e-6);
    }
    EXPECT_THROW(ovl_1d(0, 0, 0, 1), InputError);
}

TEST(Ovl, CoefficientIsMeanOfDimensions) {
    Vector6d shift = Vector6d::Zero();
    shift[1] = 2.0;
    const FittedGaussian p = gaussian(Vector6d::Zero(), Matrix6d::Identity()), q = gaussian(shift, Matrix6d::Identity());
    EXPECT_NEAR(ovl_coefficient(p, q), (5.0 + 2.0 * oracle::normal_cdf(-1.0)) / 6.0, 1e-6);
}

TEST(Kde, SymmetricPairGivesSymmetricCurveWithTwoModes) {
    const std::vector<double> s{-1.0, 1.0};
    const KdeCurve c = kde_1d(s, 0.5);
    ASSERT_EQ(c.grid.size(), 512u);
    EXPECT_NEAR(c.grid.front(), -2.5, 1e-12);
    EXPECT_NEAR(c.grid.back(), 2.5, 1e-12);
    for (std::size_t i = 0; i < 256; ++i) EXPECT_NEAR(c.density[i], c.density[511 - i], 1e-12);
    const auto modes = find_modes(c);
    ASSERT_EQ(modes.size(), 2u);
    EXPECT_NEAR(modes[0], -1.0, 0.05);
    EXPECT_NEAR(modes[1], 1.0, 0.05);
}

TEST(Kde, DensityIntegratesToOne) {
    std::mt19937_64 rng(36);
    std::normal_distribution<double> n(0.0, 0.3);
    std::vector<double> s;
    for (int i = 0; i < 500; ++i) s.push_back(n(rng));
    EXPECT_NEAR(trapezoid(kde_1d(s)), 1.0, 1e-3);
    std::vector<double> a;
    for (int i = 0; i < 500; ++i) a.push_back(oracle::wrap(3.0 + n(rng)));
    const KdeCurve c = kde_1d(a, std::nullopt, true);
    double sum = 0.0;
    for (double d : c.density) sum += d * 2 * oracle::kPi / 512.0;
    EXPECT_NEAR(sum, 1.0, 1e-3);
}

TEST(Kde, WrappedKernelFindsModeAtPi) {
    std::mt19937_64 rng(37);
    std::normal_distribution<double> n(0.0, 0.05);
    std::vector<double> s;
    for (int i = 0; i < 300; ++i) s.push_back(oracle::wrap(oracle::kPi + n(rng)));
    const auto modes = find_modes(kde_1d(s, std::nullopt, true));
    ASSERT_EQ(modes.size(), 1u);
    EXPECT_LT(std::abs(oracle::wrap(modes[0] - oracle::kPi)), 0.02);
}

TEST(Kde, SilvermanRule) {
    std::mt19937_64 rng(38);
    std::normal_distribution<double> n(0.0, 2.0);
    std::vector<double> s;
    for (int i = 0; i < 1000; ++i) s.push_back(n(rng));
    double mean = 0, ss = 0;
    for (double v : s) mean += v;
    mean /= 1000;
    for (double v : s) ss += (v - mean) * (v - mean);
    std::vector<double> sorted = s;
    std::sort(sorted.begin(), sorted.end());
    const auto q = [&](double p) {
        const double pos = p * 999;
        const auto lo = static_cast<std::size_t>(pos);
        return sorted[lo] + (pos - lo) * (sorted[lo + 1] - sorted[lo]);
    };
    const double spread = std::min(std::sqrt(ss / 999), (q(0.75) - q(0.25)) / 1.34);
    EXPECT_NEAR(silverman_bandwidth(s), 0.9 * spread * std::pow(1000.0, -0.2), 1e-12);
    EXPECT_THROW(silverman_bandwidth(std::vector<double>{1.0}), InputError);
}

TEST(KdeCsv, WritesGridAndDensity) {
    TempDir dir;
    write_kde_csv(dir / "k.csv", kde_1d(std::vector<double>{0.0, 1.0}, 0.3));
    const std::string text = read_file(dir / "k.csv");
    EXPECT_EQ(text.substr(0, 13), "grid,density\n");
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 513);
}

TEST(RelativePoseError, IdenticalTrajectoriesGiveZero) {
    std::mt19937_64 rng(39);
    TrajectoryEstimate t;
    for (int i = 0; i < 6; ++i) t.poses.push_back(random_transform(rng));
    for (const auto& e : relative_pose_error(t, t)) {
        EXPECT_EQ(e.translation, 0.0);
        EXPECT_EQ(e.rotation, 0.0);
    }
    EXPECT_EQ(relative_pose_error(t, t, 2).size(), 4u);
}

TEST(RelativePoseError, InvariantToCommonLeftTransform) {
    std::mt19937_64 rng(40);
    TrajectoryEstimate a, b, la, lb;
    const HomogeneousTransform left = random_transform(rng);
    for (int i = 0; i < 5; ++i) {
        a.poses.push_back(random_transform(rng));
        b.poses.push_back(random_transform(rng));
        la.poses.push_back(left * a.poses.back());
        lb.poses.push_back(left * b.poses.back());
    }
    const auto e1 = relative_pose_error(a, b), e2 = relative_pose_error(la, lb);
    for (std::size_t i = 0; i < e1.size(); ++i) {
        EXPECT_NEAR(e1[i].translation, e2[i].translation, 1e-9);
        EXPECT_NEAR(e1[i].rotation, e2[i].rotation, 1e-7);
    }
}

TEST(RelativePoseError, YawErrorInOneStep) {
    TrajectoryEstimate gt, est;
    Vector6d step = Vector6d::Zero();
    step[0] = 1.0;
    Vector6d bad = step;
    bad[5] = 0.1;
    HomogeneousTransform g = HomogeneousTransform::Identity(), e = g;
    gt.poses.push_back(g);
    est.poses.push_back(e);
    for (int i = 0; i < 3; ++i) {
        g = g * oracle::homogeneous(step);
        e = e * oracle::homogeneous(i == 1 ? bad : step);
        gt.poses.push_back(g);
        est.poses.push_back(e);
    }
    const auto err = relative_pose_error(est, gt);
    EXPECT_NEAR(err[0].rotation, 0.0, 1e-7);
    EXPECT_NEAR(err[1].rotation, 0.1, 1e-9);
    EXPECT_NEAR(err[1].translation, 0.0, 1e-12);
    EXPECT_NEAR(err[2].rotation, 0.0, 1e-7);
}

TEST(RelativePoseError, RejectsMismatchedInputs) {
    TrajectoryEstimate a, b;
    a.poses.assign(3, HomogeneousTransform::Identity());
    b.poses.assign(4, HomogeneousTransform::Identity());
    EXPECT_THROW(relative_pose_error(a, b), InputError);
    EXPECT_THROW(relative_pose_error(a, a, 3), InputError);
    EXPECT_THROW(relative_pose_error(a, a, 0), InputError);
}

TEST(CompareDistributions, SelfComparison) {
    std::mt19937_64 rng(41);
    std::vector<Pose6D> s;
    for (int i = 0; i < 200; ++i) s.push_back(Pose6D::from_vector(oracle::uniform6(rng, 0.1, 0.1)));
    const auto d = PoseDistribution::from_samples(s);
    const MetricsReport r = compare_distributions(d, d);
    EXPECT_LT(r.kl_6d, 1e-9);
    EXPECT_LT(r.kl_trans, 1e-9);
    EXPECT_LT(r.kl_rot, 1e-9);
    EXPECT_GT(r.ovl, 0.999);
    EXPECT_EQ(r.estimate_std, r.reference_std);
}

TEST(MetricsJson, HasTopLevelAndPerDimensionFields) {
    TempDir dir;
    MetricsReport r;
    r.kl_6d = 1.5;
    r.ovl = 0.25;
    r.ovl_dims[4] = 0.75;
    write_metrics_json(dir / "m.json", r);
    const auto j = nlohmann::json::parse(read_file(dir / "m.json"));
    EXPECT_EQ(j["kl_6d"].get<double>(), 1.5);
    EXPECT_EQ(j["ovl"].get<double>(), 0.25);
    EXPECT_TRUE(j.contains("kl_trans"));
    EXPECT_TRUE(j.contains("kl_rot"));
    EXPECT_EQ(j["dimensions"]["pitch"]["ovl"].get<double>(), 0.75);
}

TEST(McGroundTruth, ConstrainedSceneGivesTightDistribution) {
    const Scene s = make_scene(SceneKind::Asymmetric);
    McOptions opt;
    opt.runs = 20;
    opt.center = s.ground_truth;
    IcpConfig cfg;
    cfg.iterations = 300;
    cfg.seed = 3;
    const McResult r = mc_ground_truth(s.source, s.reference, opt, cfg);
    EXPECT_EQ(r.failures, 0u);
    ASSERT_EQ(r.distribution.samples.size(), 20u);
    const Vector6d sd = dimension_std(r.distribution.samples);
    for (int d = 0; d < 3; ++d) EXPECT_LT(sd[d], 0.02) << "dim " << d;
    EXPECT_LT((r.distribution.mean.translation() - s.ground_truth.translation()).norm(), 0.02);
}

TEST(McGroundTruth, ZeroRangesOnExactCopyGiveIdenticalResults) {
    const Scene s = make_scene(SceneKind::Asymmetric);
    McOptions opt;
    opt.runs = 2;
    opt.trans_range = 0.0;
    opt.rot_range = 0.0;
    const McResult r = mc_ground_truth(s.reference, s.reference, opt, IcpConfig{});
    ASSERT_EQ(r.distribution.samples.size(), 2u);
    EXPECT_LT((r.distribution.samples[0].vector() - r.distribution.samples[1].vector()).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(McGroundTruth, ThreadCountDoesNotChangeResult) {
    const Scene s = make_scene(SceneKind::Asymmetric);
    McOptions opt;
    opt.runs = 6;
    opt.center = s.ground_truth;
    opt.trans_range = 0.1;
    IcpConfig cfg;
    cfg.iterations = 30;
    const auto one = mc_ground_truth(s.source, s.reference, opt, cfg);
    opt.threads = 4;
    EXPECT_EQ(mc_ground_truth(s.source, s.reference, opt, cfg).distribution.samples, one.distribution.samples);
}

TEST(McGroundTruth, MostlyFailingRunsThrow) {
    PointCloud a, b;
    for (int i = 0; i < 20; ++i) {
        a.points.emplace_back(i, 0, 0);
        b.points.emplace_back(i, 100, 0);
    }
    McOptions opt;
    opt.runs = 4;
    IcpConfig cfg;
    cfg.max_dist = 1.0;
    EXPECT_THROW(mc_ground_truth(a, b, opt, cfg), NumericalError);
    opt.runs = 1;
    EXPECT_THROW(mc_ground_truth(a, b, opt, IcpConfig{}), InputError);
}
