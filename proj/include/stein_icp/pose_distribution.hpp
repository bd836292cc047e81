#pragma once

#include "stein_icp/geometry.hpp"
#include "stein_icp/types.hpp"

#include <filesystem>
#include <span>
#include <vector>

namespace stein_icp {

/// Gaussian summary of pose samples. Angular means are circular means in [-pi, pi).
struct FittedGaussian {
    Vector6d mean = Vector6d::Zero();
    Matrix6d covariance = Matrix6d::Identity();
};

/// Dimensions 3..5 (roll, pitch, yaw) are angles.
inline bool is_angular(int dim) { return dim >= 3; }

/// Sample mean (circular for angles) and unbiased covariance of the wrapped residuals,
/// regularized by 1e-12 * I. Throws InputError for fewer than two samples.
FittedGaussian fit_gaussian(std::span<const Pose6D> samples);

/// Posterior samples with their Gaussian summary.
struct PoseDistribution {
    std::vector<Pose6D> samples;
    Pose6D mean;
    Matrix6d covariance = Matrix6d::Zero();

    /// Fits the summary; a single sample gets a zero covariance.
    static PoseDistribution from_samples(std::vector<Pose6D> samples);

    FittedGaussian gaussian() const { return {mean.vector(), covariance}; }
};

double circular_mean(std::span<const double> angles);
/// Mean resultant length R in [0, 1].
double circular_resultant_length(std::span<const double> angles);
/// sqrt(-2 ln R); infinite when R = 0.
double circular_std(std::span<const double> angles);

std::vector<double> column(std::span<const Pose6D> samples, int dim);

/// Per-dimension standard deviation: linear for translation, circular for angles.
Vector6d dimension_std(std::span<const Pose6D> samples);

/// K rows of x,y,z,roll,pitch,yaw with a header line.
void write_samples_csv(const std::filesystem::path& path, std::span<const Pose6D> samples);

/// Reads a samples CSV. Throws ParseError on malformed rows or a column count other than 6.
std::vector<Pose6D> read_samples_csv(const std::filesystem::path& path);

/// JSON summary: mean, covariance, per-dimension linear/circular std, sample count.
void write_summary_json(const std::filesystem::path& path, const PoseDistribution& dist);

}  // namespace stein_icp
