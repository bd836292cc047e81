#include "stein_icp/pose_distribution.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

namespace stein_icp {

double circular_mean(std::span<const double> angles) {
    double s = 0.0, c = 0.0;
    for (const double a : angles) {
        s += std::sin(a);
        c += std::cos(a);
    }
    return wrap_angle(std::atan2(s, c));
}

double circular_resultant_length(std::span<const double> angles) {
    if (angles.empty()) return 0.0;
    double s = 0.0, c = 0.0;
    for (const double a : angles) {
        s += std::sin(a);
        c += std::cos(a);
    }
    return std::hypot(s, c) / static_cast<double>(angles.size());
}

double circular_std(std::span<const double> angles) {
    const double r = circular_resultant_length(angles);
    if (r <= 0.0) return std::numeric_limits<double>::infinity();
    return std::sqrt(std::max(0.0, -2.0 * std::log(std::min(r, 1.0))));
}

std::vector<double> column(std::span<const Pose6D> samples, int dim) {
    std::vector<double> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.vector()[dim]);
    return out;
}

FittedGaussian fit_gaussian(std::span<const Pose6D> samples) {
    if (samples.size() < 2) throw InputError("fit_gaussian: need at least two samples");
    const auto n = static_cast<double>(samples.size());
    FittedGaussian g;
    for (int d = 0; d < 6; ++d) {
        const auto values = column(samples, d);
        if (is_angular(d)) {
            g.mean[d] = circular_mean(values);
        } else {
            double sum = 0.0;
            for (const double v : values) sum += v;
            g.mean[d] = sum / n;
        }
    }
    Matrix6d cov = Matrix6d::Zero();
    for (const auto& s : samples) {
        Vector6d r = s.vector() - g.mean;
        for (int d = 3; d < 6; ++d) r[d] = wrap_angle(r[d]);
        cov += r * r.transpose();
    }
    cov /= (n - 1.0);
    g.covariance = 0.5 * (cov + cov.transpose()) + 1e-12 * Matrix6d::Identity();
    return g;
}

PoseDistribution PoseDistribution::from_samples(std::vector<Pose6D> samples) {
    PoseDistribution d;
    d.samples = std::move(samples);
    if (d.samples.size() >= 2) {
        const auto g = fit_gaussian(d.samples);
        d.mean = Pose6D::from_vector(g.mean);
        d.covariance = g.covariance;
    } else if (d.samples.size() == 1) {
        d.mean = d.samples.front().wrapped();
    }
    return d;
}

Vector6d dimension_std(std::span<const Pose6D> samples) {
    Vector6d out = Vector6d::Zero();
    if (samples.size() < 2) return out;
    for (int d = 0; d < 6; ++d) {
        const auto values = column(samples, d);
        if (is_angular(d)) {
            out[d] = circular_std(values);
        } else {
            double mean = 0.0;
            for (const double v : values) mean += v;
            mean /= static_cast<double>(values.size());
            double ss = 0.0;
            for (const double v : values) ss += (v - mean) * (v - mean);
            out[d] = std::sqrt(ss / static_cast<double>(values.size() - 1));
        }
    }
    return out;
}

void write_samples_csv(const std::filesystem::path& path, std::span<const Pose6D> samples) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out.precision(17);
    out << "x,y,z,roll,pitch,yaw\n";
    for (const auto& s : samples) {
        out << s.x << ',' << s.y << ',' << s.z << ',' << s.roll << ',' << s.pitch << ',' << s.yaw << '\n';
    }
}

std::vector<Pose6D> read_samples_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::vector<Pose6D> samples;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        if (line_no == 1 && line.rfind("x,", 0) == 0) continue;
        std::vector<double> values;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) {
            double v = 0.0;
            const char* b = field.data();
            const char* e = b + field.size();
            while (b < e && *b == ' ') ++b;
            const auto [ptr, ec] = std::from_chars(b, e, v);
            if (ec != std::errc() || ptr != e || !std::isfinite(v)) {
                throw ParseError(path.string() + ":" + std::to_string(line_no) + ": bad value '" + field + "'");
            }
            values.push_back(v);
        }
        if (values.size() != 6) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected 6 columns, got " +
                             std::to_string(values.size()));
        }
        samples.push_back(Pose6D{values[0], values[1], values[2], values[3], values[4], values[5]});
    }
    if (samples.empty()) throw ParseError(path.string() + ": no samples");
    return samples;
}

void write_summary_json(const std::filesystem::path& path, const PoseDistribution& dist) {
    nlohmann::json j;
    j["samples"] = dist.samples.size();
    const Vector6d mean = dist.mean.vector();
    j["mean"] = std::vector<double>(mean.data(), mean.data() + 6);
    nlohmann::json cov = nlohmann::json::array();
    for (int r = 0; r < 6; ++r) {
        std::vector<double> row(6);
        for (int c = 0; c < 6; ++c) row[c] = dist.covariance(r, c);
        cov.push_back(row);
    }
    j["covariance"] = cov;
    const Vector6d sd = dimension_std(dist.samples);
    static constexpr const char* names[] = {"x", "y", "z", "roll", "pitch", "yaw"};
    for (int d = 0; d < 6; ++d) {
        nlohmann::json entry;
        entry[is_angular(d) ? "circular_std" : "std"] = sd[d];
        if (is_angular(d)) entry["resultant_length"] = circular_resultant_length(column(dist.samples, d));
        j["dimensions"][names[d]] = entry;
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << j.dump(2) << '\n';
}

}  // namespace stein_icp
