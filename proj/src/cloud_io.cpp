#include "stein_icp/cloud_io.hpp"

#include "stein_icp/kdtree.hpp"
#include "stein_icp/types.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace stein_icp {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == ',' || line[i] == '\r')) ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != ',' && line[j] != '\r') ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

std::optional<double> to_double(std::string_view token) {
    if (!token.empty() && token.front() == '+') token.remove_prefix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size()) return std::nullopt;
    return value;
}

class LineReader {
public:
    explicit LineReader(const std::filesystem::path& path) : path_(path), in_(path) {
        if (!in_) throw IoError("cannot open '" + path.string() + "'");
    }
    bool next(std::string& line) {
        if (!std::getline(in_, line)) return false;
        ++line_no_;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return true;
    }
    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError(path_.string() + ":" + std::to_string(line_no_) + ": " + what);
    }
    std::size_t line_no() const { return line_no_; }

private:
    std::filesystem::path path_;
    std::ifstream in_;
    std::size_t line_no_ = 0;
};

double parse_field(const LineReader& reader, std::string_view token, std::size_t column) {
    const auto value = to_double(token);
    if (!value) {
        reader.fail("field " + std::to_string(column + 1) + ": cannot parse '" + std::string(token) + "'");
    }
    if (!std::isfinite(*value)) {
        throw InputError("non-finite value at line " + std::to_string(reader.line_no()) + ", field " +
                         std::to_string(column + 1));
    }
    return *value;
}

// Column positions of the coordinate and normal fields within a data row.
struct Columns {
    std::array<int, 3> xyz{-1, -1, -1};
    std::array<int, 3> normal{-1, -1, -1};
    std::size_t count = 0;

    bool has_normals() const { return normal[0] >= 0 && normal[1] >= 0 && normal[2] >= 0; }
};

void read_row(const LineReader& reader, std::string_view line, const Columns& cols, PointCloud& cloud) {
    const auto fields = split_fields(line);
    if (fields.size() < cols.count) {
        reader.fail("expected " + std::to_string(cols.count) + " fields, got " + std::to_string(fields.size()));
    }
    Eigen::Vector3d p;
    for (int d = 0; d < 3; ++d) p[d] = parse_field(reader, fields[cols.xyz[d]], cols.xyz[d]);
    cloud.points.push_back(p);
    if (cols.has_normals()) {
        Eigen::Vector3d n;
        for (int d = 0; d < 3; ++d) n[d] = parse_field(reader, fields[cols.normal[d]], cols.normal[d]);
        const double norm = n.norm();
        if (norm > 0.0 && std::abs(norm - 1.0) > 1e-6) n /= norm;
        cloud.normals.push_back(n);
    }
}

PointCloud load_ply(const std::filesystem::path& path) {
    LineReader reader(path);
    std::string line;
    if (!reader.next(line) || line != "ply") reader.fail("missing 'ply' magic");

    std::size_t vertex_count = 0;
    bool in_vertex = false, seen_vertex = false, ascii = false;
    Columns cols;
    while (true) {
        if (!reader.next(line)) reader.fail("unexpected end of header");
        const auto f = split_fields(line);
        if (f.empty() || f[0] == "comment" || f[0] == "obj_info") continue;
        if (f[0] == "end_header") break;
        if (f[0] == "format") {
            if (f.size() < 2 || f[1] != "ascii") reader.fail("only 'format ascii 1.0' is supported");
            ascii = true;
        } else if (f[0] == "element") {
            if (f.size() != 3) reader.fail("malformed element line");
            in_vertex = f[1] == "vertex";
            if (in_vertex) {
                if (seen_vertex) reader.fail("duplicate vertex element");
                const auto n = to_double(f[2]);
                if (!n || *n < 0 || std::floor(*n) != *n) reader.fail("bad vertex count");
                vertex_count = static_cast<std::size_t>(*n);
                seen_vertex = true;
            }
        } else if (f[0] == "property") {
            if (!in_vertex) continue;
            if (f.size() != 3) reader.fail("unsupported vertex property '" + line + "'");
            const auto col = static_cast<int>(cols.count++);
            const std::string_view name = f[2];
            if (name == "x") cols.xyz[0] = col;
            if (name == "y") cols.xyz[1] = col;
            if (name == "z") cols.xyz[2] = col;
            if (name == "nx") cols.normal[0] = col;
            if (name == "ny") cols.normal[1] = col;
            if (name == "nz") cols.normal[2] = col;
        } else {
            reader.fail("unknown header keyword '" + std::string(f[0]) + "'");
        }
    }
    if (!ascii) reader.fail("missing format line");
    if (!seen_vertex) reader.fail("missing 'element vertex'");
    if (cols.xyz[0] < 0 || cols.xyz[1] < 0 || cols.xyz[2] < 0) reader.fail("vertex lacks x/y/z properties");

    PointCloud cloud;
    cloud.points.reserve(vertex_count);
    for (std::size_t i = 0; i < vertex_count; ++i) {
        if (!reader.next(line)) reader.fail("expected " + std::to_string(vertex_count) + " vertices");
        read_row(reader, line, cols, cloud);
    }
    return cloud;
}

PointCloud load_pcd(const std::filesystem::path& path) {
    LineReader reader(path);
    std::string line;
    std::vector<std::string> fields;
    std::vector<std::size_t> counts;
    std::size_t points = 0;
    bool have_points = false;
    while (true) {
        if (!reader.next(line)) reader.fail("unexpected end of header");
        const auto f = split_fields(line);
        if (f.empty() || f[0].front() == '#') continue;
        if (f[0] == "FIELDS") {
            for (std::size_t i = 1; i < f.size(); ++i) fields.emplace_back(f[i]);
        } else if (f[0] == "COUNT") {
            for (std::size_t i = 1; i < f.size(); ++i) {
                const auto c = to_double(f[i]);
                if (!c || *c < 1) reader.fail("bad COUNT entry");
                counts.push_back(static_cast<std::size_t>(*c));
            }
        } else if (f[0] == "POINTS") {
            const auto n = to_double(f.size() > 1 ? f[1] : std::string_view{});
            if (!n || *n < 0) reader.fail("bad POINTS value");
            points = static_cast<std::size_t>(*n);
            have_points = true;
        } else if (f[0] == "DATA") {
            if (f.size() < 2 || f[1] != "ascii") reader.fail("only 'DATA ascii' is supported");
            break;
        }
        // VERSION, SIZE, TYPE, WIDTH, HEIGHT, VIEWPOINT carry nothing we need.
    }
    if (fields.empty()) reader.fail("missing FIELDS");
    if (counts.empty()) counts.assign(fields.size(), 1);
    if (counts.size() != fields.size()) reader.fail("COUNT and FIELDS lengths differ");

    Columns cols;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        const auto col = static_cast<int>(cols.count);
        const auto& name = fields[i];
        if (name == "x") cols.xyz[0] = col;
        if (name == "y") cols.xyz[1] = col;
        if (name == "z") cols.xyz[2] = col;
        if (name == "normal_x") cols.normal[0] = col;
        if (name == "normal_y") cols.normal[1] = col;
        if (name == "normal_z") cols.normal[2] = col;
        cols.count += counts[i];
    }
    if (cols.xyz[0] < 0 || cols.xyz[1] < 0 || cols.xyz[2] < 0) reader.fail("FIELDS lacks x/y/z");

    PointCloud cloud;
    while (reader.next(line)) {
        if (split_fields(line).empty()) continue;
        read_row(reader, line, cols, cloud);
    }
    if (have_points && cloud.size() != points) {
        reader.fail("POINTS declares " + std::to_string(points) + " but found " + std::to_string(cloud.size()));
    }
    return cloud;
}

PointCloud load_csv(const std::filesystem::path& path) {
    LineReader reader(path);
    std::string line;
    PointCloud cloud;
    std::size_t width = 0;
    bool first = true;
    while (reader.next(line)) {
        const auto f = split_fields(line);
        if (f.empty() || f[0].front() == '#') continue;
        if (first && !to_double(f[0])) {  // header row such as "x,y,z"
            first = false;
            continue;
        }
        first = false;
        if (width == 0) {
            if (f.size() != 3 && f.size() != 6) reader.fail("expected 3 or 6 columns, got " + std::to_string(f.size()));
            width = f.size();
        } else if (f.size() != width) {
            reader.fail("expected " + std::to_string(width) + " columns, got " + std::to_string(f.size()));
        }
        Columns cols;
        cols.xyz = {0, 1, 2};
        if (width == 6) cols.normal = {3, 4, 5};
        cols.count = width;
        read_row(reader, line, cols, cloud);
    }
    return cloud;
}

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

}  // namespace

CloudFormat format_from_path(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".ply") return CloudFormat::Ply;
    if (ext == ".pcd") return CloudFormat::Pcd;
    return CloudFormat::XyzCsv;
}

PointCloud load_cloud(const std::filesystem::path& path, CloudFormat format) {
    if (!std::filesystem::exists(path)) throw IoError("no such file '" + path.string() + "'");
    switch (format) {
        case CloudFormat::Ply: return load_ply(path);
        case CloudFormat::Pcd: return load_pcd(path);
        case CloudFormat::XyzCsv: return load_csv(path);
    }
    throw InputError("unknown cloud format");
}

PointCloud load_cloud(const std::filesystem::path& path) { return load_cloud(path, format_from_path(path)); }

void save_cloud(const std::filesystem::path& path, const PointCloud& cloud, CloudFormat format) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    const bool normals = cloud.has_normals();
    const char* sep = format == CloudFormat::XyzCsv ? "," : " ";
    switch (format) {
        case CloudFormat::Ply:
            out << "ply\nformat ascii 1.0\nelement vertex " << cloud.size() << "\n"
                << "property double x\nproperty double y\nproperty double z\n";
            if (normals) out << "property double nx\nproperty double ny\nproperty double nz\n";
            out << "end_header\n";
            break;
        case CloudFormat::Pcd:
            out << "# .PCD v0.7 - Point Cloud Data file format\nVERSION 0.7\n";
            out << (normals ? "FIELDS x y z normal_x normal_y normal_z\nSIZE 8 8 8 8 8 8\nTYPE F F F F F F\n"
                              "COUNT 1 1 1 1 1 1\n"
                            : "FIELDS x y z\nSIZE 8 8 8\nTYPE F F F\nCOUNT 1 1 1\n");
            out << "WIDTH " << cloud.size() << "\nHEIGHT 1\nVIEWPOINT 0 0 0 1 0 0 0\nPOINTS " << cloud.size()
                << "\nDATA ascii\n";
            break;
        case CloudFormat::XyzCsv: break;
    }
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto& p = cloud.points[i];
        out << format_double(p.x()) << sep << format_double(p.y()) << sep << format_double(p.z());
        if (normals) {
            const auto& n = cloud.normals[i];
            out << sep << format_double(n.x()) << sep << format_double(n.y()) << sep << format_double(n.z());
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void save_cloud(const std::filesystem::path& path, const PointCloud& cloud) {
    save_cloud(path, cloud, format_from_path(path));
}

PointCloud estimate_normals(const PointCloud& cloud, std::size_t k, const Eigen::Vector3d& viewpoint) {
    if (k < 3) throw InputError("estimate_normals: k must be at least 3");
    if (cloud.size() < k + 1) {
        throw InputError("estimate_normals: need at least k+1 = " + std::to_string(k + 1) + " points, got " +
                         std::to_string(cloud.size()));
    }
    const KdTree tree(cloud.points);
    PointCloud out;
    out.points = cloud.points;
    out.normals.resize(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto& p = cloud.points[i];
        // k + 1 neighbours: the query point itself is always among them.
        const auto nbrs = tree.k_nearest(p, k + 1);
        Eigen::Vector3d mean = Eigen::Vector3d::Zero();
        std::size_t used = 0;
        for (const auto& nb : nbrs) {
            if (nb.index == i) continue;
            if (used == k) break;
            mean += tree.point(nb.index);
            ++used;
        }
        mean /= static_cast<double>(used);
        Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
        used = 0;
        for (const auto& nb : nbrs) {
            if (nb.index == i) continue;
            if (used == k) break;
            const Eigen::Vector3d d = tree.point(nb.index) - mean;
            scatter += d * d.transpose();
            ++used;
        }
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(scatter);
        const Eigen::Vector3d ev = eig.eigenvalues();  // ascending
        if (ev[2] <= 0.0 || ev[1] <= 1e-12 * ev[2]) {
            out.normals[i].setZero();
            continue;
        }
        Eigen::Vector3d n = eig.eigenvectors().col(0).normalized();
        if (n.dot(viewpoint - p) < 0.0) n = -n;
        out.normals[i] = n;
    }
    return out;
}

PointCloud voxel_downsample(const PointCloud& cloud, double voxel) {
    if (!(voxel > 0.0)) throw InputError("voxel_downsample: voxel size must be positive");
    using Key = std::tuple<long long, long long, long long>;
    std::map<Key, std::size_t> slot;
    std::vector<Eigen::Vector3d> sums;
    std::vector<Eigen::Vector3d> normal_sums;
    std::vector<std::size_t> counts;
    std::vector<Eigen::Vector3d> lo, hi;
    const bool normals = cloud.has_normals();
    // The grid is anchored at the bounding-box minimum, so a voxel larger than the box
    // holds every point.
    Eigen::Vector3d origin = Eigen::Vector3d::Zero();
    if (!cloud.empty()) {
        origin = cloud.points.front();
        for (const auto& p : cloud.points) origin = origin.cwiseMin(p);
    }
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto& p = cloud.points[i];
        const Eigen::Vector3d cell = ((p - origin) / voxel).array().floor();
        const Key key{static_cast<long long>(cell.x()), static_cast<long long>(cell.y()),
                      static_cast<long long>(cell.z())};
        auto [it, inserted] = slot.try_emplace(key, sums.size());
        if (inserted) {
            sums.emplace_back(Eigen::Vector3d::Zero());
            normal_sums.emplace_back(Eigen::Vector3d::Zero());
            counts.push_back(0);
            lo.push_back(p);
            hi.push_back(p);
        }
        sums[it->second] += p;
        lo[it->second] = lo[it->second].cwiseMin(p);
        hi[it->second] = hi[it->second].cwiseMax(p);
        if (normals) normal_sums[it->second] += cloud.normals[i];
        ++counts[it->second];
    }
    PointCloud out;
    out.points.reserve(sums.size());
    for (std::size_t v = 0; v < sums.size(); ++v) {
        // Rounding in the sum can push the mean an ulp past its members.
        const Eigen::Vector3d c = (sums[v] / static_cast<double>(counts[v])).cwiseMax(lo[v]).cwiseMin(hi[v]);
        out.points.push_back(c);
        if (normals) {
            const double norm = normal_sums[v].norm();
            out.normals.push_back(norm > 1e-12 ? Eigen::Vector3d(normal_sums[v] / norm) : Eigen::Vector3d::Zero());
        }
    }
    return out;
}

}  // namespace stein_icp
