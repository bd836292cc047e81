#pragma once

#include "stein_icp/point_cloud.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <optional>

namespace stein_icp {

enum class CloudFormat { Ply, Pcd, XyzCsv };

/// Picks the format from the file extension (.ply, .pcd, anything else is CSV/XYZ).
CloudFormat format_from_path(const std::filesystem::path& path);

/// Reads an ASCII PLY, ASCII PCD or CSV/XYZ cloud. Normals are loaded when the file
/// carries nx/ny/nz (PLY), normal_x/normal_y/normal_z (PCD) or six columns (CSV).
///
/// Throws IoError when the file cannot be opened, ParseError (with line number) on
/// malformed content, and InputError on non-finite coordinates.
PointCloud load_cloud(const std::filesystem::path& path, CloudFormat format);
PointCloud load_cloud(const std::filesystem::path& path);

/// Writes coordinates in shortest round-trip decimal form, so a reload is bit-exact.
void save_cloud(const std::filesystem::path& path, const PointCloud& cloud, CloudFormat format);
void save_cloud(const std::filesystem::path& path, const PointCloud& cloud);

/// PCA normals from the k nearest neighbours (excluding the point itself), oriented
/// towards `viewpoint`. Neighbourhoods whose scatter has rank < 2 get a zero normal.
PointCloud estimate_normals(const PointCloud& cloud, std::size_t k,
                            const Eigen::Vector3d& viewpoint = Eigen::Vector3d::Zero());

/// One centroid per occupied voxel, in order of first occupancy.
PointCloud voxel_downsample(const PointCloud& cloud, double voxel);

}  // namespace stein_icp
