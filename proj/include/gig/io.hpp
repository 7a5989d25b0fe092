#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "gig/pointcloud.hpp"

namespace gig::io {

/// Malformed or unreadable input data (exit code 2 at the CLI).
class DataError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PlyContents {
  std::vector<geom::Vec3> vertices;
  std::vector<std::array<int, 3>> faces;  // empty for plain clouds
};

/// ASCII or binary-little-endian PLY; vertex x/y/z as float32/float64,
/// other scalar vertex properties skipped, optional triangulated faces.
/// Errors carry byte offsets.
PlyContents read_ply(const std::filesystem::path& path);
geom::PointCloud read_ply_cloud(const std::filesystem::path& path);
geom::Mesh read_ply_mesh(const std::filesystem::path& path);

/// Canonical binary-little-endian float64 output; read(write(p)) is
/// bit-exact.
void write_ply(const std::filesystem::path& path, const geom::PointCloud& cloud);
void write_ply(const std::filesystem::path& path, const geom::Mesh& mesh);

/// Wavefront OBJ: v records and polygonal f records (fan-triangulated);
/// negative indices resolve from the end.
geom::Mesh read_obj(const std::filesystem::path& path);

/// key=value lines with '#' comments; blank lines ignored.
std::map<std::string, std::string> read_config_file(const std::filesystem::path& path);

struct DatasetDir {
  std::vector<std::string> names;  // sorted PLY filenames
  std::vector<geom::PointCloud> clouds;
  std::vector<int> labels;                // via labels.csv, else empty
  std::vector<std::string> categories;    // sorted category names
  std::vector<std::string> train_split, val_split, test_split;  // optional
};

/// Flat directory of .ply files with optional train/val/test manifests and
/// labels.csv (filename,category).
DatasetDir load_dataset_dir(const std::filesystem::path& dir, bool normalize);

}  // namespace gig::io
