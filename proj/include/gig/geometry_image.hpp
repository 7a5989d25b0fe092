#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "gig/ops.hpp"
#include "gig/pointcloud.hpp"
#include "gig/tape.hpp"

namespace gig::gim {

/// H x W grid of surface-point coordinates, channel-major (x, y, z planes).
struct GeometryImage {
  int height = 0;
  int width = 0;
  std::vector<double> data;  // 3 * H * W

  GeometryImage() = default;
  GeometryImage(int h, int w)
      : height(h), width(w), data(static_cast<std::size_t>(3) * h * w, 0.0) {}

  double& at(int c, int i, int j) {
    return data[(static_cast<std::size_t>(c) * height + i) * width + j];
  }
  double at(int c, int i, int j) const {
    return data[(static_cast<std::size_t>(c) * height + i) * width + j];
  }
};

/// Source pixel of padded cell (r, c) under the rotational tiling: the
/// center tile is the original, edge-adjacent tiles are 180-degree
/// rotations, diagonal tiles are originals again.
std::pair<int, int> rotational_source(int r, int c, int h, int w, int k);

GeometryImage rot180(const GeometryImage& img);
GeometryImage rotational_pad(const GeometryImage& img, int k);

/// Differentiable padding for [b,c,h,w] tensors; backward accumulates each
/// padded pixel's gradient into its source pixel.
ad::Var rotational_pad(const ad::Var& x, int k);

/// Row-major flattening; point t = (x[t], y[t], z[t]).
geom::PointCloud to_point_cloud(const GeometryImage& img);
GeometryImage from_point_cloud(const geom::PointCloud& cloud, int h, int w);

/// [1,3,h,w] image tensor -> [h*w,3] cloud tensor on the tape.
ad::Var image_to_cloud(const ad::Var& img);

GeometryImage image_from_var(const ad::Var& img);

/// Per-channel linear stretch to bytes; constant channels map to 0.
/// Rounding is half-up.
std::vector<unsigned char> linear_stretch_bytes(const GeometryImage& img);

/// Binary PPM (P6): "P6\n<W> <H>\n255\n" then row-major RGB triples.
void write_ppm(const GeometryImage& img, const std::filesystem::path& path);

}  // namespace gig::gim
