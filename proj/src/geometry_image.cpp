#include "gig/geometry_image.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace gig::gim {

namespace {

inline int floor_div(int a, int b) {
  int q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

std::pair<int, int> rotational_source(int r, int c, int h, int w, int k) {
  const int i = r - k, j = c - k;
  const int ti = floor_div(i, h), tj = floor_div(j, w);
  const int li = i - ti * h, lj = j - tj * w;
  if (((ti + tj) % 2 + 2) % 2 == 0) return {li, lj};
  return {h - 1 - li, w - 1 - lj};
}

GeometryImage rot180(const GeometryImage& img) {
  GeometryImage out(img.height, img.width);
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < img.height; ++i)
      for (int j = 0; j < img.width; ++j)
        out.at(c, i, j) = img.at(c, img.height - 1 - i, img.width - 1 - j);
  return out;
}

GeometryImage rotational_pad(const GeometryImage& img, int k) {
  if (k < 0) throw std::invalid_argument("rotational_pad: k must be >= 0");
  GeometryImage out(img.height + 2 * k, img.width + 2 * k);
  for (int c = 0; c < 3; ++c)
    for (int r = 0; r < out.height; ++r)
      for (int col = 0; col < out.width; ++col) {
        const auto [si, sj] = rotational_source(r, col, img.height, img.width, k);
        out.at(c, r, col) = img.at(c, si, sj);
      }
  return out;
}

ad::Var rotational_pad(const ad::Var& x, int k) {
  if (x.shape().size() != 4)
    throw std::invalid_argument("rotational_pad: expected x[b,c,h,w]");
  if (k < 0) throw std::invalid_argument("rotational_pad: k must be >= 0");
  const int nb = x.shape()[0], c = x.shape()[1], h = x.shape()[2],
            w = x.shape()[3];
  const int ho = h + 2 * k, wo = w + 2 * k;
  ad::Tape* tape = x.tape();
  const bool rg = x.requires_grad();
  ad::Var y = tape->make_result({nb, c, ho, wo}, rg);
  auto xn = x.node(), yn = y.node();

  // Per-plane source index map, shared by forward and backward.
  auto src = std::make_shared<std::vector<int>>(
      static_cast<std::size_t>(ho) * wo);
  for (int r = 0; r < ho; ++r)
    for (int col = 0; col < wo; ++col) {
      const auto [si, sj] = rotational_source(r, col, h, w, k);
      (*src)[static_cast<std::size_t>(r) * wo + col] = si * w + sj;
    }

  const int planes = nb * c;
  for (int pl = 0; pl < planes; ++pl) {
    const double* xp = &xn->value[static_cast<std::size_t>(pl) * h * w];
    double* yp = &yn->value[static_cast<std::size_t>(pl) * ho * wo];
    for (std::size_t t = 0; t < src->size(); ++t) yp[t] = xp[(*src)[t]];
  }
  if (rg) {
    tape->record([xn, yn, src, planes, h, w, ho, wo]() {
      if (!yn->grad) return;
      const auto& go = *yn->grad;
      auto& gx = xn->ensure_grad();
      for (int pl = 0; pl < planes; ++pl) {
        const double* gp = &go[static_cast<std::size_t>(pl) * ho * wo];
        double* gxp = &gx[static_cast<std::size_t>(pl) * h * w];
        for (std::size_t t = 0; t < src->size(); ++t) gxp[(*src)[t]] += gp[t];
      }
    });
  }
  return y;
}

geom::PointCloud to_point_cloud(const GeometryImage& img) {
  const std::size_t n = static_cast<std::size_t>(img.height) * img.width;
  geom::PointCloud out;
  out.points.resize(n);
  for (std::size_t t = 0; t < n; ++t)
    out.points[t] = {img.data[t], img.data[n + t], img.data[2 * n + t]};
  return out;
}

GeometryImage from_point_cloud(const geom::PointCloud& cloud, int h, int w) {
  if (static_cast<std::size_t>(h) * w != cloud.size())
    throw std::invalid_argument("from_point_cloud: h*w != point count");
  GeometryImage img(h, w);
  const std::size_t n = cloud.size();
  for (std::size_t t = 0; t < n; ++t) {
    img.data[t] = cloud.points[t].x;
    img.data[n + t] = cloud.points[t].y;
    img.data[2 * n + t] = cloud.points[t].z;
  }
  return img;
}

ad::Var image_to_cloud(const ad::Var& img) {
  if (img.shape().size() != 4 || img.shape()[0] != 1 || img.shape()[1] != 3)
    throw std::invalid_argument("image_to_cloud: expected [1,3,h,w]");
  const int n = img.shape()[2] * img.shape()[3];
  return ad::transpose(ad::reshape(img, {3, n}));
}

GeometryImage image_from_var(const ad::Var& img) {
  if (img.shape().size() != 4 || img.shape()[0] != 1 || img.shape()[1] != 3)
    throw std::invalid_argument("image_from_var: expected [1,3,h,w]");
  GeometryImage out(img.shape()[2], img.shape()[3]);
  out.data = img.value();
  return out;
}

std::vector<unsigned char> linear_stretch_bytes(const GeometryImage& img) {
  const std::size_t n = static_cast<std::size_t>(img.height) * img.width;
  std::vector<unsigned char> bytes(3 * n);
  for (int c = 0; c < 3; ++c) {
    double lo = img.data[c * n], hi = img.data[c * n];
    for (std::size_t t = 0; t < n; ++t) {
      lo = std::min(lo, img.data[c * n + t]);
      hi = std::max(hi, img.data[c * n + t]);
    }
    for (std::size_t t = 0; t < n; ++t) {
      double v = 0.0;
      if (hi > lo)
        v = std::floor(255.0 * (img.data[c * n + t] - lo) / (hi - lo) + 0.5);
      bytes[3 * t + c] = static_cast<unsigned char>(v);
    }
  }
  return bytes;
}

void write_ppm(const GeometryImage& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("write_ppm: cannot open " + path.string());
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  const auto bytes = linear_stretch_bytes(img);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write_ppm: write failed for " + path.string());
}

}  // namespace gig::gim
