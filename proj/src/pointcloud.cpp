#include "gig/pointcloud.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace gig::geom {

double Vec3::norm() const { return std::sqrt(norm2()); }

ad::Tensor cloud_tensor(const PointCloud& p) {
  ad::Tensor t({static_cast<int>(p.size()), 3});
  for (std::size_t i = 0; i < p.size(); ++i) {
    t[3 * i] = p.points[i].x;
    t[3 * i + 1] = p.points[i].y;
    t[3 * i + 2] = p.points[i].z;
  }
  return t;
}

PointCloud cloud_from_tensor(const std::vector<int>& shape,
                             const std::vector<double>& data) {
  if (shape.size() != 2 || shape[1] != 3)
    throw std::invalid_argument("point cloud tensor must have shape [n,3]");
  PointCloud p;
  p.points.resize(shape[0]);
  for (int i = 0; i < shape[0]; ++i)
    p.points[i] = {data[3 * i], data[3 * i + 1], data[3 * i + 2]};
  return p;
}

namespace {

// For each a[i], index of nearest b (lowest index on ties) and the squared
// distance. Raw (x,y,z)-triple layout so tape nodes can reuse it.
void nearest_each(const double* a, std::size_t na, const double* b,
                  std::size_t nb, std::vector<int>& idx,
                  std::vector<double>& d2) {
  idx.resize(na);
  d2.resize(na);
  for (std::size_t i = 0; i < na; ++i) {
    const double ax = a[3 * i], ay = a[3 * i + 1], az = a[3 * i + 2];
    double best = std::numeric_limits<double>::infinity();
    int bj = 0;
    for (std::size_t j = 0; j < nb; ++j) {
      const double dx = ax - b[3 * j], dy = ay - b[3 * j + 1],
                   dz = az - b[3 * j + 2];
      const double d = dx * dx + dy * dy + dz * dz;
      if (d < best) {
        best = d;
        bj = static_cast<int>(j);
      }
    }
    idx[i] = bj;
    d2[i] = best;
  }
}

void check_nonempty(std::size_t na, std::size_t nb) {
  if (na == 0 || nb == 0)
    throw std::invalid_argument("chamfer_distance: empty point cloud");
}

// Ascending-order summation so the value is exactly invariant under point
// permutations of either cloud.
double sorted_sum(std::vector<double>& v) {
  std::sort(v.begin(), v.end());
  return std::accumulate(v.begin(), v.end(), 0.0);
}

}  // namespace

double chamfer_distance(const PointCloud& a, const PointCloud& b) {
  check_nonempty(a.size(), b.size());
  std::vector<int> idx;
  std::vector<double> d2;
  const double* ap = &a.points[0].x;
  const double* bp = &b.points[0].x;
  nearest_each(ap, a.size(), bp, b.size(), idx, d2);
  double t1 = sorted_sum(d2);
  nearest_each(bp, b.size(), ap, a.size(), idx, d2);
  double t2 = sorted_sum(d2);
  return t1 / (2.0 * static_cast<double>(a.size())) +
         t2 / (2.0 * static_cast<double>(b.size()));
}

ad::Var chamfer_distance(const ad::Var& a, const ad::Var& b) {
  if (a.shape().size() != 2 || a.shape()[1] != 3 || b.shape().size() != 2 ||
      b.shape()[1] != 3)
    throw std::invalid_argument("chamfer_distance: expected [n,3] tensors");
  const std::size_t na = a.shape()[0], nb = b.shape()[0];
  check_nonempty(na, nb);
  ad::Tape* tape = a.tape();
  const bool rg = a.requires_grad() || b.requires_grad();
  ad::Var out = tape->make_result({1}, rg);
  auto an = a.node(), bn = b.node(), on = out.node();

  auto ab = std::make_shared<std::vector<int>>();
  auto ba = std::make_shared<std::vector<int>>();
  std::vector<double> d2;
  nearest_each(an->value.data(), na, bn->value.data(), nb, *ab, d2);
  double t1 = sorted_sum(d2);
  nearest_each(bn->value.data(), nb, an->value.data(), na, *ba, d2);
  double t2 = sorted_sum(d2);
  on->value[0] = t1 / (2.0 * static_cast<double>(na)) +
                 t2 / (2.0 * static_cast<double>(nb));

  if (rg) {
    // Argmin pairs held constant; gradient flows through the squared
    // distances of the selected pairs only.
    tape->record([an, bn, on, ab, ba, na, nb]() {
      if (!on->grad) return;
      const double g = (*on->grad)[0];
      const double wa = g / static_cast<double>(na);
      const double wb = g / static_cast<double>(nb);
      std::vector<double>* ga = an->requires_grad ? &an->ensure_grad() : nullptr;
      std::vector<double>* gb = bn->requires_grad ? &bn->ensure_grad() : nullptr;
      for (std::size_t i = 0; i < na; ++i) {
        const std::size_t j = static_cast<std::size_t>((*ab)[i]);
        for (int c = 0; c < 3; ++c) {
          const double diff = an->value[3 * i + c] - bn->value[3 * j + c];
          if (ga) (*ga)[3 * i + c] += wa * diff;
          if (gb) (*gb)[3 * j + c] -= wa * diff;
        }
      }
      for (std::size_t j = 0; j < nb; ++j) {
        const std::size_t i = static_cast<std::size_t>((*ba)[j]);
        for (int c = 0; c < 3; ++c) {
          const double diff = bn->value[3 * j + c] - an->value[3 * i + c];
          if (gb) (*gb)[3 * j + c] += wb * diff;
          if (ga) (*ga)[3 * i + c] -= wb * diff;
        }
      }
    });
  }
  return out;
}

namespace {

std::vector<double> euclidean_cost_matrix(const PointCloud& a,
                                          const PointCloud& b) {
  const std::size_t n = a.size();
  std::vector<double> cost(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      cost[i * n + j] = std::sqrt(dist2(a.points[i], b.points[j]));
  return cost;
}

// O(n^3) Hungarian algorithm with row/column potentials.
double hungarian_min_cost(int n, const std::vector<double>& cost) {
  const double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      int j1 = 0;
      double delta = kInf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur =
            cost[static_cast<std::size_t>(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  double total = 0.0;
  for (int j = 1; j <= n; ++j)
    if (p[j]) total += cost[static_cast<std::size_t>(p[j] - 1) * n + (j - 1)];
  return total;
}

// Bertsekas forward auction with epsilon scaling; prices persist across
// phases. Final matching cost is within n*eps_final of the optimum.
double auction_min_cost(int n, const std::vector<double>& cost,
                        double eps_final) {
  const double kInf = std::numeric_limits<double>::infinity();
  double maxc = 0.0;
  for (double c : cost) maxc = std::max(maxc, std::abs(c));
  std::vector<double> price(n, 0.0);
  std::vector<int> owner(n), assign(n);
  double eps = std::max(maxc / 4.0, eps_final);
  while (true) {
    std::fill(owner.begin(), owner.end(), -1);
    std::fill(assign.begin(), assign.end(), -1);
    std::vector<int> pending(n);
    std::iota(pending.begin(), pending.end(), 0);
    while (!pending.empty()) {
      const int i = pending.back();
      pending.pop_back();
      double best = -kInf, second = -kInf;
      int bj = 0;
      const double* row = &cost[static_cast<std::size_t>(i) * n];
      for (int j = 0; j < n; ++j) {
        const double val = -row[j] - price[j];
        if (val > best) {
          second = best;
          best = val;
          bj = j;
        } else if (val > second) {
          second = val;
        }
      }
      const double bid = (second == -kInf) ? eps : (best - second) + eps;
      price[bj] += bid;
      if (owner[bj] >= 0) {
        assign[owner[bj]] = -1;
        pending.push_back(owner[bj]);
      }
      owner[bj] = i;
      assign[i] = bj;
    }
    if (eps <= eps_final) break;
    eps = std::max(eps / 7.0, eps_final);
  }
  double total = 0.0;
  for (int i = 0; i < n; ++i)
    total += cost[static_cast<std::size_t>(i) * n + assign[i]];
  return total;
}

void check_emd_inputs(const PointCloud& a, const PointCloud& b) {
  if (a.empty() || b.empty())
    throw std::invalid_argument("emd: empty point cloud");
  if (a.size() != b.size())
    throw std::invalid_argument("emd: clouds must have equal sizes, got " +
                                std::to_string(a.size()) + " and " +
                                std::to_string(b.size()));
}

}  // namespace

double emd_exact(const PointCloud& a, const PointCloud& b) {
  check_emd_inputs(a, b);
  const int n = static_cast<int>(a.size());
  return hungarian_min_cost(n, euclidean_cost_matrix(a, b)) / n;
}

double emd_auction(const PointCloud& a, const PointCloud& b, double rel_err) {
  check_emd_inputs(a, b);
  const int n = static_cast<int>(a.size());
  const std::vector<double> cost = euclidean_cost_matrix(a, b);
  // Row-minimum sum lower-bounds the optimum, so n*eps_final <= rel_err*opt.
  double lb = 0.0, maxc = 0.0;
  for (int i = 0; i < n; ++i) {
    double m = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) {
      m = std::min(m, cost[static_cast<std::size_t>(i) * n + j]);
      maxc = std::max(maxc, cost[static_cast<std::size_t>(i) * n + j]);
    }
    lb += m;
  }
  const double eps_final =
      std::max(rel_err * lb / n, 1e-12 * (maxc + 1.0));
  return auction_min_cost(n, cost, eps_final) / n;
}

double emd(const PointCloud& a, const PointCloud& b) {
  check_emd_inputs(a, b);
  return a.size() <= 128 ? emd_exact(a, b) : emd_auction(a, b);
}

std::vector<std::vector<int>> knn(const PointCloud& p, int k) {
  const int n = static_cast<int>(p.size());
  if (k < 1 || k >= n)
    throw std::invalid_argument("knn: need 1 <= k < n, got k=" +
                                std::to_string(k) + " n=" + std::to_string(n));
  std::vector<std::vector<int>> out(n);
  std::vector<std::pair<double, int>> cand;
  cand.reserve(n - 1);
  for (int i = 0; i < n; ++i) {
    cand.clear();
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      cand.emplace_back(dist2(p.points[i], p.points[j]), j);
    }
    std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
    out[i].resize(k);
    for (int t = 0; t < k; ++t) out[i][t] = cand[t].second;
  }
  return out;
}

ad::Var kernel_correlation(const ad::Var& points, const ad::Var& kernels,
                           const std::vector<std::vector<int>>& neighbors,
                           double sigma) {
  if (!(sigma > 0.0))
    throw std::invalid_argument("kernel_correlation: sigma must be positive");
  if (points.shape().size() != 2 || points.shape()[1] != 3)
    throw std::invalid_argument("kernel_correlation: points must be [n,3]");
  if (kernels.shape().size() != 3 || kernels.shape()[2] != 3)
    throw std::invalid_argument("kernel_correlation: kernels must be [L,m,3]");
  const int n = points.shape()[0];
  const int kernel_count = kernels.shape()[0];
  const int m = kernels.shape()[1];
  if (static_cast<int>(neighbors.size()) != n)
    throw std::invalid_argument("kernel_correlation: neighbor rows != n");

  ad::Tape* tape = points.tape();
  const bool rg = points.requires_grad() || kernels.requires_grad();
  ad::Var out = tape->make_result({n, kernel_count}, rg);
  auto pn = points.node(), kn = kernels.node(), on = out.node();

  // Argmins in both chamfer directions, flattened per (point, kernel).
  auto best_nk = std::make_shared<std::vector<int>>();
  auto best_kn = std::make_shared<std::vector<int>>();
  auto nbr = std::make_shared<std::vector<std::vector<int>>>(neighbors);
  const double inv2s2 = 1.0 / (2.0 * sigma * sigma);

  std::vector<double> offsets;
  for (int i = 0; i < n; ++i) {
    const auto& ni = (*nbr)[i];
    const int kcount = static_cast<int>(ni.size());
    if (kcount == 0)
      throw std::invalid_argument("kernel_correlation: empty neighborhood");
    offsets.resize(3 * kcount);
    for (int t = 0; t < kcount; ++t) {
      const int j = ni[t];
      if (j < 0 || j >= n || j == i)
        throw std::invalid_argument("kernel_correlation: bad neighbor index");
      for (int c = 0; c < 3; ++c)
        offsets[3 * t + c] = pn->value[3 * j + c] - pn->value[3 * i + c];
    }
    std::vector<double> mins1(kcount), mins2(m);
    for (int l = 0; l < kernel_count; ++l) {
      const double* kp = &kn->value[static_cast<std::size_t>(l) * m * 3];
      for (int t = 0; t < kcount; ++t) {
        double best = std::numeric_limits<double>::infinity();
        int bu = 0;
        for (int u = 0; u < m; ++u) {
          const double dx = offsets[3 * t] - kp[3 * u];
          const double dy = offsets[3 * t + 1] - kp[3 * u + 1];
          const double dz = offsets[3 * t + 2] - kp[3 * u + 2];
          const double d = dx * dx + dy * dy + dz * dz;
          if (d < best) {
            best = d;
            bu = u;
          }
        }
        mins1[t] = best;
        best_nk->push_back(bu);
      }
      for (int u = 0; u < m; ++u) {
        double best = std::numeric_limits<double>::infinity();
        int bt = 0;
        for (int t = 0; t < kcount; ++t) {
          const double dx = kp[3 * u] - offsets[3 * t];
          const double dy = kp[3 * u + 1] - offsets[3 * t + 1];
          const double dz = kp[3 * u + 2] - offsets[3 * t + 2];
          const double d = dx * dx + dy * dy + dz * dz;
          if (d < best) {
            best = d;
            bt = t;
          }
        }
        mins2[u] = best;
        best_kn->push_back(bt);
      }
      std::vector<double> s1 = mins1, s2 = mins2;
      const double d_cd = sorted_sum(s1) / (2.0 * kcount) + sorted_sum(s2) / (2.0 * m);
      on->value[static_cast<std::size_t>(i) * kernel_count + l] =
          std::exp(-d_cd / (2.0 * sigma * sigma));
    }
  }

  if (rg) {
    tape->record([pn, kn, on, best_nk, best_kn, nbr, n, kernel_count, m,
                  inv2s2]() {
      if (!on->grad) return;
      const auto& go = *on->grad;
      std::vector<double>* gp = pn->requires_grad ? &pn->ensure_grad() : nullptr;
      std::vector<double>* gk = kn->requires_grad ? &kn->ensure_grad() : nullptr;
      std::size_t pos_nk = 0, pos_kn = 0;
      std::vector<double> offsets;
      for (int i = 0; i < n; ++i) {
        const auto& ni = (*nbr)[i];
        const int kcount = static_cast<int>(ni.size());
        offsets.resize(3 * kcount);
        for (int t = 0; t < kcount; ++t)
          for (int c = 0; c < 3; ++c)
            offsets[3 * t + c] =
                pn->value[3 * ni[t] + c] - pn->value[3 * i + c];
        for (int l = 0; l < kernel_count; ++l) {
          const double* kp = &kn->value[static_cast<std::size_t>(l) * m * 3];
          const double y = on->value[static_cast<std::size_t>(i) * kernel_count + l];
          const double s =
              -go[static_cast<std::size_t>(i) * kernel_count + l] * y * inv2s2;
          const double s1 = s / kcount;  // d(term1)/2k contributes (x-y)/k
          const double s2 = s / m;
          for (int t = 0; t < kcount; ++t) {
            const int u = (*best_nk)[pos_nk + t];
            for (int c = 0; c < 3; ++c) {
              const double diff = offsets[3 * t + c] - kp[3 * u + c];
              const double g_off = s1 * diff;
              if (gp) {
                (*gp)[3 * ni[t] + c] += g_off;
                (*gp)[3 * i + c] -= g_off;
              }
              if (gk)
                (*gk)[static_cast<std::size_t>(l) * m * 3 + 3 * u + c] -= g_off;
            }
          }
          for (int u = 0; u < m; ++u) {
            const int t = (*best_kn)[pos_kn + u];
            for (int c = 0; c < 3; ++c) {
              const double diff = kp[3 * u + c] - offsets[3 * t + c];
              const double g_k = s2 * diff;
              if (gk)
                (*gk)[static_cast<std::size_t>(l) * m * 3 + 3 * u + c] += g_k;
              if (gp) {
                (*gp)[3 * ni[t] + c] -= g_k;
                (*gp)[3 * i + c] += g_k;
              }
            }
          }
          pos_nk += kcount;
          pos_kn += m;
        }
      }
    });
  }
  return out;
}

PointCloud normalize_unit_sphere(const PointCloud& p,
                                 NormalizeTransform* transform) {
  if (p.empty())
    throw std::invalid_argument("normalize_unit_sphere: empty cloud");
  Vec3 c{};
  for (const auto& pt : p.points) c += pt;
  c = c * (1.0 / static_cast<double>(p.size()));
  double r = 0.0;
  for (const auto& pt : p.points) r = std::max(r, (pt - c).norm());
  const double scale = r > 0.0 ? r : 1.0;
  PointCloud out;
  out.points.reserve(p.size());
  for (const auto& pt : p.points) out.points.push_back((pt - c) * (1.0 / scale));
  if (transform) *transform = {c, scale};
  return out;
}

PointCloud denormalize(const PointCloud& p, const NormalizeTransform& t) {
  PointCloud out;
  out.points.reserve(p.size());
  for (const auto& pt : p.points) out.points.push_back(pt * t.scale + t.center);
  return out;
}

PointCloud sample_mesh_surface(const Mesh& m, int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_mesh_surface: n must be >= 1");
  if (m.faces.empty())
    throw std::invalid_argument("sample_mesh_surface: mesh has no faces");
  std::vector<double> cdf(m.faces.size());
  double total = 0.0;
  for (std::size_t f = 0; f < m.faces.size(); ++f) {
    const auto& face = m.faces[f];
    const Vec3& a = m.vertices[face[0]];
    const Vec3& b = m.vertices[face[1]];
    const Vec3& c = m.vertices[face[2]];
    total += 0.5 * (b - a).cross(c - a).norm();
    cdf[f] = total;
  }
  if (!(total > 0.0))
    throw std::invalid_argument("sample_mesh_surface: degenerate mesh (zero area)");
  Rng rng(seed);
  PointCloud out;
  out.points.reserve(n);
  for (int s = 0; s < n; ++s) {
    const double u = rng.uniform() * total;
    const std::size_t f =
        std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin();
    const auto& face = m.faces[std::min(f, m.faces.size() - 1)];
    const Vec3& a = m.vertices[face[0]];
    const Vec3& b = m.vertices[face[1]];
    const Vec3& c = m.vertices[face[2]];
    double u1 = rng.uniform(), u2 = rng.uniform();
    if (u1 + u2 > 1.0) {
      u1 = 1.0 - u1;
      u2 = 1.0 - u2;
    }
    out.points.push_back(a + (b - a) * u1 + (c - a) * u2);
  }
  return out;
}

namespace {

void check_positive(std::initializer_list<double> vals, const char* what) {
  for (double v : vals)
    if (!(v > 0.0))
      throw std::invalid_argument(std::string(what) +
                                  ": parameters must be positive");
}

Vec3 unit_direction(Rng& rng) {
  while (true) {
    Vec3 v{rng.normal(), rng.normal(), rng.normal()};
    const double n = v.norm();
    if (n > 1e-12) return v * (1.0 / n);
  }
}

}  // namespace

PointCloud sphere_surface(double radius, int n, std::uint64_t seed) {
  check_positive({radius}, "sphere_surface");
  Rng rng(seed);
  PointCloud out;
  out.points.reserve(n);
  for (int i = 0; i < n; ++i) out.points.push_back(unit_direction(rng) * radius);
  return out;
}

PointCloud ellipsoid_surface(double a, double b, double c, int n,
                             std::uint64_t seed) {
  check_positive({a, b, c}, "ellipsoid_surface");
  Rng rng(seed);
  PointCloud out;
  out.points.reserve(n);
  for (int i = 0; i < n; ++i) {
    const Vec3 u = unit_direction(rng);
    out.points.push_back({a * u.x, b * u.y, c * u.z});
  }
  return out;
}

PointCloud box_surface(double hx, double hy, double hz, int n,
                       std::uint64_t seed) {
  check_positive({hx, hy, hz}, "box_surface");
  Rng rng(seed);
  // Face pairs +-x, +-y, +-z weighted by area.
  const double areas[3] = {hy * hz, hx * hz, hx * hy};
  const double total = 2.0 * (areas[0] + areas[1] + areas[2]);
  const double h[3] = {hx, hy, hz};
  PointCloud out;
  out.points.reserve(n);
  for (int i = 0; i < n; ++i) {
    double u = rng.uniform() * total;
    int axis = 0;
    double sign = 1.0;
    for (int a2 = 0; a2 < 3; ++a2) {
      if (u < 2.0 * areas[a2]) {
        axis = a2;
        sign = u < areas[a2] ? 1.0 : -1.0;
        break;
      }
      u -= 2.0 * areas[a2];
    }
    double coord[3];
    for (int c = 0; c < 3; ++c)
      coord[c] = c == axis ? sign * h[c] : rng.uniform(-h[c], h[c]);
    out.points.push_back({coord[0], coord[1], coord[2]});
  }
  return out;
}

PointCloud torus_surface(double major, double minor, int n, std::uint64_t seed) {
  check_positive({major, minor}, "torus_surface");
  if (!(minor < major))
    throw std::invalid_argument("torus_surface: need minor < major radius");
  Rng rng(seed);
  PointCloud out;
  out.points.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double v = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double ring = major + minor * std::cos(v);
    out.points.push_back(
        {ring * std::cos(u), ring * std::sin(u), minor * std::sin(v)});
  }
  return out;
}

PointCloud synthetic_shape(const std::string& family,
                           const std::vector<double>& params, int n,
                           std::uint64_t seed) {
  auto want = [&](std::size_t k) {
    if (params.size() != k)
      throw std::invalid_argument("synthetic_shape: family '" + family +
                                  "' expects " + std::to_string(k) +
                                  " parameters");
  };
  if (family == "sphere") {
    want(1);
    return sphere_surface(params[0], n, seed);
  }
  if (family == "ellipsoid") {
    want(3);
    return ellipsoid_surface(params[0], params[1], params[2], n, seed);
  }
  if (family == "box") {
    want(3);
    return box_surface(params[0], params[1], params[2], n, seed);
  }
  if (family == "torus") {
    want(2);
    return torus_surface(params[0], params[1], n, seed);
  }
  throw std::invalid_argument("synthetic_shape: unknown family '" + family + "'");
}

PointCloud crop_halfspace(const PointCloud& p, Vec3 direction,
                          double keep_fraction, int min_points) {
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0))
    throw std::invalid_argument("crop_halfspace: keep_fraction must be in (0,1]");
  const double dn = direction.norm();
  if (!(dn > 0.0))
    throw std::invalid_argument("crop_halfspace: zero direction");
  const int n = static_cast<int>(p.size());
  if (n < min_points)
    throw std::invalid_argument("crop_halfspace: cloud smaller than min_points");
  direction = direction * (1.0 / dn);
  int count = static_cast<int>(std::llround(keep_fraction * n));
  count = std::max(count, min_points);
  count = std::max(count, 1);
  count = std::min(count, n);
  std::vector<std::pair<double, int>> proj(n);
  for (int i = 0; i < n; ++i) proj[i] = {p.points[i].dot(direction), i};
  std::partial_sort(proj.begin(), proj.begin() + count, proj.end(),
                    [](const auto& a, const auto& b) {
                      if (a.first != b.first) return a.first > b.first;
                      return a.second < b.second;
                    });
  std::vector<int> keep(count);
  for (int i = 0; i < count; ++i) keep[i] = proj[i].second;
  std::sort(keep.begin(), keep.end());
  PointCloud out;
  out.points.reserve(count);
  for (int idx : keep) out.points.push_back(p.points[idx]);
  return out;
}

}  // namespace gig::geom
