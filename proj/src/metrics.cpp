#include "gig/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace gig::metrics {

namespace {

std::vector<double> occupancy_histogram(const CloudSet& set, int grid) {
  std::vector<double> hist(static_cast<std::size_t>(grid) * grid * grid, 0.0);
  double total = 0.0;
  for (const auto& cloud : set) {
    for (const auto& p : cloud.points) {
      auto bin = [grid](double v) {
        int idx = static_cast<int>(std::floor((v + 1.0) * 0.5 * grid));
        return std::clamp(idx, 0, grid - 1);
      };
      hist[(static_cast<std::size_t>(bin(p.x)) * grid + bin(p.y)) * grid + bin(p.z)] += 1.0;
      total += 1.0;
    }
  }
  if (total > 0.0)
    for (auto& h : hist) h /= total;
  return hist;
}

}  // namespace

double jsd(const CloudSet& a, const CloudSet& b, int grid) {
  if (a.empty() || b.empty())
    throw std::invalid_argument("jsd: empty cloud set");
  if (grid < 1) throw std::invalid_argument("jsd: grid must be >= 1");
  const std::vector<double> p = occupancy_histogram(a, grid);
  const std::vector<double> q = occupancy_histogram(b, grid);
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0.0) acc += 0.5 * p[i] * std::log(p[i] / m);
    if (q[i] > 0.0) acc += 0.5 * q[i] * std::log(q[i] / m);
  }
  return acc;
}

std::vector<std::vector<double>> pairwise_distances(const CloudSet& reference,
                                                    const CloudSet& generated,
                                                    PairDistance metric) {
  if (reference.empty() || generated.empty())
    throw std::invalid_argument("pairwise_distances: empty cloud set");
  std::vector<std::vector<double>> dist(reference.size(),
                                        std::vector<double>(generated.size()));
  for (std::size_t i = 0; i < reference.size(); ++i)
    for (std::size_t j = 0; j < generated.size(); ++j)
      dist[i][j] = metric == PairDistance::kChamfer
                       ? geom::chamfer_distance(reference[i], generated[j])
                       : geom::emd(reference[i], generated[j]);
  return dist;
}

double mmd_from_matrix(const std::vector<std::vector<double>>& dist) {
  double acc = 0.0;
  for (const auto& row : dist)
    acc += *std::min_element(row.begin(), row.end());
  return acc / static_cast<double>(dist.size());
}

double mmd(const CloudSet& reference, const CloudSet& generated, PairDistance m) {
  return mmd_from_matrix(pairwise_distances(reference, generated, m));
}

double coverage_from_matrix(const std::vector<std::vector<double>>& dist) {
  const std::size_t nref = dist.size();
  const std::size_t ngen = dist.front().size();
  std::vector<char> matched(nref, 0);
  for (std::size_t j = 0; j < ngen; ++j) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < nref; ++i) {
      if (dist[i][j] < best_d) {
        best_d = dist[i][j];
        best = i;
      }
    }
    matched[best] = 1;
  }
  double count = 0.0;
  for (char c : matched) count += c;
  return 100.0 * count / static_cast<double>(nref);
}

double coverage(const CloudSet& reference, const CloudSet& generated,
                PairDistance m) {
  return coverage_from_matrix(pairwise_distances(reference, generated, m));
}

const MetricRow& MetricReport::row(const std::string& metric) const {
  for (const auto& r : rows)
    if (r.metric == metric) return r;
  throw std::invalid_argument("metric report: no row '" + metric + "'");
}

std::string MetricReport::to_text() const {
  std::string out;
  out += "# generative evaluation report\n";
  out += "# mmd direction: reference->generated (per-reference minimum, averaged)\n";
  out += "# jsd: natural log over 28^3 occupancy voxels, bounded by ln 2\n";
  char buf[96];
  for (const auto& r : rows) {
    for (std::size_t k = 0; k < r.repeats.size(); ++k) {
      std::snprintf(buf, sizeof(buf), "%s,%zu,%.6g\n", r.metric.c_str(), k + 1,
                    r.repeats[k]);
      out += buf;
    }
    std::snprintf(buf, sizeof(buf), "%s,mean,%.6g\n", r.metric.c_str(), r.mean);
    out += buf;
  }
  return out;
}

namespace {

MetricReport build_report(const std::vector<std::array<double, 5>>& per_repeat) {
  static const char* names[5] = {"jsd", "mmd_cd", "mmd_emd", "cov_cd", "cov_emd"};
  MetricReport report;
  for (int m = 0; m < 5; ++m) {
    MetricRow row;
    row.metric = names[m];
    for (const auto& rep : per_repeat) row.repeats.push_back(rep[m]);
    double acc = 0.0;
    for (double v : row.repeats) acc += v;
    row.mean = acc / static_cast<double>(row.repeats.size());
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::array<double, 5> evaluate_one(const CloudSet& reference,
                                   const CloudSet& generated) {
  const auto cd = pairwise_distances(reference, generated, PairDistance::kChamfer);
  const auto em = pairwise_distances(reference, generated, PairDistance::kEmd);
  return {jsd(reference, generated), mmd_from_matrix(cd), mmd_from_matrix(em),
          coverage_from_matrix(cd), coverage_from_matrix(em)};
}

}  // namespace

MetricReport evaluation_protocol(
    const std::function<geom::PointCloud(Rng&)>& sample_cloud,
    const CloudSet& reference, std::uint64_t seed, int repeats, int multiplier) {
  if (reference.empty())
    throw std::invalid_argument("evaluation_protocol: empty reference set");
  if (repeats < 1 || multiplier < 1)
    throw std::invalid_argument("evaluation_protocol: repeats/multiplier >= 1");
  std::vector<std::array<double, 5>> per_repeat;
  for (int r = 0; r < repeats; ++r) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    CloudSet generated;
    const std::size_t count = reference.size() * static_cast<std::size_t>(multiplier);
    generated.reserve(count);
    for (std::size_t i = 0; i < count; ++i) generated.push_back(sample_cloud(rng));
    per_repeat.push_back(evaluate_one(reference, generated));
  }
  return build_report(per_repeat);
}

MetricReport evaluate_sets(const CloudSet& reference, const CloudSet& generated) {
  return build_report({evaluate_one(reference, generated)});
}

}  // namespace gig::metrics
