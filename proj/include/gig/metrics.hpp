#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gig/pointcloud.hpp"
#include "gig/rng.hpp"

namespace gig::metrics {

using CloudSet = std::vector<geom::PointCloud>;

enum class PairDistance { kChamfer, kEmd };

/// Jensen-Shannon divergence (natural log, bounded by ln 2) between per-set
/// voxel occupancy histograms on a grid^3 discretization of [-1,1]^3.
/// Points outside the cube are clamped to the boundary voxel.
double jsd(const CloudSet& a, const CloudSet& b, int grid = 28);

/// dist[i][j] = distance(reference[i], generated[j]).
std::vector<std::vector<double>> pairwise_distances(const CloudSet& reference,
                                                    const CloudSet& generated,
                                                    PairDistance metric);

// Minimum match distance: for each reference cloud the minimum distance to
// any generated cloud, averaged over the reference set.
double mmd_from_matrix(const std::vector<std::vector<double>>& dist);
double mmd(const CloudSet& reference, const CloudSet& generated, PairDistance m);

// Coverage: fraction (percent) of reference clouds that are the nearest
// reference of at least one generated cloud; ties pick the lowest index.
double coverage_from_matrix(const std::vector<std::vector<double>>& dist);
double coverage(const CloudSet& reference, const CloudSet& generated, PairDistance m);

struct MetricRow {
  std::string metric;
  std::vector<double> repeats;
  double mean = 0.0;
};

struct MetricReport {
  std::vector<MetricRow> rows;
  /// "metric,repeat,value" rows plus "metric,mean,value", 6 significant
  /// digits, with '#' comment header lines.
  std::string to_text() const;
  const MetricRow& row(const std::string& metric) const;
};

/// Samples repeats x (multiplier * |reference|) clouds from the sampler and
/// reports jsd / mmd_cd / mmd_emd / cov_cd / cov_emd per repeat and averaged.
/// Repeat r uses an Rng seeded with derive_seed(seed, r).
MetricReport evaluation_protocol(
    const std::function<geom::PointCloud(Rng&)>& sample_cloud,
    const CloudSet& reference, std::uint64_t seed, int repeats = 3,
    int multiplier = 3);

/// Single-shot set-vs-set report (one "repeat").
MetricReport evaluate_sets(const CloudSet& reference, const CloudSet& generated);

}  // namespace gig::metrics
