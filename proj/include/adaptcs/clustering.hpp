#pragma once

#include <cstdint>
#include <vector>

#include "adaptcs/dataset.hpp"
#include "adaptcs/features.hpp"

namespace adaptcs {

/// Points in selected-feature space, one row per point.
using PointSet = std::vector<std::vector<double>>;

/// Compression-ratio grid {0, 4, ..., 96}.
inline constexpr int kCrStep = 4;
inline constexpr int kCrLevels = 25;
inline constexpr int kMinClusters = 2;
inline constexpr int kMaxClusters = 25;
bool on_cr_grid(int cr);

struct ClusterModel {
    int k = 0;
    PointSet centroids;
    FeatureSelection features;
    Location location = Location::T;
    std::uint64_t seed = 0;
    std::vector<std::size_t> counts;  // training members per cluster

    std::size_t dimension() const { return features.size(); }
};

struct KMeansResult {
    ClusterModel model;
    std::vector<int> assignment;
    int iterations = 0;
    /// Within-cluster sum of squares after each Lloyd assignment step.
    std::vector<double> wcss_trace;
};

/// k-means++ seeding (D^2 sampling) followed by Lloyd iterations until the
/// assignment is a fixpoint or max_iter is reached. An emptied cluster is
/// reseeded with the point farthest from its centroid.
KMeansResult kmeans_fit(const PointSet& points, int k, std::uint64_t seed, int max_iter = 100);

/// Nearest centroid; ties go to the lowest cluster id.
int nearest(const PointSet& centroids, std::span<const double> point);
int assign(const ClusterModel& model, const FeatureVector& fv);

/// Mean over clusters of the worst (s_i + s_j) / d(c_i, c_j) ratio, with s_i
/// the mean member distance to centroid i. Points are attributed to their
/// nearest centroid. Throws on an empty cluster or coincident centroids.
double davies_bouldin(const ClusterModel& model, const PointSet& points);

/// Interval lookup over a one-dimensional model: equivalent to nearest()
/// including the tie rule, but a chain of threshold comparisons.
class SortedCentroidLookup {
public:
    explicit SortedCentroidLookup(const ClusterModel& model);
    int operator()(double value) const;

private:
    std::vector<double> bounds_;  // midpoints between consecutive sorted centroids
    std::vector<int> ids_;        // cluster id per interval
    std::vector<int> tie_ids_;    // id chosen exactly at each midpoint
};

struct MergeResult {
    ClusterModel model;
    std::vector<int> crs;
    /// old cluster id -> merged cluster id
    std::vector<int> mapping;
    bool adjacency_defined = true;
};

/// Collapses maximal runs of centroid-adjacent clusters sharing a ratio into
/// one cluster at their count-weighted mean. Only one-dimensional models have
/// an adjacency order; other models are returned unchanged.
MergeResult merge_equal_adjacent(const ClusterModel& model, const std::vector<int>& crs);

/// 100 * unique ratios / cluster count.
double cluster_efficiency(const std::vector<int>& crs);

/// Count-weighted mean ratio over clusters (weights = members per cluster).
double weighted_mean_cr(const std::vector<std::size_t>& counts, const std::vector<int>& crs);

}  // namespace adaptcs
