#include "adaptcs/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>

#include "adaptcs/rng.hpp"

namespace adaptcs {

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

std::size_t count_distinct(const PointSet& points) {
    std::vector<const std::vector<double>*> ptrs;
    ptrs.reserve(points.size());
    for (const auto& p : points) ptrs.push_back(&p);
    std::sort(ptrs.begin(), ptrs.end(), [](auto* a, auto* b) { return *a < *b; });
    return static_cast<std::size_t>(
        std::unique(ptrs.begin(), ptrs.end(), [](auto* a, auto* b) { return *a == *b; }) - ptrs.begin());
}

}  // namespace

bool on_cr_grid(int cr) { return cr >= 0 && cr <= 96 && cr % kCrStep == 0; }

int nearest(const PointSet& centroids, std::span<const double> point) {
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < centroids.size(); ++j) {
        const double d = sq_dist(centroids[j], point);
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(j);
        }
    }
    return best;
}

KMeansResult kmeans_fit(const PointSet& points, int k, std::uint64_t seed, int max_iter) {
    if (k < 2) throw std::invalid_argument("k-means needs k >= 2");
    if (max_iter < 1) throw std::invalid_argument("k-means needs max_iter >= 1");
    if (points.empty()) throw std::invalid_argument("k-means on empty point set");
    const std::size_t dim = points.front().size();
    if (dim == 0) throw std::invalid_argument("k-means on zero-dimensional points");
    for (const auto& p : points)
        if (p.size() != dim) throw std::invalid_argument("k-means: inconsistent point dimension");
    if (count_distinct(points) < static_cast<std::size_t>(k))
        throw std::invalid_argument("k-means: fewer distinct points than clusters");

    const std::size_t n = points.size();
    const auto ku = static_cast<std::size_t>(k);
    Rng rng(seed);

    // k-means++ seeding.
    PointSet centroids;
    centroids.push_back(points[rng.uniform_index(n)]);
    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) d2[i] = sq_dist(points[i], centroids[0]);
    while (centroids.size() < ku) {
        const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
        double target = rng.uniform01() * total;
        std::size_t pick = n;
        for (std::size_t i = 0; i < n; ++i) {
            if (d2[i] <= 0.0) continue;
            pick = i;
            target -= d2[i];
            if (target < 0.0) break;
        }
        centroids.push_back(points[pick]);
        for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], sq_dist(points[i], centroids.back()));
    }

    KMeansResult res;
    std::vector<int> assignment(n, -1), previous;
    for (int it = 1; it <= max_iter; ++it) {
        double wcss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            assignment[i] = nearest(centroids, points[i]);
            wcss += sq_dist(points[i], centroids[static_cast<std::size_t>(assignment[i])]);
        }
        res.wcss_trace.push_back(wcss);
        res.iterations = it;
        if (assignment == previous) break;
        previous = assignment;

        PointSet sums(ku, std::vector<double>(dim, 0.0));
        std::vector<std::size_t> counts(ku, 0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto c = static_cast<std::size_t>(assignment[i]);
            ++counts[c];
            for (std::size_t d = 0; d < dim; ++d) sums[c][d] += points[i][d];
        }
        for (std::size_t c = 0; c < ku; ++c) {
            if (counts[c] == 0) continue;
            for (std::size_t d = 0; d < dim; ++d) centroids[c][d] = sums[c][d] / static_cast<double>(counts[c]);
        }
        for (std::size_t c = 0; c < ku; ++c) {
            if (counts[c] != 0) continue;
            // Reseed an empty cluster at the worst-served point.
            std::size_t far = 0;
            double far_d = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double d = sq_dist(points[i], centroids[static_cast<std::size_t>(nearest(centroids, points[i]))]);
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            centroids[c] = points[far];
        }
    }

    for (std::size_t i = 0; i < n; ++i) assignment[i] = nearest(centroids, points[i]);
    res.model.k = k;
    res.model.centroids = std::move(centroids);
    res.model.seed = seed;
    res.model.counts.assign(ku, 0);
    for (int a : assignment) ++res.model.counts[static_cast<std::size_t>(a)];
    res.assignment = std::move(assignment);
    return res;
}

int assign(const ClusterModel& model, const FeatureVector& fv) {
    if (model.centroids.empty()) throw std::invalid_argument("assign: empty cluster model");
    const auto point = project(fv, model.features);
    return nearest(model.centroids, point);
}

double davies_bouldin(const ClusterModel& model, const PointSet& points) {
    const std::size_t k = model.centroids.size();
    if (k < 2) throw std::invalid_argument("Davies-Bouldin needs at least two clusters");
    std::vector<double> scatter(k, 0.0);
    std::vector<std::size_t> counts(k, 0);
    for (const auto& p : points) {
        const auto c = static_cast<std::size_t>(nearest(model.centroids, p));
        scatter[c] += std::sqrt(sq_dist(p, model.centroids[c]));
        ++counts[c];
    }
    for (std::size_t i = 0; i < k; ++i) {
        if (counts[i] == 0) throw std::invalid_argument("Davies-Bouldin: empty cluster");
        scatter[i] /= static_cast<double>(counts[i]);
    }
    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        double worst = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            if (i == j) continue;
            const double d = std::sqrt(sq_dist(model.centroids[i], model.centroids[j]));
            if (d == 0.0) throw std::invalid_argument("Davies-Bouldin: coincident centroids");
            worst = std::max(worst, (scatter[i] + scatter[j]) / d);
        }
        total += worst;
    }
    return total / static_cast<double>(k);
}

SortedCentroidLookup::SortedCentroidLookup(const ClusterModel& model) {
    if (model.centroids.empty()) throw std::invalid_argument("interval lookup on empty model");
    for (const auto& c : model.centroids)
        if (c.size() != 1) throw std::invalid_argument("interval lookup needs a one-dimensional model");
    std::vector<std::pair<double, int>> order;
    for (std::size_t j = 0; j < model.centroids.size(); ++j)
        order.emplace_back(model.centroids[j][0], static_cast<int>(j));
    std::sort(order.begin(), order.end());
    // Equal centroids: the lowest id always wins.
    order.erase(std::unique(order.begin(), order.end(),
                            [](const auto& a, const auto& b) { return a.first == b.first; }),
                order.end());
    for (std::size_t i = 0; i < order.size(); ++i) {
        ids_.push_back(order[i].second);
        if (i + 1 < order.size()) {
            bounds_.push_back(0.5 * (order[i].first + order[i + 1].first));
            tie_ids_.push_back(std::min(order[i].second, order[i + 1].second));
        }
    }
}

int SortedCentroidLookup::operator()(double value) const {
    const auto it = std::lower_bound(bounds_.begin(), bounds_.end(), value);
    const auto idx = static_cast<std::size_t>(it - bounds_.begin());
    if (it != bounds_.end() && *it == value) return tie_ids_[idx];
    return ids_[idx];
}

MergeResult merge_equal_adjacent(const ClusterModel& model, const std::vector<int>& crs) {
    const std::size_t k = model.centroids.size();
    if (crs.size() != k) throw std::invalid_argument("merge: one ratio per cluster required");
    MergeResult out;
    out.model = model;
    out.crs = crs;
    out.mapping.resize(k);
    std::iota(out.mapping.begin(), out.mapping.end(), 0);
    if (k == 0 || model.centroids[0].size() != 1) {
        out.adjacency_defined = false;
        return out;
    }

    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return model.centroids[a][0] < model.centroids[b][0]; });

    std::vector<std::vector<std::size_t>> runs;
    for (std::size_t i = 0; i < k; ++i) {
        if (i > 0 && crs[order[i]] == crs[order[i - 1]])
            runs.back().push_back(order[i]);
        else
            runs.push_back({order[i]});
    }
    // Merged clusters keep the relative order of their smallest member id.
    std::sort(runs.begin(), runs.end(), [](const auto& a, const auto& b) {
        return *std::min_element(a.begin(), a.end()) < *std::min_element(b.begin(), b.end());
    });

    const bool have_counts = model.counts.size() == k;
    out.model.centroids.clear();
    out.model.counts.clear();
    out.crs.clear();
    for (std::size_t r = 0; r < runs.size(); ++r) {
        double num = 0.0, den = 0.0;
        std::size_t members = 0;
        for (std::size_t id : runs[r]) {
            const double w = have_counts ? static_cast<double>(model.counts[id]) : 1.0;
            num += w * model.centroids[id][0];
            den += w;
            members += have_counts ? model.counts[id] : 0;
            out.mapping[id] = static_cast<int>(r);
        }
        if (den == 0.0) {
            for (std::size_t id : runs[r]) num += model.centroids[id][0];
            den = static_cast<double>(runs[r].size());
        }
        out.model.centroids.push_back({num / den});
        if (have_counts) out.model.counts.push_back(members);
        out.crs.push_back(crs[runs[r].front()]);
    }
    out.model.k = static_cast<int>(runs.size());
    return out;
}

double cluster_efficiency(const std::vector<int>& crs) {
    if (crs.empty()) throw std::invalid_argument("cluster efficiency of empty assignment");
    const std::set<int> unique(crs.begin(), crs.end());
    return 100.0 * static_cast<double>(unique.size()) / static_cast<double>(crs.size());
}

double weighted_mean_cr(const std::vector<std::size_t>& counts, const std::vector<int>& crs) {
    if (counts.size() != crs.size()) throw std::invalid_argument("weighted mean cr: size mismatch");
    double num = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < crs.size(); ++i) {
        num += static_cast<double>(counts[i]) * crs[i];
        n += counts[i];
    }
    if (n == 0) throw std::invalid_argument("weighted mean cr: no instances");
    return num / static_cast<double>(n);
}

}  // namespace adaptcs
