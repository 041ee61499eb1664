#pragma once

#include <array>
#include <bitset>
#include <span>
#include <string>
#include <vector>

namespace adaptcs {

/// Per-axis morphological statistics, in canonical order.
enum class Feature : int { amp = 0, med, mn, max, min, p2p, var, std, rms, s2e };

inline constexpr int kFeaturesPerAxis = 10;
inline constexpr int kNumFeatures = 30;

/// Index of (feature, axis) in a FeatureVector: feature-major, axes X,Y,Z.
constexpr int feature_index(Feature f, int axis) { return static_cast<int>(f) * 3 + axis; }

/// Canonical column names ampX, ampY, ampZ, medX, ... s2eZ.
const std::array<std::string, kNumFeatures>& feature_names();
int feature_index_by_name(const std::string& name);

using FeatureKinds = std::bitset<kFeaturesPerAxis>;

struct AxisFeatures {
    std::array<double, kFeaturesPerAxis> values{};
    FeatureKinds mask;

    double operator[](Feature f) const { return values[static_cast<std::size_t>(f)]; }
};

/// Statistics of one axis. amp is max |x|; var is the population variance;
/// s2e is last minus first. Throws std::invalid_argument on fewer than two
/// samples or non-finite input.
AxisFeatures extract(std::span<const double> sequence, FeatureKinds which = FeatureKinds().set());

struct FeatureVector {
    std::array<double, kNumFeatures> values{};
    std::bitset<kNumFeatures> mask;

    double operator[](int i) const { return values[static_cast<std::size_t>(i)]; }
    bool has(int i) const { return mask.test(static_cast<std::size_t>(i)); }
};

/// Sorted, duplicate-free subset of 0..29.
class FeatureSelection {
public:
    FeatureSelection() = default;
    explicit FeatureSelection(std::vector<int> indices);
    static FeatureSelection all();
    /// med and mn on every axis, the reduced six-feature set.
    static FeatureSelection reduced();
    static FeatureSelection from_mask(const std::bitset<kNumFeatures>& mask);

    const std::vector<int>& indices() const { return indices_; }
    std::size_t size() const { return indices_.size(); }
    bool empty() const { return indices_.empty(); }
    std::bitset<kNumFeatures> mask() const;
    /// Names joined with '+', e.g. "mnX" or "medY+mnZ".
    std::string label() const;

    bool operator==(const FeatureSelection&) const = default;

private:
    std::vector<int> indices_;
};

/// Applies extract() per axis; only selected entries are populated.
FeatureVector extract_segment(const std::array<std::span<const double>, 3>& axes,
                              const FeatureSelection& which);
FeatureVector extract_segment(const std::array<std::vector<double>, 3>& axes,
                              const FeatureSelection& which);

/// Selected entries as a dense vector; throws if any is unpopulated.
std::vector<double> project(const FeatureVector& fv, const FeatureSelection& which);

/// CSV header line for the full 30-column layout (no trailing newline).
std::string feature_csv_header();
std::string feature_csv_row(const FeatureVector& fv);

}  // namespace adaptcs
