#include "adaptcs/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace adaptcs {

const std::array<std::string, kNumFeatures>& feature_names() {
    static const auto names = [] {
        constexpr std::array<const char*, kFeaturesPerAxis> base{"amp", "med", "mn",  "max", "min",
                                                                 "p2p", "var", "std", "rms", "s2e"};
        constexpr std::array<char, 3> axes{'X', 'Y', 'Z'};
        std::array<std::string, kNumFeatures> out;
        for (int f = 0; f < kFeaturesPerAxis; ++f)
            for (int a = 0; a < 3; ++a)
                out[static_cast<std::size_t>(f * 3 + a)] = std::string(base[static_cast<std::size_t>(f)]) + axes[static_cast<std::size_t>(a)];
        return out;
    }();
    return names;
}

int feature_index_by_name(const std::string& name) {
    const auto& names = feature_names();
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return static_cast<int>(i);
    throw std::invalid_argument("unknown feature '" + name + "'");
}

AxisFeatures extract(std::span<const double> x, FeatureKinds which) {
    if (x.size() < 2) throw std::invalid_argument("feature extraction needs at least 2 samples");
    for (double v : x)
        if (!std::isfinite(v)) throw std::invalid_argument("feature extraction: non-finite sample");

    const double n = static_cast<double>(x.size());
    double lo = x[0], hi = x[0], sum = 0.0, sumsq = 0.0, absmax = 0.0;
    for (double v : x) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        sum += v;
        sumsq += v * v;
        absmax = std::max(absmax, std::abs(v));
    }
    const double mean = sum / n;
    // Two-pass variance for accuracy.
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    const double var = ss / n;

    AxisFeatures out;
    out.mask = which;
    auto set = [&](Feature f, double v) {
        if (which.test(static_cast<std::size_t>(f))) out.values[static_cast<std::size_t>(f)] = v;
    };
    set(Feature::amp, absmax);
    if (which.test(static_cast<std::size_t>(Feature::med))) {
        std::vector<double> sorted(x.begin(), x.end());
        const std::size_t mid = sorted.size() / 2;
        std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(mid), sorted.end());
        double med = sorted[mid];
        if (sorted.size() % 2 == 0) {
            const double lower = *std::max_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(mid));
            med = 0.5 * (lower + med);
        }
        out.values[static_cast<std::size_t>(Feature::med)] = med;
    }
    set(Feature::mn, mean);
    set(Feature::max, hi);
    set(Feature::min, lo);
    set(Feature::p2p, hi - lo);
    set(Feature::var, var);
    set(Feature::std, std::sqrt(var));
    set(Feature::rms, std::sqrt(sumsq / n));
    set(Feature::s2e, x.back() - x.front());
    return out;
}

FeatureSelection::FeatureSelection(std::vector<int> indices) : indices_(std::move(indices)) {
    std::sort(indices_.begin(), indices_.end());
    indices_.erase(std::unique(indices_.begin(), indices_.end()), indices_.end());
    for (int i : indices_)
        if (i < 0 || i >= kNumFeatures) throw std::invalid_argument("feature index out of range");
}

FeatureSelection FeatureSelection::all() {
    std::vector<int> idx(kNumFeatures);
    for (int i = 0; i < kNumFeatures; ++i) idx[static_cast<std::size_t>(i)] = i;
    return FeatureSelection(std::move(idx));
}

FeatureSelection FeatureSelection::reduced() {
    std::vector<int> idx;
    for (Feature f : {Feature::med, Feature::mn})
        for (int a = 0; a < 3; ++a) idx.push_back(feature_index(f, a));
    return FeatureSelection(std::move(idx));
}

FeatureSelection FeatureSelection::from_mask(const std::bitset<kNumFeatures>& mask) {
    std::vector<int> idx;
    for (int i = 0; i < kNumFeatures; ++i)
        if (mask.test(static_cast<std::size_t>(i))) idx.push_back(i);
    return FeatureSelection(std::move(idx));
}

std::bitset<kNumFeatures> FeatureSelection::mask() const {
    std::bitset<kNumFeatures> m;
    for (int i : indices_) m.set(static_cast<std::size_t>(i));
    return m;
}

std::string FeatureSelection::label() const {
    std::string out;
    for (int i : indices_) {
        if (!out.empty()) out += '+';
        out += feature_names()[static_cast<std::size_t>(i)];
    }
    return out;
}

FeatureVector extract_segment(const std::array<std::span<const double>, 3>& axes,
                              const FeatureSelection& which) {
    std::array<FeatureKinds, 3> kinds;
    for (int i : which.indices()) kinds[static_cast<std::size_t>(i % 3)].set(static_cast<std::size_t>(i / 3));
    FeatureVector fv;
    for (int a = 0; a < 3; ++a) {
        const auto& k = kinds[static_cast<std::size_t>(a)];
        if (k.none()) continue;
        const AxisFeatures af = extract(axes[static_cast<std::size_t>(a)], k);
        for (int f = 0; f < kFeaturesPerAxis; ++f) {
            if (!k.test(static_cast<std::size_t>(f))) continue;
            const auto idx = static_cast<std::size_t>(f * 3 + a);
            fv.values[idx] = af.values[static_cast<std::size_t>(f)];
            fv.mask.set(idx);
        }
    }
    return fv;
}

FeatureVector extract_segment(const std::array<std::vector<double>, 3>& axes,
                              const FeatureSelection& which) {
    return extract_segment(std::array<std::span<const double>, 3>{axes[0], axes[1], axes[2]}, which);
}

std::vector<double> project(const FeatureVector& fv, const FeatureSelection& which) {
    std::vector<double> out;
    out.reserve(which.size());
    for (int i : which.indices()) {
        if (!fv.has(i))
            throw std::invalid_argument("feature " + feature_names()[static_cast<std::size_t>(i)] + " not populated");
        out.push_back(fv[i]);
    }
    return out;
}

std::string feature_csv_header() {
    std::string out;
    for (const auto& n : feature_names()) {
        if (!out.empty()) out += ',';
        out += n;
    }
    return out;
}

std::string feature_csv_row(const FeatureVector& fv) {
    std::string out;
    char buf[32];
    for (int i = 0; i < kNumFeatures; ++i) {
        if (i) out += ',';
        if (fv.has(i)) {
            std::snprintf(buf, sizeof buf, "%.17g", fv[i]);
            out += buf;
        }
    }
    return out;
}

}  // namespace adaptcs
