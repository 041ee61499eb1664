#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "adaptcs/clustering.hpp"
#include "adaptcs/cs.hpp"
#include "adaptcs/dataset.hpp"
#include "adaptcs/energy.hpp"
#include "adaptcs/forest.hpp"

namespace adaptcs {

/// Signal-type model and ratio per cluster for one location.
struct LutEntry {
    ClusterModel model;
    std::vector<int> crs;
    /// True when equal-ratio neighbours were collapsed.
    bool merged = false;
    /// Count-weighted mean ratio over the training members.
    double mean_cr = 0.0;
};

struct LookupTable {
    std::map<Location, LutEntry> entries;

    /// Throws DomainError unless all five locations are present with on-grid
    /// ratios and one ratio per centroid.
    void validate() const;
    const LutEntry& at(Location loc) const;
    /// (cluster id, ratio) for a feature vector at a location.
    std::pair<int, int> lookup(Location loc, const FeatureVector& fv) const;
    /// Union of the features any entry needs.
    FeatureSelection features() const;
};

nlohmann::json to_json(const LookupTable& lut);
LookupTable lut_from_json(const nlohmann::json& j);

/// On-node state between consecutive segments.
struct NodeState {
    /// Ratio the sparse filter applies to the next segment.
    int current_cr = 0;
    std::uint64_t seed = 0;
    std::uint64_t step = 0;
};

struct NodeModels {
    const ForestModel* coarse = nullptr;  // trained on uncompressed features
    const LookupTable* lut = nullptr;
};

struct NodeOutput {
    CompressedSegment payload;
    Location predicted_location = Location::T;
    int cluster = 0;
    int filter_cr = 0;            // ratio used by the sparse filter
    std::size_t kept_samples = 0; // sparse-filter samples over three axes
    FeatureVector features;       // computed on the kept samples
};

/// One node cycle: sparse filter at the stale ratio, features on the kept
/// samples, coarse localization, signal-type lookup, then the segment is
/// coded with the freshly selected ratio and the state advances.
NodeOutput node_step(NodeState& state, const Segment& segment, const NodeModels& models);

/// Compresses a segment at a fixed ratio (percent removed, need not be on the
/// grid) through the measurement-matrix path.
CompressedSegment compress_segment(const Segment& segment, double cr_percent, std::uint64_t pattern_seed,
                                   Location location_hint = Location::T, int cluster = 0);

struct BackendModels {
    const ForestModel* fine_location = nullptr;
    std::map<Location, const ForestModel*> activity;  // per-location recognizers
};

struct BackendResult {
    std::array<std::vector<double>, 3> signal;
    FeatureVector features;
    Location fine_location = Location::T;
    int activity = 0;  // 1-based activity id
    bool converged = true;
};

/// Reconstructs each axis, extracts the 30 features, localizes, then runs the
/// recognizer of the predicted location.
BackendResult backend_step(const CompressedSegment& cs, const BackendModels& models, const RecoveryConfig& cfg = {});

struct ModeRow {
    Mode mode = Mode::baseline;
    Location location = Location::T;
    long long segments = 0;
    double mean_cr = 0.0;              // mean of emitted ratios
    double samples_per_segment = 0.0;  // transmitted, three axes
    long long transmitted_samples = 0;
    double ar_accuracy = 0.0;
    double fine_loc_accuracy = 0.0;
    std::optional<double> coarse_loc_accuracy;  // adaptive only
    long long over_compressed = 0;   // emitted ratio above the true-location choice
    long long under_compressed = 0;  // emitted ratio below it
    long long unconverged = 0;
    EnergyCounts counts;
    EnergyBreakdown energy;
    double savings = 0.0;  // versus the baseline row of the same location
};

struct RunReport {
    static constexpr int kSchemaVersion = 1;
    std::uint64_t seed = 0;
    int n_features = 30;
    std::optional<double> naive_cr;
    std::vector<ModeRow> rows;
    /// Node-side localization confusion over all adaptive steps.
    std::optional<ConfusionMatrix> coarse_confusion;

    const ModeRow* find(Mode m, Location loc) const;
    /// Unweighted means over locations of one mode.
    double mean_savings(Mode m) const;
    double mean_ar_accuracy(Mode m) const;
};

struct SimulationInputs {
    std::map<Location, std::vector<const Segment*>> streams;  // test segments per location, in order
    const ForestModel* coarse = nullptr;
    const LookupTable* lut = nullptr;
    BackendModels compressed_backend;  // used by naive and adaptive
    BackendModels raw_backend;         // used by baseline
    EnergyModel energy;
    std::optional<double> naive_cr;
    std::vector<Mode> modes{Mode::baseline, Mode::naive, Mode::adaptive};
    int n_features = 30;
    std::uint64_t seed = 0;
    RecoveryConfig recovery;
};

/// Replays every location's stream through each requested mode.
RunReport simulate(const SimulationInputs& in);

std::string report_csv(const RunReport& r);
nlohmann::json to_json(const RunReport& r);

}  // namespace adaptcs
