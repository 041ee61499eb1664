#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "adaptcs/cs.hpp"
#include "adaptcs/dataset.hpp"
#include "adaptcs/forest.hpp"
#include "adaptcs/nsga2.hpp"
#include "adaptcs/pipeline.hpp"
#include "adaptcs/problems.hpp"

namespace adaptcs {

/// Named sub-streams of one master seed.
struct Seeds {
    std::uint64_t master = 0;
    std::uint64_t dataset = 0, ge = 0, forest = 0, filter = 0;
    explicit Seeds(std::uint64_t m);
};

struct ScaleSettings {
    std::string name;
    int pop_size = 50;
    int gens_p1 = 60;
    int gens_p2 = 60;
    /// Keep every stride-th segment of each recording.
    int stride = 1;
};

/// "desk": population 50, 60 generations, about ten segments per recording.
/// "paper": population 250, 1000 and 500 generations, every segment.
ScaleSettings scale_settings(const std::string& scale, int max_segment_index);

inline constexpr double kTrainRatio = 0.8;
inline constexpr int kForestTrees = 100;
/// Compressed copies added per training segment when a recognizer must cope
/// with reconstructions.
inline constexpr int kMixedLevels = 3;
inline constexpr int kCvFolds = 10;

/// Corpus plus its deterministic train/test split and raw features.
class Workspace {
public:
    Workspace(Corpus corpus, std::uint64_t seed);

    const Corpus& corpus() const { return corpus_; }
    const std::vector<const Segment*>& train(Location loc) const;
    const std::vector<const Segment*>& test(Location loc) const;
    std::vector<const Segment*> train_all() const;
    std::vector<const Segment*> test_all() const;
    std::vector<Location> locations() const;
    /// All 30 features of the uncompressed segment.
    const FeatureVector& raw_features(const Segment& s) const;

private:
    Corpus corpus_;
    std::map<Location, std::vector<const Segment*>> train_, test_;
    std::unordered_map<const Segment*, FeatureVector> raw_;
};

/// Stable identity of a segment independent of its position in a corpus.
std::uint64_t segment_key(const Segment& s);

/// Memoized features of reconstructions, one per (segment, ratio level).
class ReconstructionCache {
public:
    explicit ReconstructionCache(std::uint64_t filter_seed, RecoveryConfig cfg = {}) : seed_(filter_seed), cfg_(cfg) {}

    /// Features after compressing at ratio level*4 and reconstructing.
    const FeatureVector& features(const Segment& s, int level);
    std::uint64_t pattern_seed(const Segment& s, int level) const;
    std::size_t size() const { return cache_.size(); }

private:
    std::uint64_t seed_;
    RecoveryConfig cfg_;
    std::unordered_map<std::uint64_t, FeatureVector> cache_;
};

/// Rows of selected raw features.
LabeledSet raw_rows(const Workspace& ws, const std::vector<const Segment*>& segs, bool label_location,
                    const FeatureSelection& sel = FeatureSelection::all());
/// Raw rows plus kMixedLevels reconstructions per segment at random levels.
LabeledSet mixed_rows(const Workspace& ws, ReconstructionCache& cache, const std::vector<const Segment*>& segs,
                      bool label_location, std::uint64_t seed);

ForestModel train_labeled(const LabeledSet& rows, const FeatureSelection& sel, std::uint64_t seed);

struct BaselineResult {
    std::map<Location, ForestModel> activity;        // raw-trained, per location
    std::map<Location, ConfusionMatrix> test;        // on uncompressed test data
    std::map<Location, double> accuracy;             // percent
    double mean_accuracy = 0.0;
};

BaselineResult train_baseline(const Workspace& ws, const Seeds& seeds);

struct P1Result {
    Location location = Location::T;
    std::vector<Individual> front;
    std::vector<PhenotypeP1> selected;
    std::size_t evaluations = 0;  // distinct phenotypes clustered
};

/// Runs problem 1 on a location's raw training features. If front_csv is
/// given, every generation's rank-1 set is appended to it.
P1Result optimize_p1(const Workspace& ws, Location loc, const ScaleSettings& scale, const Seeds& seeds,
                     std::ostream* front_csv = nullptr);

/// Per training segment and ratio level: classified correctly by an
/// activity-stratified cross-validated recognizer.
struct CorrectnessTable {
    std::vector<std::array<std::uint8_t, kCrLevels>> flags;
    /// Cross-validated accuracy without compression (percent).
    double baseline = 0.0;

    double accuracy_at(int level) const;
};

CorrectnessTable correctness_table(const Workspace& ws, Location loc, ReconstructionCache& cache, const Seeds& seeds);

/// k-means for a problem-1 phenotype on the location's raw training features.
KMeansResult fit_signal_types(const Workspace& ws, Location loc, const PhenotypeP1& ph, const Seeds& seeds);

struct P2Solution {
    PhenotypeP1 clustering;
    ClusterModel model;
    std::vector<Individual> front;
    std::optional<Candidate> chosen;
    std::string infeasible;  // reason when chosen is empty
};

struct LocationPlan {
    Location location = Location::T;
    double baseline_cv = 0.0;
    std::vector<P2Solution> solutions;
    /// Index into solutions of the deployed one, if any is feasible.
    std::optional<std::size_t> chosen;
};

/// Runs problem 2 for each selected clustering and deploys the feasible
/// solution with the largest mean ratio.
LocationPlan optimize_p2(const Workspace& ws, Location loc, const std::vector<PhenotypeP1>& clusterings,
                         const CorrectnessTable& table, const ScaleSettings& scale, const Seeds& seeds,
                         std::ostream* front_csv = nullptr);

/// Collapses equal-ratio neighbours of the deployed solution.
LutEntry make_lut_entry(const P2Solution& solution);

/// Node and back-end classifiers.
struct ModelBundle {
    ForestModel coarse;                                // node, uncompressed features
    ForestModel fine_mixed;                            // back-end localization
    std::map<Location, ForestModel> activity_mixed;    // back-end recognizers
    ForestModel fine_raw;                              // baseline localization
    std::map<Location, ForestModel> activity_raw;      // baseline recognizers

    BackendModels compressed_backend() const;
    BackendModels raw_backend() const;
};

ModelBundle train_models(const Workspace& ws, ReconstructionCache& cache, const Seeds& seeds,
                         const FeatureSelection& coarse_features = FeatureSelection::all());

/// Test streams per location in canonical order.
std::map<Location, std::vector<const Segment*>> test_streams(const Workspace& ws);

/// Accuracy (percent) of a deployed solution on a location's test data:
/// clusters come from raw features, each segment is compressed at its
/// cluster's ratio, reconstructed and classified with the recognizer.
double solution_test_accuracy(const Workspace& ws, Location loc, const LutEntry& entry, const ForestModel& recognizer,
                              ReconstructionCache& cache);

nlohmann::json to_json(const PhenotypeP1& ph);
PhenotypeP1 phenotype_p1_from_json(const nlohmann::json& j);
nlohmann::json to_json(const LocationPlan& plan);
/// Rebuilds the deployed solution of a saved plan (model and ratios).
P2Solution deployed_from_json(const nlohmann::json& plan);

}  // namespace adaptcs
