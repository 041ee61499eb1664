#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "adaptcs/features.hpp"

namespace adaptcs {

/// Row-major sample matrix with one integer class label per row.
struct LabeledSet {
    std::size_t dim = 0;
    std::vector<double> x;
    std::vector<int> y;

    std::size_t size() const { return y.size(); }
    std::span<const double> row(std::size_t i) const { return {x.data() + i * dim, dim}; }
    void add(std::span<const double> row, int label);
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    int label = -1;
};

struct DecisionTree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    /// Goes left when x[feature] <= threshold.
    int predict(std::span<const double> x) const;
};

struct ForestConfig {
    int n_trees = 100;
    int min_leaf = 1;
    /// Candidate features per split; 0 selects floor(sqrt(dim)).
    int mtry = 0;
};

struct ForestModel {
    std::vector<DecisionTree> trees;
    int n_classes = 0;
    std::size_t feature_dim = 0;
    /// Positions of the model inputs in the 30-wide feature vector.
    FeatureSelection features;
    std::uint64_t seed = 0;
    /// Set when the training labels held a single class.
    bool degenerate = false;

    std::size_t node_count() const;
};

struct Prediction {
    int label = -1;
    std::vector<int> votes;  // one count per class, sums to the tree count
};

ForestModel train_forest(const LabeledSet& data, const ForestConfig& cfg, std::uint64_t seed);

/// Plurality vote, ties to the lowest class id.
Prediction predict(const ForestModel& model, std::span<const double> row);
Prediction predict(const ForestModel& model, const FeatureVector& fv);

struct ConfusionMatrix {
    int n_classes = 0;
    std::vector<std::vector<std::size_t>> counts;  // [truth][predicted]

    explicit ConfusionMatrix(int classes = 0)
        : n_classes(classes), counts(static_cast<std::size_t>(classes), std::vector<std::size_t>(static_cast<std::size_t>(classes), 0)) {}
    void add(int truth, int predicted);
    std::size_t total() const;
    std::size_t row_total(int truth) const;
    double accuracy() const;  // percent
    double recall(int truth) const;  // percent
};

ConfusionMatrix evaluate(const ForestModel& model, const LabeledSet& test);

/// Stratified k-fold cross-validation; confusion counts pooled over folds.
ConfusionMatrix cross_validate(const LabeledSet& data, int folds, const ForestConfig& cfg, std::uint64_t seed);

nlohmann::json to_json(const ForestModel& model);
ForestModel forest_from_json(const nlohmann::json& j);

}  // namespace adaptcs
