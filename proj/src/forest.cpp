#include "adaptcs/forest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "adaptcs/rng.hpp"

namespace adaptcs {

void LabeledSet::add(std::span<const double> r, int label) {
    if (y.empty() && dim == 0) dim = r.size();
    if (r.size() != dim) throw std::invalid_argument("labeled set: row dimension mismatch");
    if (label < 0) throw std::invalid_argument("labeled set: negative label");
    x.insert(x.end(), r.begin(), r.end());
    y.push_back(label);
}

int DecisionTree::predict(std::span<const double> x) const {
    std::size_t at = 0;
    while (nodes[at].feature >= 0) {
        const TreeNode& n = nodes[at];
        at = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
    }
    return nodes[at].label;
}

std::size_t ForestModel::node_count() const {
    std::size_t n = 0;
    for (const auto& t : trees) n += t.nodes.size();
    return n;
}

namespace {

int majority(const std::vector<std::size_t>& counts) {
    return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

class TreeBuilder {
public:
    TreeBuilder(const LabeledSet& data, int n_classes, const ForestConfig& cfg, Rng& rng)
        : data_(data), k_(static_cast<std::size_t>(n_classes)), cfg_(cfg), rng_(rng) {
        mtry_ = cfg.mtry > 0 ? static_cast<std::size_t>(cfg.mtry)
                             : std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(data.dim)))));
        mtry_ = std::min(mtry_, data.dim);
        order_.resize(data.dim);
    }

    DecisionTree build(std::vector<std::size_t> sample) {
        tree_.nodes.clear();
        tree_.nodes.emplace_back();
        struct Task {
            std::size_t node, begin, end;
        };
        samples_ = std::move(sample);
        std::vector<Task> stack{{0, 0, samples_.size()}};
        while (!stack.empty()) {
            const Task t = stack.back();
            stack.pop_back();
            split_node(t.node, t.begin, t.end, [&](std::size_t node, std::size_t b, std::size_t e) {
                stack.push_back({node, b, e});
            });
        }
        return std::move(tree_);
    }

private:
    template <class Push>
    void split_node(std::size_t node, std::size_t begin, std::size_t end, Push&& push) {
        std::vector<std::size_t> counts(k_, 0);
        for (std::size_t i = begin; i < end; ++i) ++counts[static_cast<std::size_t>(data_.y[samples_[i]])];
        const std::size_t n = end - begin;
        const auto min_leaf = static_cast<std::size_t>(std::max(1, cfg_.min_leaf));
        const bool pure = std::count(counts.begin(), counts.end(), 0) == static_cast<std::ptrdiff_t>(k_ - 1);
        if (pure || n < 2 * min_leaf) {
            make_leaf(node, counts);
            return;
        }

        // Draw features without replacement; constant features do not count
        // towards mtry, so drawing continues until mtry informative ones were
        // examined or the features run out.
        std::iota(order_.begin(), order_.end(), 0);
        std::size_t examined = 0;
        int best_feature = -1;
        double best_threshold = 0.0;
        double best_score = std::numeric_limits<double>::infinity();
        for (std::size_t drawn = 0; drawn < order_.size() && examined < mtry_; ++drawn) {
            const std::size_t pick = drawn + rng_.uniform_index(order_.size() - drawn);
            std::swap(order_[drawn], order_[pick]);
            const std::size_t f = order_[drawn];

            buf_.clear();
            for (std::size_t i = begin; i < end; ++i) {
                const std::size_t s = samples_[i];
                buf_.emplace_back(data_.x[s * data_.dim + f], data_.y[s]);
            }
            std::sort(buf_.begin(), buf_.end());
            if (buf_.front().first == buf_.back().first) continue;
            ++examined;

            std::vector<std::size_t> left(k_, 0);
            double left_sq = 0.0;
            double right_sq = 0.0;
            for (std::size_t c = 0; c < k_; ++c) right_sq += static_cast<double>(counts[c]) * static_cast<double>(counts[c]);
            for (std::size_t i = 0; i + 1 < n; ++i) {
                const auto c = static_cast<std::size_t>(buf_[i].second);
                const double l = static_cast<double>(left[c]);
                const double r = static_cast<double>(counts[c] - left[c]);
                left_sq += 2.0 * l + 1.0;
                right_sq -= 2.0 * r - 1.0;
                ++left[c];
                if (buf_[i].first == buf_[i + 1].first) continue;
                const std::size_t nl = i + 1;
                const std::size_t nr = n - nl;
                if (nl < min_leaf || nr < min_leaf) continue;
                // n_l * gini_l + n_r * gini_r, up to the constant n.
                const double score = -(left_sq / static_cast<double>(nl) + right_sq / static_cast<double>(nr));
                if (score < best_score) {
                    best_score = score;
                    best_feature = static_cast<int>(f);
                    double mid = 0.5 * (buf_[i].first + buf_[i + 1].first);
                    if (!(mid < buf_[i + 1].first)) mid = buf_[i].first;
                    best_threshold = mid;
                }
            }
        }
        if (best_feature < 0) {
            make_leaf(node, counts);
            return;
        }

        const auto f = static_cast<std::size_t>(best_feature);
        const auto mid_it = std::partition(samples_.begin() + static_cast<std::ptrdiff_t>(begin),
                                           samples_.begin() + static_cast<std::ptrdiff_t>(end), [&](std::size_t s) {
                                               return data_.x[s * data_.dim + f] <= best_threshold;
                                           });
        const auto mid = static_cast<std::size_t>(mid_it - samples_.begin());
        const auto left_id = tree_.nodes.size();
        tree_.nodes.emplace_back();
        tree_.nodes.emplace_back();
        TreeNode& nd = tree_.nodes[node];
        nd.feature = best_feature;
        nd.threshold = best_threshold;
        nd.left = static_cast<int>(left_id);
        nd.right = static_cast<int>(left_id + 1);
        push(left_id + 1, mid, end);
        push(left_id, begin, mid);
    }

    void make_leaf(std::size_t node, const std::vector<std::size_t>& counts) {
        tree_.nodes[node].feature = -1;
        tree_.nodes[node].label = majority(counts);
    }

    const LabeledSet& data_;
    std::size_t k_;
    const ForestConfig& cfg_;
    Rng& rng_;
    std::size_t mtry_ = 1;
    std::vector<std::size_t> order_;
    std::vector<std::size_t> samples_;
    std::vector<std::pair<double, int>> buf_;
    DecisionTree tree_;
};

}  // namespace

ForestModel train_forest(const LabeledSet& data, const ForestConfig& cfg, std::uint64_t seed) {
    if (data.size() == 0) throw std::invalid_argument("train_forest: empty training set");
    if (data.dim == 0) throw std::invalid_argument("train_forest: zero-dimensional rows");
    if (cfg.n_trees < 1) throw std::invalid_argument("train_forest: n_trees must be >= 1");
    if (data.x.size() != data.size() * data.dim) throw std::invalid_argument("train_forest: malformed sample matrix");

    ForestModel model;
    model.n_classes = *std::max_element(data.y.begin(), data.y.end()) + 1;
    model.feature_dim = data.dim;
    model.seed = seed;
    std::vector<int> seen(data.y);
    std::sort(seen.begin(), seen.end());
    model.degenerate = seen.front() == seen.back();

    const std::size_t n = data.size();
    for (int t = 0; t < cfg.n_trees; ++t) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
        std::vector<std::size_t> sample(n);
        for (auto& s : sample) s = rng.uniform_index(n);
        TreeBuilder builder(data, model.n_classes, cfg, rng);
        model.trees.push_back(builder.build(std::move(sample)));
    }
    return model;
}

Prediction predict(const ForestModel& model, std::span<const double> row) {
    if (row.size() != model.feature_dim)
        throw std::invalid_argument("predict: expected " + std::to_string(model.feature_dim) + " features, got " +
                                    std::to_string(row.size()));
    Prediction p;
    p.votes.assign(static_cast<std::size_t>(model.n_classes), 0);
    for (const auto& t : model.trees) ++p.votes[static_cast<std::size_t>(t.predict(row))];
    p.label = static_cast<int>(std::max_element(p.votes.begin(), p.votes.end()) - p.votes.begin());
    return p;
}

Prediction predict(const ForestModel& model, const FeatureVector& fv) {
    if (model.features.size() != model.feature_dim)
        throw std::invalid_argument("predict: model has no feature selection matching its input width");
    const auto row = project(fv, model.features);
    return predict(model, row);
}

void ConfusionMatrix::add(int truth, int predicted) {
    if (truth < 0 || truth >= n_classes || predicted < 0 || predicted >= n_classes)
        throw std::invalid_argument("confusion matrix: class out of range");
    ++counts[static_cast<std::size_t>(truth)][static_cast<std::size_t>(predicted)];
}

std::size_t ConfusionMatrix::total() const {
    std::size_t t = 0;
    for (int c = 0; c < n_classes; ++c) t += row_total(c);
    return t;
}

std::size_t ConfusionMatrix::row_total(int truth) const {
    const auto& r = counts[static_cast<std::size_t>(truth)];
    return std::accumulate(r.begin(), r.end(), std::size_t{0});
}

double ConfusionMatrix::accuracy() const {
    const std::size_t t = total();
    if (t == 0) throw std::invalid_argument("accuracy of empty confusion matrix");
    std::size_t diag = 0;
    for (std::size_t c = 0; c < counts.size(); ++c) diag += counts[c][c];
    return 100.0 * static_cast<double>(diag) / static_cast<double>(t);
}

double ConfusionMatrix::recall(int truth) const {
    const std::size_t t = row_total(truth);
    if (t == 0) throw std::invalid_argument("recall of class without samples");
    return 100.0 * static_cast<double>(counts[static_cast<std::size_t>(truth)][static_cast<std::size_t>(truth)]) /
           static_cast<double>(t);
}

ConfusionMatrix evaluate(const ForestModel& model, const LabeledSet& test) {
    if (test.size() == 0) throw std::invalid_argument("evaluate: empty test set");
    const int classes = std::max(model.n_classes, *std::max_element(test.y.begin(), test.y.end()) + 1);
    ConfusionMatrix cm(classes);
    for (std::size_t i = 0; i < test.size(); ++i) cm.add(test.y[i], predict(model, test.row(i)).label);
    return cm;
}

ConfusionMatrix cross_validate(const LabeledSet& data, int folds, const ForestConfig& cfg, std::uint64_t seed) {
    if (folds < 2) throw std::invalid_argument("cross_validate: need at least 2 folds");
    if (data.size() < static_cast<std::size_t>(folds)) throw std::invalid_argument("cross_validate: fewer rows than folds");
    const int classes = *std::max_element(data.y.begin(), data.y.end()) + 1;

    // Deal each class's shuffled rows round-robin across folds.
    std::vector<int> fold_of(data.size());
    Rng rng(derive_seed(seed, std::string_view("folds")));
    std::size_t next = 0;
    for (int c = 0; c < classes; ++c) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < data.size(); ++i)
            if (data.y[i] == c) members.push_back(i);
        for (std::size_t i = members.size(); i > 1; --i) std::swap(members[i - 1], members[rng.uniform_index(i)]);
        for (std::size_t m : members) fold_of[m] = static_cast<int>(next++ % static_cast<std::size_t>(folds));
    }

    ConfusionMatrix pooled(classes);
    for (int f = 0; f < folds; ++f) {
        LabeledSet train, test;
        train.dim = test.dim = data.dim;
        for (std::size_t i = 0; i < data.size(); ++i) (fold_of[i] == f ? test : train).add(data.row(i), data.y[i]);
        if (test.size() == 0 || train.size() == 0) continue;
        const ForestModel m = train_forest(train, cfg, derive_seed(seed, static_cast<std::uint64_t>(f)));
        for (std::size_t i = 0; i < test.size(); ++i) pooled.add(test.y[i], predict(m, test.row(i)).label);
    }
    return pooled;
}

namespace {

nlohmann::json node_json(const DecisionTree& t, std::size_t at) {
    const TreeNode& n = t.nodes[at];
    if (n.feature < 0) return {{"leaf", n.label}};
    return {{"feature", n.feature},
            {"threshold", n.threshold},
            {"left", node_json(t, static_cast<std::size_t>(n.left))},
            {"right", node_json(t, static_cast<std::size_t>(n.right))}};
}

void node_from_json(const nlohmann::json& j, DecisionTree& t, std::size_t at, std::size_t dim, int classes) {
    if (j.contains("leaf")) {
        const int label = j.at("leaf").get<int>();
        if (label < 0 || label >= classes) throw std::invalid_argument("forest json: leaf class out of range");
        t.nodes[at].label = label;
        return;
    }
    const int f = j.at("feature").get<int>();
    if (f < 0 || static_cast<std::size_t>(f) >= dim) throw std::invalid_argument("forest json: feature index out of range");
    const std::size_t left = t.nodes.size();
    t.nodes.emplace_back();
    t.nodes.emplace_back();
    t.nodes[at].feature = f;
    t.nodes[at].threshold = j.at("threshold").get<double>();
    t.nodes[at].left = static_cast<int>(left);
    t.nodes[at].right = static_cast<int>(left + 1);
    node_from_json(j.at("left"), t, left, dim, classes);
    node_from_json(j.at("right"), t, left + 1, dim, classes);
}

}  // namespace

nlohmann::json to_json(const ForestModel& model) {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : model.trees) trees.push_back(node_json(t, 0));
    return {{"n_trees", model.trees.size()}, {"n_classes", model.n_classes},
            {"feature_dim", model.feature_dim}, {"features", model.features.indices()},
            {"seed", model.seed},       {"degenerate", model.degenerate},
            {"node_count", model.node_count()}, {"trees", trees}};
}

ForestModel forest_from_json(const nlohmann::json& j) {
    ForestModel m;
    m.n_classes = j.at("n_classes").get<int>();
    m.feature_dim = j.at("feature_dim").get<std::size_t>();
    m.features = FeatureSelection(j.at("features").get<std::vector<int>>());
    m.seed = j.at("seed").get<std::uint64_t>();
    m.degenerate = j.at("degenerate").get<bool>();
    for (const auto& tj : j.at("trees")) {
        DecisionTree t;
        t.nodes.emplace_back();
        node_from_json(tj, t, 0, m.feature_dim, m.n_classes);
        m.trees.push_back(std::move(t));
    }
    if (m.trees.empty()) throw std::invalid_argument("forest json: no trees");
    return m;
}

}  // namespace adaptcs
