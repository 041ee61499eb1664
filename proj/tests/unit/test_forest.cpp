#include <doctest.h>

#include <numeric>

#include "adaptcs/forest.hpp"
#include "adaptcs/rng.hpp"

using namespace adaptcs;

namespace {

// Three Gaussian blobs in 4-D; feature 3 is noise.
LabeledSet blobs(std::uint64_t seed, int per_class) {
    Rng rng(seed);
    LabeledSet s;
    s.dim = 4;
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < per_class; ++i) {
            const std::vector<double> row{c * 3.0 + rng.normal(), (c % 2) * 2.0 + rng.normal(), -c + 0.5 * rng.normal(),
                                          rng.normal()};
            s.add(row, c);
        }
    return s;
}

}  // namespace

TEST_SUITE("forest") {
    TEST_CASE("single-class data gives a degenerate constant model") {
        LabeledSet s;
        s.dim = 2;
        for (int i = 0; i < 10; ++i) s.add(std::vector<double>{double(i), 1.0}, 4);
        const auto m = train_forest(s, {}, 1);
        CHECK(m.degenerate);
        for (int i = 0; i < 5; ++i) CHECK(predict(m, std::vector<double>{i * 3.0, -2.0}).label == 4);
    }

    TEST_CASE("separable 1-D data is fit perfectly") {
        LabeledSet s;
        s.dim = 1;
        for (int i = 0; i < 20; ++i) s.add(std::vector<double>{double(i)}, i < 10 ? 0 : 1);
        ForestConfig cfg;
        cfg.n_trees = 25;
        const auto m = train_forest(s, cfg, 2);
        CHECK(evaluate(m, s).accuracy() == 100.0);
        const auto p = predict(m, std::vector<double>{0.0});
        CHECK(p.votes[0] == 25);
        CHECK(std::accumulate(p.votes.begin(), p.votes.end(), 0) == 25);
    }

    TEST_CASE("vote ties go to the lower class") {
        ForestModel m;
        m.n_classes = 2;
        m.feature_dim = 1;
        DecisionTree a, b;
        a.nodes.push_back(TreeNode{-1, 0.0, -1, -1, 1});
        b.nodes.push_back(TreeNode{-1, 0.0, -1, -1, 0});
        m.trees = {a, b};
        const auto p = predict(m, std::vector<double>{0.3});
        CHECK(p.label == 0);
        CHECK(p.votes == std::vector<int>{1, 1});
        CHECK_THROWS_AS(predict(m, std::vector<double>{0.3, 1.0}), std::invalid_argument);
    }

    TEST_CASE("held-out accuracy, determinism and structure") {
        const auto train = blobs(3, 60), test = blobs(4, 40);
        const auto m = train_forest(train, {}, 9), again = train_forest(train, {}, 9);
        CHECK(m.trees.size() == 100);
        CHECK(to_json(m) == to_json(again));
        const auto cm = evaluate(m, test);
        CHECK(cm.accuracy() > 90.0);
        for (int c = 0; c < 3; ++c) CHECK(cm.row_total(c) == 40);
        std::size_t trace = 0;
        for (int c = 0; c < 3; ++c) trace += cm.counts[static_cast<std::size_t>(c)][static_cast<std::size_t>(c)];
        CHECK(cm.accuracy() == doctest::Approx(100.0 * static_cast<double>(trace) / 120.0));
        for (const auto& t : m.trees)
            for (const auto& n : t.nodes) {
                if (n.feature < 0) {
                    CHECK(n.label >= 0);
                    CHECK(n.label < 3);
                } else {
                    CHECK(n.feature < 4);
                    CHECK(n.left > 0);
                    CHECK(n.right > 0);
                }
            }
        CHECK(m.node_count() > 100);
    }

    TEST_CASE("serialization round trip") {
        const auto train = blobs(5, 30);
        ForestConfig cfg;
        cfg.n_trees = 10;
        const auto m = train_forest(train, cfg, 1);
        const auto back = forest_from_json(to_json(m));
        for (std::size_t i = 0; i < train.size(); ++i) CHECK(predict(back, train.row(i)).votes == predict(m, train.row(i)).votes);
    }

    TEST_CASE("confusion matrix arithmetic") {
        ConfusionMatrix perfect(5), constant(5);
        for (int c = 0; c < 5; ++c)
            for (int i = 0; i < 4; ++i) {
                perfect.add(c, c);
                constant.add(c, 2);
            }
        CHECK(perfect.accuracy() == 100.0);
        CHECK(constant.accuracy() == 20.0);
        CHECK(constant.recall(2) == 100.0);
        CHECK(constant.recall(0) == 0.0);
        CHECK(perfect.total() == 20);
        CHECK_THROWS(evaluate(train_forest(blobs(1, 5), {}, 1), LabeledSet{4, {}, {}}));
    }

    TEST_CASE("duplicating a class's row does not lower its vote share") {
        const auto base = blobs(6, 15);
        const std::vector<double> query{1.5, 1.0, -0.5, 0.0};
        int not_lower = 0;
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            LabeledSet more = base;
            for (int i = 0; i < 10; ++i) more.add(query, 1);
            const int before = predict(train_forest(base, {}, seed), query).votes[1];
            const int after = predict(train_forest(more, {}, seed), query).votes[1];
            not_lower += after >= before;
        }
        CHECK(not_lower >= 18);
    }

    TEST_CASE("cross validation pools every row once") {
        const auto data = blobs(7, 20);
        ForestConfig cfg;
        cfg.n_trees = 20;
        const auto cm = cross_validate(data, 3, cfg, 1);
        CHECK(cm.total() == data.size());
        CHECK(cm.accuracy() > 85.0);
    }
}
