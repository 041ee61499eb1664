#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "adaptcs/errors.hpp"
#include "adaptcs/grammar.hpp"
#include "adaptcs/nsga2.hpp"
#include "adaptcs/problems.hpp"
#include "adaptcs/rng.hpp"

using namespace adaptcs;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Codons that make every Boolean FALSE except those listed.
std::vector<int> p1_codons(int k_codon, std::initializer_list<int> on) {
    std::vector<int> g(kGenomeLength, 1);
    g[0] = k_codon;
    for (int f : on) g[static_cast<std::size_t>(1 + f)] = 0;
    return g;
}

FeatureVector with_mnx(double v) {
    FeatureVector fv;
    for (int i = 0; i < kNumFeatures; ++i) {
        fv.values[static_cast<std::size_t>(i)] = 0.0;
        fv.mask.set(static_cast<std::size_t>(i));
    }
    fv.values[static_cast<std::size_t>(feature_index(Feature::mn, 0))] = v;
    return fv;
}

}  // namespace

TEST_SUITE("evolve") {
    TEST_CASE("shipped problem-1 grammar") {
        const Grammar file = parse_bnf(read_file(std::string(ADAPTCS_SOURCE_DIR) + "/grammars/p1.bnf"));
        CHECK(file.nonterminals.size() == 3);
        CHECK(file.start == "Model");
        CHECK(file.alternatives("K").size() == 24);
        CHECK(file.alternatives("Boolean").size() == 2);
        const Grammar built = p1_grammar();
        CHECK(built.nonterminals == file.nonterminals);
        for (const auto& nt : file.nonterminals) CHECK(built.alternatives(nt) == file.alternatives(nt));
    }

    TEST_CASE("grammar parsing") {
        const Grammar g = parse_bnf("<a> ::= x\n");
        CHECK(g.alternatives("a").size() == 1);
        CHECK_THROWS_AS(decode({{}, 3}, g), std::invalid_argument);
        CHECK(decode({{7, 9}, 3}, g).codons_used == 0);

        try {
            parse_bnf("<a> ::= <b>\n");
            FAIL("expected a parse error");
        } catch (const ParseError& e) {
            CHECK(std::string(e.what()).find("line 1") != std::string::npos);
        }
        CHECK_THROWS_AS(parse_bnf("<a> ::= x |\n"), ParseError);
        CHECK_THROWS_AS(parse_bnf("<a> ::= x\n<a> ::= y\n"), ParseError);
        CHECK_THROWS_AS(parse_bnf("a ::= x\n"), ParseError);
        const Grammar ordered = parse_bnf("# comment\n<s> ::= <d><d>\n<d> ::= 0 | 1 | 2\n");
        CHECK(decode({{2, 4}, 3}, ordered).text == "21");
    }

    TEST_CASE("codon modulo rule and wrapping") {
        const auto g = p1_codons(25, {feature_index(Feature::mn, 0)});
        const auto d = decode({g, kWrapLimit}, p1_grammar());
        REQUIRE(d.valid);
        CHECK(d.codons_used == 31);
        const auto ph = parse_p1(d.text);
        REQUIRE(ph);
        CHECK(ph->k == 3);
        CHECK(ph->label() == "k=3|mnX");
        CHECK(decode({g, kWrapLimit}, p1_grammar()).text == d.text);

        // Eight codons need three wraps for 31 choices: allowed at limit 3, not at 2.
        const std::vector<int> short_g(8, 0);
        CHECK(decode({short_g, 3}, p1_grammar()).valid);
        CHECK(decode({short_g, 3}, p1_grammar()).wraps == 3);
        CHECK_FALSE(decode({short_g, 2}, p1_grammar()).valid);

        // A grammar that never terminates is invalid, not a crash.
        const Grammar loop = parse_bnf("<s> ::= <s>x | <s>y\n");
        CHECK_FALSE(decode({{0, 1, 2}, 3}, loop).valid);
    }

    TEST_CASE("problem-2 grammar") {
        const Grammar g = parse_bnf(p2_grammar_text(3));
        CHECK(g.alternatives("CR").size() == 25);
        const auto d = decode({{1, 25, 24}, 3}, g);
        const auto ph = parse_p2(d.text, 3);
        REQUIRE(ph);
        CHECK(ph->crs == std::vector<int>{4, 0, 96});
        CHECK(ph->label() == "[4,0,96]");
    }

    TEST_CASE("dominance") {
        CHECK(dominates({1, 1}, {2, 2}));
        CHECK_FALSE(dominates({1, 2}, {2, 1}));
        CHECK_FALSE(dominates({2, 1}, {1, 2}));
        CHECK_FALSE(dominates({1, 1}, {1, 1}));
        CHECK(dominates({1, 1}, {1, 2}));
        CHECK_THROWS_AS(dominates({1}, {1, 2}), std::invalid_argument);
    }

    TEST_CASE("sorting examples and the pairwise property") {
        const auto flat = nondominated_sort({{1, 4}, {2, 3}, {3, 2}, {4, 1}});
        CHECK(flat.size() == 1);
        const auto chain = nondominated_sort({{3, 3}, {1, 1}, {2, 2}});
        REQUIRE(chain.size() == 3);
        CHECK(chain[0] == std::vector<std::size_t>{1});
        CHECK(chain[1] == std::vector<std::size_t>{2});
        CHECK(chain[2] == std::vector<std::size_t>{0});

        Rng rng(41);
        for (int trial = 0; trial < 100; ++trial) {
            const std::size_t n = 1 + rng.uniform_index(50);
            std::vector<Objectives> objs(n, Objectives(3));
            for (auto& o : objs)
                for (auto& v : o) v = static_cast<double>(rng.uniform_index(5));
            const auto fronts = nondominated_sort(objs);
            for (std::size_t r = 0; r < fronts.size(); ++r) {
                for (auto i : fronts[r])
                    for (auto j : fronts[r]) CHECK_FALSE(dominates(objs[i], objs[j]));
                if (r == 0) continue;
                for (auto i : fronts[r]) {
                    bool covered = false;
                    for (auto j : fronts[r - 1]) covered = covered || dominates(objs[j], objs[i]);
                    CHECK(covered);
                }
            }
        }
    }

    TEST_CASE("crowding distance") {
        const std::vector<Objectives> objs{{0, 4}, {1, 2}, {2, 1}, {4, 0}};
        const auto d = crowding_distance(objs, {0, 1, 2, 3});
        const double inf = std::numeric_limits<double>::infinity();
        CHECK(d[0] == inf);
        CHECK(d[3] == inf);
        // Interior: (2-0)/4 + (4-1)/4 and (4-1)/4 + (2-0)/4.
        CHECK(d[1] == doctest::Approx(1.25));
        CHECK(d[2] == doctest::Approx(1.25));
        const auto two = crowding_distance(objs, {1, 2});
        CHECK(two[0] == inf);
        CHECK(two[1] == inf);
    }

    TEST_CASE("runs converge, are reproducible and elitist") {
        // Unique optimum at all-zero codons.
        const Evaluator eval = [](const std::vector<int>& g) {
            double s = 0, t = 0;
            for (int c : g) {
                s += c;
                t += c * c;
            }
            return Evaluation{{s, t}, std::to_string(s)};
        };
        Nsga2Config cfg;
        cfg.pop_size = 20;
        cfg.generations = 30;
        cfg.genome_length = 4;
        cfg.codon_max = 3;
        cfg.seed = 5;
        std::vector<double> best_s;
        const auto front = nsga2_run(eval, cfg, [&](int, const std::vector<Individual>& pop) {
            double b = std::numeric_limits<double>::infinity();
            for (const auto& ind : pop) b = std::min(b, ind.eval.objectives[0]);
            best_s.push_back(b);
        });
        REQUIRE(front.size() == 1);
        CHECK(front[0].eval.objectives == Objectives{0, 0});
        CHECK(best_s.size() == 31);
        for (std::size_t i = 1; i < best_s.size(); ++i) CHECK(best_s[i] <= best_s[i - 1]);

        const auto again = nsga2_run(eval, cfg);
        REQUIRE(again.size() == front.size());
        CHECK(again[0].genotype == front[0].genotype);
    }

    TEST_CASE("without variation the population multiset is preserved") {
        const Evaluator eval = [](const std::vector<int>& g) {
            return Evaluation{{double(g[0]), double(g[1])}, std::to_string(g[0]) + "," + std::to_string(g[1])};
        };
        Nsga2Config cfg;
        cfg.pop_size = 12;
        cfg.generations = 5;
        cfg.genome_length = 2;
        cfg.codon_max = 255;
        cfg.crossover_rate = 0.0;
        cfg.mutation_rate = 0.0;
        cfg.seed = 6;
        std::vector<std::multiset<std::vector<int>>> seen;
        nsga2_run(eval, cfg, [&](int, const std::vector<Individual>& pop) {
            std::multiset<std::vector<int>> genomes;
            for (const auto& ind : pop) genomes.insert(ind.genotype);
            seen.push_back(genomes);
        });
        // Offspring are copies of parents, so every survivor's genotype already
        // existed in generation 0 and the rank-1 set never disappears.
        for (const auto& gen : seen)
            for (const auto& g : gen) CHECK(seen[0].count(g) > 0);
    }

    TEST_CASE("evaluator failure aborts with context") {
        const Evaluator eval = [](const std::vector<int>&) -> Evaluation { throw std::runtime_error("boom"); };
        Nsga2Config cfg;
        cfg.pop_size = 4;
        cfg.generations = 1;
        try {
            nsga2_run(eval, cfg);
            FAIL("expected an error");
        } catch (const DomainError& e) {
            CHECK(std::string(e.what()).find("boom") != std::string::npos);
        }
    }

    TEST_CASE("problem-1 objectives") {
        std::vector<FeatureVector> data{with_mnx(0), with_mnx(0.1), with_mnx(10), with_mnx(10.1)};
        ProblemP1 p(data, 3);
        PhenotypeP1 ph;
        ph.k = 2;
        ph.mask.set(static_cast<std::size_t>(feature_index(Feature::mn, 0)));
        const auto o = p.objectives(ph);
        CHECK(o[0] == 1);
        CHECK(o[1] == doctest::Approx(0.01));
        CHECK(o[2] == doctest::Approx(0.5));

        PhenotypeP1 none;
        none.k = 2;
        CHECK(p.objectives(none) == kPenaltyP1);
        PhenotypeP1 too_many = ph;
        too_many.k = 5;  // more clusters than distinct points
        CHECK(p.objectives(too_many) == kPenaltyP1);

        const auto e = p.evaluate(p1_codons(0, {feature_index(Feature::mn, 0)}));
        CHECK(e.label == "k=2|mnX");
        CHECK(e.objectives[1] == doctest::Approx(0.01));
    }

    TEST_CASE("problem-2 objectives") {
        // Segment i is correct at level l unless i < l / 4.
        const std::vector<int> cluster{0, 0, 0, 0, 1, 1, 1, 1, 1, 1};
        int queries = 0;
        ProblemP2 p(cluster, 2, [&](int level) {
            ++queries;
            std::vector<std::uint8_t> ok(10);
            for (int i = 0; i < 10; ++i) ok[static_cast<std::size_t>(i)] = i >= level / 4;
            return ok;
        });
        PhenotypeP2 none{{0, 0}};
        const auto o = p.objectives(none);
        CHECK(o[0] == doctest::Approx(1.0));
        CHECK(o[1] == doctest::Approx(0.0));

        PhenotypeP2 mixed{{48, 80}};  // levels 12 and 20
        const auto m = p.objectives(mixed);
        CHECK(m[0] == doctest::Approx(1.0 - 0.672));
        // Cluster 0 (segments 0..3): level 12 → i >= 3 correct → 1 of 4.
        // Cluster 1 (segments 4..9): level 20 → i >= 5 correct → 5 of 6.
        CHECK(m[1] == doctest::Approx(1.0 - 0.6));
        p.objectives(mixed);
        CHECK(queries == 3);
        CHECK(p.counts() == std::vector<std::size_t>{4, 6});
    }

    TEST_CASE("solution selection") {
        CHECK(weighted_mean_cr({4, 6}, {50, 80}) == doctest::Approx(68.0).epsilon(1e-15));
        CHECK(error_threshold(93.2) == doctest::Approx(11.8).epsilon(1e-12));
        const std::vector<Candidate> front{{60, 90, {60}}, {70, 85, {70}}};
        CHECK(select_solution(front, 93.2).mean_cr == 60);
        std::vector<Candidate> reversed(front.rbegin(), front.rend());
        CHECK(select_solution(reversed, 93.2).mean_cr == 60);
        CHECK_THROWS_AS(select_solution({{70, 50, {70}}}, 93.2), DomainError);
        // Equal ratio: the more accurate one wins.
        CHECK(select_solution({{60, 89, {60}}, {60, 91, {60}}}, 93.2).accuracy == 91);
    }

    TEST_CASE("problem-1 front selection takes extremes and the median") {
        auto ph = [](int k, int nf) {
            PhenotypeP1 p;
            p.k = k;
            for (int i = 0; i < nf; ++i) p.mask.set(static_cast<std::size_t>(i));
            return p;
        };
        const std::vector<std::pair<PhenotypeP1, Objectives>> front{
            {ph(2, 1), {1, 0.3, 0.5}}, {ph(2, 2), {2, 0.2, 0.5}}, {ph(5, 1), {1, 0.5, 0.2}},
            {ph(9, 1), {1, 0.6, 1.0 / 9}}, {ph(9, 1), {1, 0.6, 1.0 / 9}}};
        const auto sel = select_p1_solutions(front);
        REQUIRE(sel.size() == 3);
        CHECK(sel[0].k == 2);
        CHECK(sel[0].selection().size() == 1);
        CHECK(sel[1].k == 5);
        CHECK(sel[2].k == 9);
    }
}
