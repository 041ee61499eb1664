#pragma once

#include <bitset>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "adaptcs/clustering.hpp"
#include "adaptcs/features.hpp"
#include "adaptcs/grammar.hpp"
#include "adaptcs/nsga2.hpp"

namespace adaptcs {

inline constexpr int kGenomeLength = 64;
inline constexpr int kWrapLimit = 3;

/// Cluster count and feature subset chosen by problem 1.
struct PhenotypeP1 {
    int k = 0;
    std::bitset<kNumFeatures> mask;

    FeatureSelection selection() const { return FeatureSelection::from_mask(mask); }
    std::string label() const;
};

/// One compression ratio per cluster, chosen by problem 2.
struct PhenotypeP2 {
    std::vector<int> crs;
    std::string label() const;
};

/// Built-in problem-1 grammar; same rules as grammars/p1.bnf.
const std::string& p1_grammar_text();
const Grammar& p1_grammar();
/// `<CRs> ::= [<CR>,...,<CR>]` with k entries and `<CR> ::= 0|4|...|96`.
std::string p2_grammar_text(int k);

/// Reads "[k,TRUE,FALSE,...]"; nullopt for anything else.
std::optional<PhenotypeP1> parse_p1(const std::string& text);
std::optional<PhenotypeP2> parse_p2(const std::string& text, int k);

inline const Objectives kPenaltyP1{31.0, 10.0, 1.0};
inline const Objectives kPenaltyP2{1.0, 1.0};

/// Problem 1: minimize (#features, Davies-Bouldin, 1/k) for k-means on one
/// location's training features. Invalid phenotypes and failed clusterings
/// map to kPenaltyP1. Results are cached per phenotype.
class ProblemP1 {
public:
    ProblemP1(std::vector<FeatureVector> training, std::uint64_t cluster_seed, Grammar grammar = p1_grammar());

    Objectives objectives(const PhenotypeP1& ph);
    Evaluation evaluate(const std::vector<int>& genotype);
    Evaluator evaluator() {
        return [this](const std::vector<int>& g) { return evaluate(g); };
    }
    const Grammar& grammar() const { return grammar_; }
    std::uint64_t cluster_seed() const { return seed_; }
    std::size_t cache_size() const { return cache_.size(); }

private:
    std::vector<FeatureVector> training_;
    std::uint64_t seed_;
    Grammar grammar_;
    std::map<std::string, Objectives> cache_;
};

/// Problem 2: minimize (1 - cr/100, 1 - accuracy/100) where cr is the
/// count-weighted mean ratio and accuracy is the share of training segments
/// classified correctly once compressed at their cluster's ratio.
///
/// correct(level) returns one flag per training segment for ratio
/// level * 4; it is queried lazily and memoized.
class ProblemP2 {
public:
    using CorrectnessSource = std::function<std::vector<std::uint8_t>(int level)>;

    ProblemP2(std::vector<int> cluster_of_segment, int k, CorrectnessSource correct);

    Objectives objectives(const PhenotypeP2& ph);
    Evaluation evaluate(const std::vector<int>& genotype);
    Evaluator evaluator() {
        return [this](const std::vector<int>& g) { return evaluate(g); };
    }
    /// Percent of segments classified correctly under the given ratios.
    double accuracy(const std::vector<int>& crs);
    const std::vector<std::size_t>& counts() const { return counts_; }
    int k() const { return k_; }

private:
    const std::vector<std::uint8_t>& level(int lvl);

    std::vector<int> cluster_of_;
    int k_;
    std::vector<std::size_t> counts_;
    CorrectnessSource source_;
    Grammar grammar_;
    std::map<int, std::vector<std::uint8_t>> levels_;
};

/// Decision budget: baseline error plus five points.
double error_threshold(double baseline_accuracy);

struct Candidate {
    double mean_cr = 0.0;
    double accuracy = 0.0;  // percent
    std::vector<int> crs;
};

/// Largest mean ratio among candidates with error <= error_threshold;
/// ties go to the higher accuracy, then the lexicographically smaller crs.
/// Throws DomainError naming the gap when nothing is feasible.
Candidate select_solution(const std::vector<Candidate>& front, double baseline_accuracy);

/// Three problem-1 solutions from a front: smallest k, largest k and the
/// median k, each taking the fewest features and then the lowest
/// Davies-Bouldin value.
std::vector<PhenotypeP1> select_p1_solutions(const std::vector<std::pair<PhenotypeP1, Objectives>>& front);

}  // namespace adaptcs
