#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace adaptcs {

/// Objective vector; every objective is minimized.
using Objectives = std::vector<double>;

/// a is no worse than b everywhere and strictly better somewhere.
bool dominates(const Objectives& a, const Objectives& b);

/// Fronts of indices into objs, rank 1 first.
std::vector<std::vector<std::size_t>> nondominated_sort(const std::vector<Objectives>& objs);

/// Crowding distance of each member of front (same order as front);
/// boundary members of every objective get +infinity.
std::vector<double> crowding_distance(const std::vector<Objectives>& objs, const std::vector<std::size_t>& front);

struct Evaluation {
    Objectives objectives;
    std::string label;  // phenotype rendering
};

struct Individual {
    std::vector<int> genotype;
    Evaluation eval;
    int rank = 0;
    double crowding = 0.0;
};

struct Nsga2Config {
    int pop_size = 50;
    int generations = 60;
    int genome_length = 64;
    int codon_max = 255;
    double crossover_rate = 0.9;
    /// Per-codon mutation probability; negative means 1 / genome_length.
    double mutation_rate = -1.0;
    std::uint64_t seed = 0;
};

using Evaluator = std::function<Evaluation(const std::vector<int>& genotype)>;
/// Called with the generation number (0 = initial population) and the
/// surviving population after selection.
using GenerationCallback = std::function<void(int generation, const std::vector<Individual>& population)>;

/// Elitist (mu + lambda) NSGA-II over integer codon strings: binary
/// tournaments on (rank, crowding), single-point crossover and per-codon
/// uniform mutation. Returns the rank-1 members of the final population,
/// one per distinct (objectives, label).
std::vector<Individual> nsga2_run(const Evaluator& evaluate, const Nsga2Config& cfg,
                                  const GenerationCallback& on_generation = {});

/// CSV rows "generation,rank,o1,...,oM,label" for the rank-1 members.
void write_front_csv_header(std::ostream& out, std::size_t n_objectives);
void write_front_csv(std::ostream& out, int generation, const std::vector<Individual>& population);

}  // namespace adaptcs
