#include "adaptcs/nsga2.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>
#include <stdexcept>

#include "adaptcs/errors.hpp"
#include "adaptcs/rng.hpp"

namespace adaptcs {

bool dominates(const Objectives& a, const Objectives& b) {
    if (a.size() != b.size()) throw std::invalid_argument("dominates: objective length mismatch");
    bool strictly = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] > b[i]) return false;
        if (a[i] < b[i]) strictly = true;
    }
    return strictly;
}

std::vector<std::vector<std::size_t>> nondominated_sort(const std::vector<Objectives>& objs) {
    const std::size_t n = objs.size();
    std::vector<std::vector<std::size_t>> dominated(n);
    std::vector<std::size_t> dom_count(n, 0);
    std::vector<std::vector<std::size_t>> fronts(1);
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t q = p + 1; q < n; ++q) {
            if (dominates(objs[p], objs[q])) {
                dominated[p].push_back(q);
                ++dom_count[q];
            } else if (dominates(objs[q], objs[p])) {
                dominated[q].push_back(p);
                ++dom_count[p];
            }
        }
    }
    for (std::size_t p = 0; p < n; ++p)
        if (dom_count[p] == 0) fronts[0].push_back(p);
    while (!fronts.back().empty()) {
        std::vector<std::size_t> next;
        for (std::size_t p : fronts.back())
            for (std::size_t q : dominated[p])
                if (--dom_count[q] == 0) next.push_back(q);
        std::sort(next.begin(), next.end());
        fronts.push_back(std::move(next));
    }
    fronts.pop_back();
    return fronts;
}

std::vector<double> crowding_distance(const std::vector<Objectives>& objs, const std::vector<std::size_t>& front) {
    const std::size_t n = front.size();
    std::vector<double> dist(n, 0.0);
    if (n == 0) return dist;
    if (n <= 2) {
        std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
        return dist;
    }
    const std::size_t m = objs[front[0]].size();
    std::vector<std::size_t> order(n);
    for (std::size_t k = 0; k < m; ++k) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return objs[front[a]][k] < objs[front[b]][k]; });
        const double lo = objs[front[order.front()]][k];
        const double hi = objs[front[order.back()]][k];
        dist[order.front()] = dist[order.back()] = std::numeric_limits<double>::infinity();
        if (hi == lo) continue;
        for (std::size_t i = 1; i + 1 < n; ++i)
            dist[order[i]] += (objs[front[order[i + 1]]][k] - objs[front[order[i - 1]]][k]) / (hi - lo);
    }
    return dist;
}

namespace {

void rank_population(std::vector<Individual>& pop) {
    std::vector<Objectives> objs;
    objs.reserve(pop.size());
    for (const auto& ind : pop) objs.push_back(ind.eval.objectives);
    const auto fronts = nondominated_sort(objs);
    for (std::size_t r = 0; r < fronts.size(); ++r) {
        const auto cd = crowding_distance(objs, fronts[r]);
        for (std::size_t i = 0; i < fronts[r].size(); ++i) {
            pop[fronts[r][i]].rank = static_cast<int>(r) + 1;
            pop[fronts[r][i]].crowding = cd[i];
        }
    }
}

bool better(const Individual& a, const Individual& b) {
    if (a.rank != b.rank) return a.rank < b.rank;
    return a.crowding > b.crowding;
}

}  // namespace

std::vector<Individual> nsga2_run(const Evaluator& evaluate, const Nsga2Config& cfg,
                                  const GenerationCallback& on_generation) {
    if (cfg.pop_size < 2) throw std::invalid_argument("nsga2: population must hold at least 2 individuals");
    if (cfg.generations < 0) throw std::invalid_argument("nsga2: negative generation count");
    if (cfg.genome_length < 2) throw std::invalid_argument("nsga2: genome too short for crossover");
    const auto len = static_cast<std::size_t>(cfg.genome_length);
    const auto mu = static_cast<std::size_t>(cfg.pop_size);
    const double pm = cfg.mutation_rate < 0.0 ? 1.0 / static_cast<double>(len) : cfg.mutation_rate;
    const auto span = static_cast<std::uint64_t>(cfg.codon_max) + 1;
    Rng rng(cfg.seed);

    int generation = 0;
    std::size_t n_objectives = 0;
    auto eval = [&](Individual& ind, std::size_t index) {
        try {
            ind.eval = evaluate(ind.genotype);
        } catch (const std::exception& e) {
            throw DomainError("evaluation failed in generation " + std::to_string(generation) + ", individual " +
                              std::to_string(index) + ": " + e.what());
        }
        for (double v : ind.eval.objectives)
            if (!std::isfinite(v))
                throw DomainError("non-finite objective in generation " + std::to_string(generation) + ": " +
                                  ind.eval.label);
        if (n_objectives == 0) n_objectives = ind.eval.objectives.size();
        if (ind.eval.objectives.size() != n_objectives || n_objectives == 0)
            throw DomainError("inconsistent objective count for " + ind.eval.label);
    };

    std::vector<Individual> pop(mu);
    for (std::size_t i = 0; i < mu; ++i) {
        pop[i].genotype.resize(len);
        for (auto& c : pop[i].genotype) c = static_cast<int>(rng.uniform_index(span));
        eval(pop[i], i);
    }
    rank_population(pop);
    if (on_generation) on_generation(0, pop);

    auto tournament = [&]() -> const Individual& {
        const Individual& a = pop[rng.uniform_index(mu)];
        const Individual& b = pop[rng.uniform_index(mu)];
        return better(b, a) ? b : a;
    };

    for (generation = 1; generation <= cfg.generations; ++generation) {
        std::vector<Individual> merged = pop;
        merged.reserve(2 * mu);
        while (merged.size() < 2 * mu) {
            Individual c1, c2;
            c1.genotype = tournament().genotype;
            c2.genotype = tournament().genotype;
            if (rng.bernoulli(cfg.crossover_rate)) {
                const std::size_t cut = 1 + rng.uniform_index(len - 1);
                for (std::size_t i = cut; i < len; ++i) std::swap(c1.genotype[i], c2.genotype[i]);
            }
            for (Individual* c : {&c1, &c2}) {
                for (auto& codon : c->genotype)
                    if (rng.bernoulli(pm)) codon = static_cast<int>(rng.uniform_index(span));
                if (merged.size() < 2 * mu) {
                    eval(*c, merged.size() - mu);
                    merged.push_back(std::move(*c));
                }
            }
        }
        rank_population(merged);

        // Survivors: whole fronts in rank order, the last one cut by crowding.
        std::vector<std::size_t> order(merged.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return better(merged[a], merged[b]); });
        std::vector<Individual> next;
        next.reserve(mu);
        for (std::size_t i = 0; i < mu; ++i) next.push_back(std::move(merged[order[i]]));
        pop = std::move(next);
        rank_population(pop);
        if (on_generation) on_generation(generation, pop);
    }

    std::vector<Individual> front;
    std::set<std::pair<Objectives, std::string>> seen;
    for (const auto& ind : pop)
        if (ind.rank == 1 && seen.insert({ind.eval.objectives, ind.eval.label}).second) front.push_back(ind);
    return front;
}

void write_front_csv_header(std::ostream& out, std::size_t n_objectives) {
    out << "generation,rank";
    for (std::size_t k = 0; k < n_objectives; ++k) out << ",o" << (k + 1);
    out << ",phenotype\n";
}

void write_front_csv(std::ostream& out, int generation, const std::vector<Individual>& population) {
    for (const auto& ind : population) {
        if (ind.rank != 1) continue;
        out << generation << ',' << ind.rank;
        for (double v : ind.eval.objectives) out << ',' << v;
        out << ",\"" << ind.eval.label << "\"\n";
    }
}

}  // namespace adaptcs
