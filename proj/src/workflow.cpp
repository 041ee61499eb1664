#include "adaptcs/workflow.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "adaptcs/errors.hpp"
#include "adaptcs/rng.hpp"

namespace adaptcs {

Seeds::Seeds(std::uint64_t m)
    : master(m),
      dataset(derive_seed(m, std::string_view("dataset"))),
      ge(derive_seed(m, std::string_view("ge"))),
      forest(derive_seed(m, std::string_view("forest"))),
      filter(derive_seed(m, std::string_view("filter"))) {}

ScaleSettings scale_settings(const std::string& scale, int max_segment_index) {
    ScaleSettings s;
    s.name = scale;
    if (scale == "desk") {
        s.pop_size = 50;
        s.gens_p1 = 60;
        s.gens_p2 = 60;
        s.stride = std::max(1, (max_segment_index + 9) / 10);
    } else if (scale == "paper") {
        s.pop_size = 250;
        s.gens_p1 = 1000;
        s.gens_p2 = 500;
        s.stride = 1;
    } else {
        throw std::invalid_argument("unknown scale '" + scale + "' (expected desk or paper)");
    }
    return s;
}

std::uint64_t segment_key(const Segment& s) {
    Fnv1a h;
    const int fields[4]{index_of(s.location), s.activity, s.subject, s.segment_index};
    h.update(fields, sizeof fields);
    return h.value();
}

Workspace::Workspace(Corpus corpus, std::uint64_t seed) {
    if (corpus.empty()) throw DomainError("empty corpus");
    Split split = split_corpus(corpus, kTrainRatio, seed);
    corpus_.provenance = corpus.provenance;
    const std::size_t n_train = split.train.size();
    corpus_.segments = std::move(split.train.segments);
    corpus_.segments.insert(corpus_.segments.end(), std::make_move_iterator(split.test.segments.begin()),
                            std::make_move_iterator(split.test.segments.end()));
    for (std::size_t i = 0; i < corpus_.segments.size(); ++i) {
        const Segment* s = &corpus_.segments[i];
        (i < n_train ? train_ : test_)[s->location].push_back(s);
        raw_.emplace(s, extract_segment(s->axes, FeatureSelection::all()));
    }
}

const std::vector<const Segment*>& Workspace::train(Location loc) const {
    static const std::vector<const Segment*> none;
    const auto it = train_.find(loc);
    return it == train_.end() ? none : it->second;
}

const std::vector<const Segment*>& Workspace::test(Location loc) const {
    static const std::vector<const Segment*> none;
    const auto it = test_.find(loc);
    return it == test_.end() ? none : it->second;
}

std::vector<const Segment*> Workspace::train_all() const {
    std::vector<const Segment*> out;
    for (const auto& [loc, v] : train_) out.insert(out.end(), v.begin(), v.end());
    return out;
}

std::vector<const Segment*> Workspace::test_all() const {
    std::vector<const Segment*> out;
    for (const auto& [loc, v] : test_) out.insert(out.end(), v.begin(), v.end());
    return out;
}

std::vector<Location> Workspace::locations() const {
    std::vector<Location> out;
    for (const auto& [loc, v] : train_) out.push_back(loc);
    return out;
}

const FeatureVector& Workspace::raw_features(const Segment& s) const { return raw_.at(&s); }

std::uint64_t ReconstructionCache::pattern_seed(const Segment& s, int level) const {
    return derive_seed(derive_seed(seed_, segment_key(s)), static_cast<std::uint64_t>(level));
}

const FeatureVector& ReconstructionCache::features(const Segment& s, int level) {
    if (level < 0 || level >= kCrLevels) throw std::invalid_argument("ratio level out of range");
    const std::uint64_t key = derive_seed(segment_key(s), static_cast<std::uint64_t>(level));
    if (const auto it = cache_.find(key); it != cache_.end()) return it->second;

    const CompressedSegment cs = compress_segment(s, level * kCrStep, pattern_seed(s, level));
    const DctBasis& basis = default_basis();
    const auto mm = MeasurementMatrix::from(basis, cs.pattern());
    std::array<std::vector<double>, 3> signal;
    for (int a = 0; a < 3; ++a) {
        const auto& yf = cs.y[static_cast<std::size_t>(a)];
        const std::vector<double> y(yf.begin(), yf.end());
        signal[static_cast<std::size_t>(a)] = reconstruct(y, mm, basis, cfg_).signal;
    }
    return cache_.emplace(key, extract_segment(signal, FeatureSelection::all())).first->second;
}

namespace {

int label_of(const Segment& s, bool label_location) { return label_location ? index_of(s.location) : s.activity - 1; }

}  // namespace

LabeledSet raw_rows(const Workspace& ws, const std::vector<const Segment*>& segs, bool label_location,
                    const FeatureSelection& sel) {
    LabeledSet rows;
    rows.dim = sel.size();
    for (const Segment* s : segs) rows.add(project(ws.raw_features(*s), sel), label_of(*s, label_location));
    return rows;
}

LabeledSet mixed_rows(const Workspace& ws, ReconstructionCache& cache, const std::vector<const Segment*>& segs,
                      bool label_location, std::uint64_t seed) {
    const FeatureSelection all = FeatureSelection::all();
    LabeledSet rows;
    rows.dim = all.size();
    Rng rng(seed);
    std::vector<int> levels(kCrLevels - 1);
    for (const Segment* s : segs) {
        const int label = label_of(*s, label_location);
        rows.add(project(ws.raw_features(*s), all), label);
        for (int i = 0; i < kCrLevels - 1; ++i) levels[static_cast<std::size_t>(i)] = i + 1;
        for (int i = 0; i < kMixedLevels; ++i) {
            const auto pick = static_cast<std::size_t>(i) + rng.uniform_index(levels.size() - static_cast<std::size_t>(i));
            std::swap(levels[static_cast<std::size_t>(i)], levels[pick]);
            rows.add(project(cache.features(*s, levels[static_cast<std::size_t>(i)]), all), label);
        }
    }
    return rows;
}

ForestModel train_labeled(const LabeledSet& rows, const FeatureSelection& sel, std::uint64_t seed) {
    ForestConfig cfg;
    cfg.n_trees = kForestTrees;
    ForestModel m = train_forest(rows, cfg, seed);
    m.features = sel;
    return m;
}

BaselineResult train_baseline(const Workspace& ws, const Seeds& seeds) {
    BaselineResult out;
    const auto all = FeatureSelection::all();
    double sum = 0.0;
    for (Location loc : ws.locations()) {
        const auto seed = derive_seed(derive_seed(seeds.forest, std::string_view("activity-raw")), static_cast<std::uint64_t>(index_of(loc)));
        ForestModel m = train_labeled(raw_rows(ws, ws.train(loc), false), all, seed);
        const ConfusionMatrix cm = evaluate(m, raw_rows(ws, ws.test(loc), false));
        out.accuracy[loc] = cm.accuracy();
        sum += cm.accuracy();
        out.test.emplace(loc, cm);
        out.activity.emplace(loc, std::move(m));
    }
    out.mean_accuracy = sum / static_cast<double>(out.accuracy.size());
    return out;
}

namespace {

std::uint64_t cluster_seed(const Seeds& seeds, Location loc) {
    return derive_seed(derive_seed(seeds.ge, std::string_view("kmeans")), static_cast<std::uint64_t>(index_of(loc)));
}

GenerationCallback csv_dump(std::ostream* out, std::size_t n_objectives) {
    if (!out) return {};
    return [out, n_objectives](int gen, const std::vector<Individual>& pop) {
        if (gen == 0) write_front_csv_header(*out, n_objectives);
        write_front_csv(*out, gen, pop);
    };
}

}  // namespace

P1Result optimize_p1(const Workspace& ws, Location loc, const ScaleSettings& scale, const Seeds& seeds,
                     std::ostream* front_csv) {
    std::vector<FeatureVector> training;
    for (const Segment* s : ws.train(loc)) training.push_back(ws.raw_features(*s));
    ProblemP1 problem(std::move(training), cluster_seed(seeds, loc));

    Nsga2Config cfg;
    cfg.pop_size = scale.pop_size;
    cfg.generations = scale.gens_p1;
    cfg.genome_length = kGenomeLength;
    cfg.seed = derive_seed(derive_seed(seeds.ge, std::string_view("p1")), static_cast<std::uint64_t>(index_of(loc)));

    P1Result out;
    out.location = loc;
    out.front = nsga2_run(problem.evaluator(), cfg, csv_dump(front_csv, 3));
    out.evaluations = problem.cache_size();

    std::vector<std::pair<PhenotypeP1, Objectives>> valid;
    for (const auto& ind : out.front) {
        const auto ph = parse_p1(decode({ind.genotype, kWrapLimit}, p1_grammar()).text);
        if (ph && ind.eval.objectives != kPenaltyP1) valid.emplace_back(*ph, ind.eval.objectives);
    }
    if (valid.empty()) throw DomainError("problem 1 produced no valid clustering for " + std::string(to_string(loc)));
    out.selected = select_p1_solutions(valid);
    return out;
}

double CorrectnessTable::accuracy_at(int level) const {
    if (flags.empty()) throw DomainError("empty correctness table");
    std::size_t ok = 0;
    for (const auto& f : flags) ok += f[static_cast<std::size_t>(level)];
    return 100.0 * static_cast<double>(ok) / static_cast<double>(flags.size());
}

CorrectnessTable correctness_table(const Workspace& ws, Location loc, ReconstructionCache& cache, const Seeds& seeds) {
    const auto& segs = ws.train(loc);
    CorrectnessTable table;
    table.flags.resize(segs.size());
    const auto base_seed = derive_seed(derive_seed(seeds.forest, std::string_view("cv")), static_cast<std::uint64_t>(index_of(loc)));

    // Folds stratified by activity: shuffle each activity's segments, then deal
    // them round-robin, so every fold mirrors the pooled train/test split.
    std::vector<int> fold_of(segs.size());
    {
        std::map<int, std::vector<std::size_t>> by_activity;
        for (std::size_t i = 0; i < segs.size(); ++i) by_activity[segs[i]->activity].push_back(i);
        Rng rng(derive_seed(base_seed, std::string_view("folds")));
        for (auto& [activity, members] : by_activity) {
            for (std::size_t i = members.size(); i > 1; --i) std::swap(members[i - 1], members[rng.uniform_index(i)]);
            for (std::size_t i = 0; i < members.size(); ++i) fold_of[members[i]] = static_cast<int>(i % kCvFolds);
        }
    }
    for (int fold = 0; fold < kCvFolds; ++fold) {
        std::vector<const Segment*> train;
        std::vector<std::size_t> held;
        for (std::size_t i = 0; i < segs.size(); ++i) {
            if (fold_of[i] == fold)
                held.push_back(i);
            else
                train.push_back(segs[i]);
        }
        if (held.empty()) continue;
        if (train.empty()) throw DomainError("cross-validation fold without training data");
        const auto fold_seed = derive_seed(base_seed, static_cast<std::uint64_t>(fold));
        const ForestModel m = train_labeled(mixed_rows(ws, cache, train, false, fold_seed), FeatureSelection::all(),
                                            derive_seed(fold_seed, std::string_view("trees")));
        for (std::size_t i : held)
            for (int level = 0; level < kCrLevels; ++level)
                table.flags[i][static_cast<std::size_t>(level)] =
                    predict(m, cache.features(*segs[i], level)).label + 1 == segs[i]->activity;
    }
    table.baseline = table.accuracy_at(0);
    return table;
}

KMeansResult fit_signal_types(const Workspace& ws, Location loc, const PhenotypeP1& ph, const Seeds& seeds) {
    const auto sel = ph.selection();
    PointSet points;
    for (const Segment* s : ws.train(loc)) points.push_back(project(ws.raw_features(*s), sel));
    KMeansResult fit = kmeans_fit(points, ph.k, cluster_seed(seeds, loc));
    fit.model.features = sel;
    fit.model.location = loc;
    return fit;
}

LocationPlan optimize_p2(const Workspace& ws, Location loc, const std::vector<PhenotypeP1>& clusterings,
                         const CorrectnessTable& table, const ScaleSettings& scale, const Seeds& seeds,
                         std::ostream* front_csv) {
    LocationPlan plan;
    plan.location = loc;
    plan.baseline_cv = table.baseline;
    for (std::size_t c = 0; c < clusterings.size(); ++c) {
        P2Solution sol;
        sol.clustering = clusterings[c];
        KMeansResult fit = fit_signal_types(ws, loc, clusterings[c], seeds);
        sol.model = fit.model;

        ProblemP2 problem(fit.assignment, fit.model.k, [&table](int level) {
            std::vector<std::uint8_t> col;
            col.reserve(table.flags.size());
            for (const auto& f : table.flags) col.push_back(f[static_cast<std::size_t>(level)]);
            return col;
        });
        Nsga2Config cfg;
        cfg.pop_size = scale.pop_size;
        cfg.generations = scale.gens_p2;
        cfg.genome_length = kGenomeLength;
        cfg.seed = derive_seed(derive_seed(derive_seed(seeds.ge, std::string_view("p2")), static_cast<std::uint64_t>(index_of(loc))),
                               static_cast<std::uint64_t>(c));
        if (front_csv) *front_csv << "# clustering " << sol.clustering.label() << '\n';
        sol.front = nsga2_run(problem.evaluator(), cfg, csv_dump(front_csv, 2));

        std::vector<Candidate> candidates;
        const Grammar grammar = parse_bnf(p2_grammar_text(fit.model.k));
        for (const auto& ind : sol.front) {
            const auto ph = parse_p2(decode({ind.genotype, kWrapLimit}, grammar).text, fit.model.k);
            if (!ph) continue;
            candidates.push_back({weighted_mean_cr(problem.counts(), ph->crs), problem.accuracy(ph->crs), ph->crs});
        }
        try {
            if (candidates.empty()) throw DomainError("problem 2 front holds no valid ratio assignment");
            sol.chosen = select_solution(candidates, table.baseline);
        } catch (const DomainError& e) {
            sol.infeasible = e.what();
        }
        plan.solutions.push_back(std::move(sol));
    }
    for (std::size_t i = 0; i < plan.solutions.size(); ++i) {
        const auto& s = plan.solutions[i];
        if (s.chosen && (!plan.chosen || s.chosen->mean_cr > plan.solutions[*plan.chosen].chosen->mean_cr)) plan.chosen = i;
    }
    return plan;
}

LutEntry make_lut_entry(const P2Solution& solution) {
    if (!solution.chosen) throw DomainError("no deployable ratio assignment: " + solution.infeasible);
    const MergeResult merged = merge_equal_adjacent(solution.model, solution.chosen->crs);
    LutEntry e;
    e.model = merged.model;
    e.crs = merged.crs;
    e.merged = merged.model.k < solution.model.k;
    e.mean_cr = weighted_mean_cr(e.model.counts, e.crs);
    return e;
}

BackendModels ModelBundle::compressed_backend() const {
    BackendModels b;
    b.fine_location = &fine_mixed;
    for (const auto& [loc, m] : activity_mixed) b.activity[loc] = &m;
    return b;
}

BackendModels ModelBundle::raw_backend() const {
    BackendModels b;
    b.fine_location = &fine_raw;
    for (const auto& [loc, m] : activity_raw) b.activity[loc] = &m;
    return b;
}

ModelBundle train_models(const Workspace& ws, ReconstructionCache& cache, const Seeds& seeds,
                         const FeatureSelection& coarse_features) {
    ModelBundle b;
    const auto all = FeatureSelection::all();
    const auto train_all = ws.train_all();
    auto seed_for = [&](std::string_view what, std::uint64_t idx = 0) {
        return derive_seed(derive_seed(seeds.forest, what), idx);
    };
    b.coarse = train_labeled(raw_rows(ws, train_all, true, coarse_features), coarse_features, seed_for("coarse"));
    b.fine_raw = train_labeled(raw_rows(ws, train_all, true), all, seed_for("fine-raw"));
    b.fine_mixed = train_labeled(mixed_rows(ws, cache, train_all, true, seed_for("fine-mix-rows")), all, seed_for("fine-mix"));
    for (Location loc : ws.locations()) {
        const auto i = static_cast<std::uint64_t>(index_of(loc));
        b.activity_raw.emplace(loc, train_labeled(raw_rows(ws, ws.train(loc), false), all, seed_for("activity-raw", i)));
        b.activity_mixed.emplace(
            loc, train_labeled(mixed_rows(ws, cache, ws.train(loc), false, seed_for("activity-mix-rows", i)), all,
                               seed_for("activity-mix", i)));
    }
    return b;
}

std::map<Location, std::vector<const Segment*>> test_streams(const Workspace& ws) {
    std::map<Location, std::vector<const Segment*>> out;
    for (Location loc : ws.locations()) out[loc] = ws.test(loc);
    return out;
}

double solution_test_accuracy(const Workspace& ws, Location loc, const LutEntry& entry, const ForestModel& recognizer,
                              ReconstructionCache& cache) {
    const auto& segs = ws.test(loc);
    if (segs.empty()) throw DomainError("no test data for " + std::string(to_string(loc)));
    std::size_t ok = 0;
    for (const Segment* s : segs) {
        const int c = nearest(entry.model.centroids, project(ws.raw_features(*s), entry.model.features));
        const int level = entry.crs[static_cast<std::size_t>(c)] / kCrStep;
        ok += predict(recognizer, cache.features(*s, level)).label + 1 == s->activity;
    }
    return 100.0 * static_cast<double>(ok) / static_cast<double>(segs.size());
}

nlohmann::json to_json(const PhenotypeP1& ph) {
    std::vector<std::string> names;
    const FeatureSelection sel = ph.selection();
    for (int i : sel.indices()) names.push_back(feature_names()[static_cast<std::size_t>(i)]);
    return {{"k", ph.k}, {"features", names}};
}

PhenotypeP1 phenotype_p1_from_json(const nlohmann::json& j) {
    PhenotypeP1 ph;
    ph.k = j.at("k").get<int>();
    if (ph.k < kMinClusters || ph.k > kMaxClusters) throw ParseError("cluster count out of range");
    for (const auto& n : j.at("features")) ph.mask.set(static_cast<std::size_t>(feature_index_by_name(n.get<std::string>())));
    if (ph.mask.none()) throw ParseError("clustering without features");
    return ph;
}

nlohmann::json to_json(const LocationPlan& plan) {
    nlohmann::json sols = nlohmann::json::array();
    for (const auto& s : plan.solutions) {
        nlohmann::json front = nlohmann::json::array();
        for (const auto& ind : s.front) front.push_back({{"objectives", ind.eval.objectives}, {"phenotype", ind.eval.label}});
        nlohmann::json j{{"clustering", to_json(s.clustering)},
                         {"centroids", s.model.centroids},
                         {"counts", s.model.counts},
                         {"seed", s.model.seed},
                         {"front", front}};
        if (s.chosen)
            j["chosen"] = {{"mean_cr", s.chosen->mean_cr}, {"accuracy", s.chosen->accuracy}, {"crs", s.chosen->crs}};
        else
            j["infeasible"] = s.infeasible;
        sols.push_back(std::move(j));
    }
    nlohmann::json out{{"location", std::string(to_string(plan.location))},
                       {"baseline_cv", plan.baseline_cv},
                       {"error_threshold", error_threshold(plan.baseline_cv)},
                       {"solutions", sols}};
    out["chosen"] = plan.chosen ? nlohmann::json(*plan.chosen) : nlohmann::json(nullptr);
    return out;
}

P2Solution deployed_from_json(const nlohmann::json& plan) {
    if (plan.at("chosen").is_null())
        throw DomainError("location " + plan.at("location").get<std::string>() + " has no feasible solution");
    const auto& j = plan.at("solutions").at(plan.at("chosen").get<std::size_t>());
    P2Solution s;
    s.clustering = phenotype_p1_from_json(j.at("clustering"));
    s.model.features = s.clustering.selection();
    s.model.centroids = j.at("centroids").get<PointSet>();
    s.model.k = static_cast<int>(s.model.centroids.size());
    s.model.counts = j.at("counts").get<std::vector<std::size_t>>();
    s.model.seed = j.at("seed").get<std::uint64_t>();
    s.model.location = parse_location(plan.at("location").get<std::string>());
    const auto& c = j.at("chosen");
    s.chosen = Candidate{c.at("mean_cr").get<double>(), c.at("accuracy").get<double>(), c.at("crs").get<std::vector<int>>()};
    return s;
}

}  // namespace adaptcs
