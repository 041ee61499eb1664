// adaptcs command-line front end.
//
// Exit codes: 0 success, 1 domain error, 2 usage or I/O error.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "adaptcs/energy.hpp"
#include "adaptcs/errors.hpp"
#include "adaptcs/synth.hpp"
#include "adaptcs/workflow.hpp"

using namespace adaptcs;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
    std::optional<std::uint64_t> seed;
    std::string scale = "desk";
    std::string locations = "T,RA,LA,RL,LL";
    std::string energy_config;
    std::string out;
    bool force = false;
    std::vector<std::string> argv;
};

std::uint64_t require_seed(const Common& c) {
    if (!c.seed) throw CLI::RequiredError("--seed");
    return *c.seed;
}

/// Refuses to replace an existing file unless --force was given.
fs::path output_file(const Common& c, const std::string& name) {
    if (c.out.empty()) throw CLI::RequiredError("--out");
    const fs::path dir(c.out);
    fs::create_directories(dir);
    const fs::path p = dir / name;
    if (fs::exists(p) && !c.force) throw IoError(p.string() + " exists (use --force to overwrite)");
    return p;
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw IoError("cannot write " + p.string());
    f << text;
    if (!f) throw IoError("write failed: " + p.string());
}

void write_json(const fs::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

json read_json(const fs::path& p) {
    std::ifstream f(p);
    if (!f || !fs::is_regular_file(p)) throw IoError("cannot read " + p.string());
    try {
        return json::parse(f);
    } catch (const json::exception& e) {
        throw ParseError(p.string() + ": " + e.what());
    }
}

/// Timestamps and the command line live beside the outputs, never in them.
void write_meta(const Common& c, const std::string& command) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    json meta{{"command", command}, {"argv", c.argv}, {"finished", stamp}};
    if (c.seed) meta["seed"] = *c.seed;
    write_json(fs::path(c.out) / (command + ".meta.json"), meta);
}

std::set<Location> selected_locations(const Common& c) { return parse_locations(c.locations); }

struct Loaded {
    Seeds seeds;
    ScaleSettings scale;
    std::unique_ptr<Workspace> ws;
};

Loaded load_workspace(const std::string& corpus_path, const Common& c) {
    const Seeds seeds(require_seed(c));
    Corpus corpus = load_any(corpus_path, {kAllLocations.begin(), kAllLocations.end()});
    int max_index = 0;
    for (const auto& s : corpus.segments) max_index = std::max(max_index, s.segment_index);
    ScaleSettings scale = scale_settings(c.scale, max_index);
    auto ws = std::make_unique<Workspace>(subsample_segments(corpus, scale.stride), seeds.dataset);
    std::cerr << "corpus: " << ws->corpus().size() << " segments after stride " << scale.stride << "\n";
    return {seeds, scale, std::move(ws)};
}

EnergyModel energy_from(const Common& c) {
    const fs::path p = c.energy_config.empty() ? fs::path(ADAPTCS_SOURCE_DIR) / "config" / "energy.cfg"
                                               : fs::path(c.energy_config);
    return load_energy_config(p);
}

void cmd_ingest(const Common& c, const std::string& root) {
    const Corpus corpus = load_corpus(root, selected_locations(c));
    const fs::path archive = output_file(c, "corpus.jsonl");
    const fs::path manifest = output_file(c, "manifest.json");
    write_archive(corpus, archive);
    json counts = json::object();
    for (Location loc : kAllLocations) {
        const auto n = corpus.at(loc).size();
        if (n) counts[std::string(to_string(loc))] = n;
    }
    write_json(manifest, {{"format", "adaptcs-corpus"},
                          {"version", kArchiveVersion},
                          {"digest", corpus.provenance},
                          {"segments", corpus.size()},
                          {"per_location", counts}});
    write_meta(c, "ingest");
    std::cout << "ingested " << corpus.size() << " segments, digest " << corpus.provenance << "\n";
}

void cmd_synth(const Common& c, int segments, int subjects) {
    SynthConfig cfg;
    cfg.seed = require_seed(c);
    cfg.segments = segments;
    cfg.subjects = subjects;
    if (c.out.empty()) throw CLI::RequiredError("--out");
    if (fs::exists(c.out) && !fs::is_empty(c.out) && !c.force)
        throw IoError(c.out + " is not empty (use --force to overwrite)");
    write_synthetic_corpus(c.out, cfg);
    std::cout << "synthetic corpus written to " << c.out << "\n";
}

void cmd_calibrate(const Common& c, const std::string& reference) {
    const auto rows = load_energy_reference(reference);
    const EnergyModel model = calibrate_energy(rows);
    const fs::path p = output_file(c, "energy.cfg");
    save_energy_config(p, model, "calibrated by relative least squares from " + fs::path(reference).filename().string());
    std::cout << format_energy_config(model, "");
}

void cmd_train_baseline(const Common& c, const std::string& corpus) {
    const Loaded l = load_workspace(corpus, c);
    const BaselineResult r = train_baseline(*l.ws, l.seeds);
    std::ostringstream csv;
    csv << "location,test_segments,accuracy,error_threshold\n";
    json forests = json::object();
    for (const auto& [loc, acc] : r.accuracy) {
        csv << to_string(loc) << ',' << r.test.at(loc).total() << ',' << acc << ',' << error_threshold(acc) << '\n';
        forests[std::string(to_string(loc))] = to_json(r.activity.at(loc));
    }
    csv << "mean,," << r.mean_accuracy << ',' << error_threshold(r.mean_accuracy) << '\n';
    write_text(output_file(c, "baseline_accuracy.csv"), csv.str());
    write_json(output_file(c, "baseline_forests.json"), {{"format", "adaptcs-forests"}, {"version", 1}, {"forests", forests}});
    write_meta(c, "train-baseline");
    std::cout << csv.str();
}

void cmd_optimize_p1(const Common& c, const std::string& corpus) {
    const Loaded l = load_workspace(corpus, c);
    json selected = json::object();
    for (Location loc : selected_locations(c)) {
        const std::string name(to_string(loc));
        std::ofstream front(output_file(c, "p1_front_" + name + ".csv"));
        const P1Result r = optimize_p1(*l.ws, loc, l.scale, l.seeds, &front);
        json sols = json::array();
        for (const auto& ph : r.selected) sols.push_back(to_json(ph));
        selected[name] = {{"evaluations", r.evaluations}, {"front_size", r.front.size()}, {"selected", sols}};
        std::cout << name << ": " << r.front.size() << " front members, selected";
        for (const auto& ph : r.selected) std::cout << ' ' << ph.label();
        std::cout << "\n";
    }
    write_json(output_file(c, "p1_selected.json"),
               {{"format", "adaptcs-p1"}, {"version", 1}, {"scale", l.scale.name}, {"locations", selected}});
    write_meta(c, "optimize-p1");
}

void cmd_optimize_p2(const Common& c, const std::string& corpus, const std::string& p1_file) {
    const Loaded l = load_workspace(corpus, c);
    const json p1 = read_json(p1_file);
    ReconstructionCache cache(l.seeds.filter);
    json plans = json::object();
    for (Location loc : selected_locations(c)) {
        const std::string name(to_string(loc));
        if (!p1.at("locations").contains(name)) throw DomainError("no problem-1 solutions for " + name);
        std::vector<PhenotypeP1> clusterings;
        for (const auto& j : p1["locations"][name].at("selected")) clusterings.push_back(phenotype_p1_from_json(j));
        const CorrectnessTable table = correctness_table(*l.ws, loc, cache, l.seeds);
        std::ofstream front(output_file(c, "p2_front_" + name + ".csv"));
        const LocationPlan plan = optimize_p2(*l.ws, loc, clusterings, table, l.scale, l.seeds, &front);
        plans[name] = to_json(plan);
        std::cout << name << ": cv baseline " << table.baseline << "%, ";
        if (plan.chosen) {
            const auto& ch = *plan.solutions[*plan.chosen].chosen;
            std::cout << "mean cr " << ch.mean_cr << ", accuracy " << ch.accuracy << "\n";
        } else {
            std::cout << "no feasible solution\n";
        }
    }
    write_json(output_file(c, "p2_plans.json"),
               {{"format", "adaptcs-p2"}, {"version", 1}, {"scale", l.scale.name}, {"plans", plans}});
    write_meta(c, "optimize-p2");
}

void cmd_build_lut(const Common& c, const std::string& plans_file) {
    const json plans = read_json(plans_file).at("plans");
    LookupTable lut;
    for (const auto& [name, plan] : plans.items()) {
        const LutEntry e = make_lut_entry(deployed_from_json(plan));
        lut.entries.emplace(parse_location(name), e);
    }
    lut.validate();
    write_json(output_file(c, "lut.json"), to_json(lut));
    write_meta(c, "build-lut");
    for (const auto& [loc, e] : lut.entries) {
        std::cout << to_string(loc) << ": k=" << e.model.k << " crs";
        for (int cr : e.crs) std::cout << ' ' << cr;
        std::cout << ", mean cr " << e.mean_cr << (e.merged ? " (merged)" : "") << "\n";
    }
}

void cmd_simulate(const Common& c, const std::string& corpus, const std::string& lut_file, const std::string& modes,
                  std::optional<double> naive_cr, int n_features) {
    if (n_features != 30 && n_features != 6) throw CLI::ValidationError("--features", "must be 30 or 6");
    const Loaded l = load_workspace(corpus, c);
    const LookupTable lut = lut_from_json(read_json(lut_file));
    ReconstructionCache cache(l.seeds.filter);
    const FeatureSelection coarse = n_features == 6 ? FeatureSelection::reduced() : FeatureSelection::all();
    const ModelBundle models = train_models(*l.ws, cache, l.seeds, coarse);

    SimulationInputs in;
    in.streams = test_streams(*l.ws);
    in.coarse = &models.coarse;
    in.lut = &lut;
    in.compressed_backend = models.compressed_backend();
    in.raw_backend = models.raw_backend();
    in.energy = energy_from(c);
    in.n_features = n_features;
    in.seed = l.seeds.filter;
    in.modes.clear();
    std::stringstream ms(modes);
    for (std::string m; std::getline(ms, m, ',');) in.modes.push_back(parse_mode(m));
    if (naive_cr) {
        in.naive_cr = *naive_cr;
    } else {
        double lowest = 100.0;
        for (const auto& [loc, e] : lut.entries) lowest = std::min(lowest, e.mean_cr);
        in.naive_cr = lowest;
    }
    const RunReport r = simulate(in);
    write_text(output_file(c, "report.csv"), report_csv(r));
    write_json(output_file(c, "report.json"), to_json(r));
    write_meta(c, "simulate");
    std::cout << report_csv(r);
}

void cmd_report(const Common& c, const std::string& report_file) {
    const fs::path run(report_file);
    const json r = read_json(fs::is_directory(run) ? run / "report.json" : run);
    if (r.at("schema_version").get<int>() != RunReport::kSchemaVersion) throw ParseError("unsupported report schema");
    std::ostringstream acc, energy;
    acc << "mode,location,mean_cr,samples_per_segment,ar_accuracy,fine_loc_accuracy,coarse_loc_accuracy\n";
    energy << "mode,location,sigma,sf,fg,nl,st,mm,pi,tau,total,savings\n";
    for (const auto& row : r.at("rows")) {
        const std::string head = row.at("mode").get<std::string>() + "," + row.at("location").get<std::string>();
        acc << head << ',' << row.at("mean_cr") << ',' << row.at("samples_per_segment") << ','
            << row.at("ar_accuracy") << ',' << row.at("fine_loc_accuracy") << ','
            << (row.contains("coarse_loc_accuracy") ? row["coarse_loc_accuracy"].dump() : "") << '\n';
        const auto& e = row.at("energy");
        energy << head;
        for (const char* k : {"sigma", "sf", "fg", "nl", "st", "mm", "pi", "tau", "total"}) energy << ',' << e.at(k);
        energy << ',' << row.at("savings") << '\n';
    }
    write_text(output_file(c, "accuracy_table.csv"), acc.str());
    write_text(output_file(c, "energy_table.csv"), energy.str());
    if (r.contains("coarse_confusion")) {
        std::ostringstream cm;
        cm << "truth\\predicted";
        for (Location loc : kAllLocations) cm << ',' << to_string(loc);
        cm << '\n';
        const auto& counts = r["coarse_confusion"];
        for (std::size_t t = 0; t < counts.size(); ++t) {
            cm << to_string(kAllLocations[t]);
            for (const auto& v : counts[t]) cm << ',' << v;
            cm << '\n';
        }
        write_text(output_file(c, "coarse_confusion.csv"), cm.str());
    }
    write_meta(c, "report");
    std::cout << energy.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adaptive compressed sensing for on-body activity recognition"};
    app.require_subcommand(1);
    Common c;
    c.argv.assign(argv, argv + argc);

    auto add_common = [&c](CLI::App* sub, bool seed, bool scale) {
        sub->add_option("--out", c.out, "Output directory")->required();
        sub->add_flag("--force", c.force, "Overwrite existing outputs");
        sub->add_option("--locations", c.locations, "Comma-separated locations (T,RA,LA,RL,LL)");
        if (seed) sub->add_option("--seed", c.seed, "Master seed")->required();
        if (scale) sub->add_option("--scale", c.scale, "desk or paper")->check(CLI::IsMember({"desk", "paper"}));
    };

    std::string root, corpus, reference = (fs::path(ADAPTCS_SOURCE_DIR) / "data" / "energy_reference.csv").string();
    std::string p1_file, plans_file, lut_file, report_file, modes = "baseline,naive,adaptive";
    int problem = 0, segments = 60, subjects = 8, n_features = 30;
    std::optional<double> naive_cr;

    auto* ingest = app.add_subcommand("ingest", "Normalize a dataset tree into an archive");
    ingest->add_option("--root", root, "Dataset root (a01..a19/p1..p8/s01..s60.txt)")->required();
    add_common(ingest, false, false);

    auto* synth = app.add_subcommand("synth", "Write a synthetic corpus in the dataset layout");
    synth->add_option("--segments", segments, "Segments per recording")->check(CLI::Range(1, 60));
    synth->add_option("--subjects", subjects, "Subjects")->check(CLI::Range(3, 8));
    add_common(synth, true, false);

    auto* calibrate = app.add_subcommand("calibrate-energy", "Fit the energy model to reference rows");
    calibrate->add_option("--reference", reference, "Reference CSV");
    add_common(calibrate, false, false);

    auto* baseline = app.add_subcommand("train-baseline", "Train per-location recognizers on raw data");
    baseline->add_option("--corpus", corpus, "Dataset root or archive")->required();
    add_common(baseline, true, true);

    auto* optimize = app.add_subcommand("optimize", "Run problem 1 (signal types) or 2 (ratios)");
    optimize->add_option("--problem", problem, "1 or 2")->required()->check(CLI::IsMember({1, 2}));
    optimize->add_option("--corpus", corpus, "Dataset root or archive")->required();
    optimize->add_option("--p1", p1_file, "p1_selected.json (problem 2)");
    add_common(optimize, true, true);

    auto* build = app.add_subcommand("build-lut", "Assemble the look-up table from problem-2 plans");
    build->add_option("--plans", plans_file, "p2_plans.json")->required();
    add_common(build, false, false);

    auto* simulate_cmd = app.add_subcommand("simulate", "Replay the test streams through each mode");
    simulate_cmd->add_option("--corpus", corpus, "Dataset root or archive")->required();
    simulate_cmd->add_option("--lut", lut_file, "lut.json")->required();
    simulate_cmd->add_option("--energy-config", c.energy_config, "Energy constants (key = value)");
    simulate_cmd->add_option("--modes", modes, "Comma-separated modes");
    simulate_cmd->add_option("--naive-cr", naive_cr, "Naive ratio (default: lowest mean ratio in the table)");
    simulate_cmd->add_option("--features", n_features, "Node feature count, 30 or 6");
    add_common(simulate_cmd, true, true);

    auto* report = app.add_subcommand("report", "Tabulate a simulation report");
    report->add_option("--run", report_file, "report.json, or the directory holding it")->required();
    add_common(report, false, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*ingest) cmd_ingest(c, root);
        else if (*synth) cmd_synth(c, segments, subjects);
        else if (*calibrate) cmd_calibrate(c, reference);
        else if (*baseline) cmd_train_baseline(c, corpus);
        else if (*optimize) {
            if (problem == 1) cmd_optimize_p1(c, corpus);
            else {
                if (p1_file.empty()) throw CLI::RequiredError("--p1");
                cmd_optimize_p2(c, corpus, p1_file);
            }
        } else if (*build) cmd_build_lut(c, plans_file);
        else if (*simulate_cmd) cmd_simulate(c, corpus, lut_file, modes, naive_cr, n_features);
        else if (*report) cmd_report(c, report_file);
    } catch (const CLI::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
