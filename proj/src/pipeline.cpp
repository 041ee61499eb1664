#include "adaptcs/pipeline.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "adaptcs/errors.hpp"
#include "adaptcs/rng.hpp"

namespace adaptcs {

void LookupTable::validate() const {
    for (Location loc : kAllLocations) {
        const auto it = entries.find(loc);
        if (it == entries.end()) throw DomainError("look-up table lacks location " + std::string(to_string(loc)));
        const LutEntry& e = it->second;
        if (e.model.centroids.empty() || e.crs.size() != e.model.centroids.size())
            throw DomainError("look-up table entry " + std::string(to_string(loc)) + " needs one ratio per centroid");
        for (int cr : e.crs)
            if (!on_cr_grid(cr))
                throw DomainError("look-up table ratio " + std::to_string(cr) + " is off the 4% grid");
        for (const auto& c : e.model.centroids)
            if (c.size() != e.model.features.size())
                throw DomainError("look-up table centroid width does not match its feature selection");
    }
}

const LutEntry& LookupTable::at(Location loc) const {
    const auto it = entries.find(loc);
    if (it == entries.end()) throw DomainError("look-up table lacks location " + std::string(to_string(loc)));
    return it->second;
}

std::pair<int, int> LookupTable::lookup(Location loc, const FeatureVector& fv) const {
    const LutEntry& e = at(loc);
    const int id = nearest(e.model.centroids, project(fv, e.model.features));
    return {id, e.crs[static_cast<std::size_t>(id)]};
}

FeatureSelection LookupTable::features() const {
    std::bitset<kNumFeatures> m;
    for (const auto& [loc, e] : entries) m |= e.model.features.mask();
    return FeatureSelection::from_mask(m);
}

nlohmann::json to_json(const LookupTable& lut) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& [loc, e] : lut.entries) {
        std::vector<std::string> names;
        for (int i : e.model.features.indices()) names.push_back(feature_names()[static_cast<std::size_t>(i)]);
        entries.push_back({{"location", std::string(to_string(loc))},
                           {"feature_selection", names},
                           {"centroids", e.model.centroids},
                           {"crs", e.crs},
                           {"counts", e.model.counts},
                           {"seed", e.model.seed},
                           {"merged", e.merged},
                           {"mean_cr", e.mean_cr}});
    }
    return {{"format", "adaptcs-lut"}, {"version", 1}, {"entries", entries}};
}

LookupTable lut_from_json(const nlohmann::json& j) {
    if (j.value("format", std::string()) != "adaptcs-lut") throw ParseError("not a look-up table document");
    LookupTable lut;
    for (const auto& ej : j.at("entries")) {
        LutEntry e;
        const Location loc = parse_location(ej.at("location").get<std::string>());
        std::vector<int> idx;
        for (const auto& n : ej.at("feature_selection")) idx.push_back(feature_index_by_name(n.get<std::string>()));
        e.model.features = FeatureSelection(idx);
        e.model.centroids = ej.at("centroids").get<PointSet>();
        e.model.k = static_cast<int>(e.model.centroids.size());
        e.model.location = loc;
        e.model.counts = ej.at("counts").get<std::vector<std::size_t>>();
        e.model.seed = ej.at("seed").get<std::uint64_t>();
        e.crs = ej.at("crs").get<std::vector<int>>();
        e.merged = ej.at("merged").get<bool>();
        e.mean_cr = ej.at("mean_cr").get<double>();
        lut.entries[loc] = std::move(e);
    }
    lut.validate();
    return lut;
}

CompressedSegment compress_segment(const Segment& segment, double cr_percent, std::uint64_t pattern_seed,
                                   Location location_hint, int cluster) {
    if (cr_percent < 0.0 || cr_percent >= 100.0) throw std::invalid_argument("compression ratio must be in [0, 100)");
    const DctBasis& basis = default_basis();
    const std::size_t p = basis.size();
    const std::size_t q = kept_count_for_cr(p, cr_percent);
    const auto mm = MeasurementMatrix::from(basis, SensingPattern::make(p, q, pattern_seed));
    CompressedSegment out;
    out.p = static_cast<std::uint16_t>(p);
    out.seed = pattern_seed;
    out.cr_percent = static_cast<std::uint8_t>(std::lround(cr_percent));
    out.location = location_hint;
    out.cluster = static_cast<std::uint8_t>(cluster);
    for (int a = 0; a < 3; ++a) {
        const auto y = mm.measure(basis.forward(segment.axis(a)));
        out.y[static_cast<std::size_t>(a)].assign(y.begin(), y.end());
    }
    return out;
}

NodeOutput node_step(NodeState& state, const Segment& segment, const NodeModels& models) {
    if (!models.coarse || !models.lut) throw DomainError("node is not initialized: missing model or look-up table");
    const std::size_t p = kSegmentSamples;
    NodeOutput out;
    out.filter_cr = state.current_cr;
    const auto pattern = SensingPattern::make(p, kept_count_for_cr(p, state.current_cr), derive_seed(state.seed, 2 * state.step));
    std::array<std::vector<double>, 3> kept;
    for (int a = 0; a < 3; ++a) kept[static_cast<std::size_t>(a)] = apply_pattern(segment.axis(a), pattern);
    out.kept_samples = 3 * pattern.q();

    std::bitset<kNumFeatures> need = models.coarse->features.mask() | models.lut->features().mask();
    out.features = extract_segment(kept, FeatureSelection::from_mask(need));
    out.predicted_location = static_cast<Location>(predict(*models.coarse, out.features).label);
    const auto [cluster, cr] = models.lut->lookup(out.predicted_location, out.features);
    out.cluster = cluster;
    out.payload = compress_segment(segment, cr, derive_seed(state.seed, 2 * state.step + 1), out.predicted_location, cluster);
    state.current_cr = cr;
    ++state.step;
    return out;
}

BackendResult backend_step(const CompressedSegment& cs, const BackendModels& models, const RecoveryConfig& cfg) {
    if (!models.fine_location) throw DomainError("back-end has no localization model");
    std::optional<DctBasis> own;
    if (cs.p != kSegmentSamples) own.emplace(cs.p);
    const DctBasis& basis = own ? *own : default_basis();
    const auto mm = MeasurementMatrix::from(basis, cs.pattern());
    BackendResult out;
    for (int a = 0; a < 3; ++a) {
        const auto& yf = cs.y[static_cast<std::size_t>(a)];
        const std::vector<double> y(yf.begin(), yf.end());
        Recovery r = reconstruct(y, mm, basis, cfg);
        out.converged = out.converged && r.converged;
        out.signal[static_cast<std::size_t>(a)] = std::move(r.signal);
    }
    out.features = extract_segment(out.signal, FeatureSelection::all());
    out.fine_location = static_cast<Location>(predict(*models.fine_location, out.features).label);
    const auto it = models.activity.find(out.fine_location);
    if (it == models.activity.end() || !it->second)
        throw DomainError("no activity model for location " + std::string(to_string(out.fine_location)));
    out.activity = predict(*it->second, out.features).label + 1;
    return out;
}

const ModeRow* RunReport::find(Mode m, Location loc) const {
    for (const auto& r : rows)
        if (r.mode == m && r.location == loc) return &r;
    return nullptr;
}

double RunReport::mean_savings(Mode m) const {
    double s = 0.0;
    int n = 0;
    for (const auto& r : rows)
        if (r.mode == m) {
            s += r.savings;
            ++n;
        }
    if (n == 0) throw DomainError("report has no rows for mode " + to_string(m));
    return s / n;
}

double RunReport::mean_ar_accuracy(Mode m) const {
    double s = 0.0;
    int n = 0;
    for (const auto& r : rows)
        if (r.mode == m) {
            s += r.ar_accuracy;
            ++n;
        }
    if (n == 0) throw DomainError("report has no rows for mode " + to_string(m));
    return s / n;
}

namespace {

constexpr long long kWakesPerSegment = kSegmentSeconds;  // one radio wake per second

}  // namespace

RunReport simulate(const SimulationInputs& in) {
    RunReport report;
    report.seed = in.seed;
    report.n_features = in.n_features;
    report.naive_cr = in.naive_cr;
    const std::uint64_t filter_seed = derive_seed(in.seed, std::string_view("filter"));

    for (Mode mode : in.modes) {
        if (mode == Mode::naive && !in.naive_cr) throw DomainError("naive mode needs a compression ratio");
        if (mode == Mode::adaptive && (!in.coarse || !in.lut)) throw DomainError("adaptive mode needs a node model and look-up table");
        const BackendModels& backend = mode == Mode::baseline ? in.raw_backend : in.compressed_backend;
        if (!backend.fine_location) throw DomainError("missing back-end models for mode " + to_string(mode));
        if (mode == Mode::adaptive) report.coarse_confusion = ConfusionMatrix(kNumLocations);

        for (const auto& [loc, stream] : in.streams) {
            if (stream.empty()) continue;
            ModeRow row;
            row.mode = mode;
            row.location = loc;
            const std::uint64_t loc_seed = derive_seed(derive_seed(filter_seed, to_string(mode)), static_cast<std::uint64_t>(index_of(loc)));
            NodeState state;
            state.seed = loc_seed;
            long long ar_ok = 0, fine_ok = 0, coarse_ok = 0;
            double cr_sum = 0.0;
            for (std::size_t i = 0; i < stream.size(); ++i) {
                const Segment& seg = *stream[i];
                CompressedSegment payload;
                long long kept = 0;
                double cr = 0.0;
                if (mode == Mode::adaptive) {
                    const NodeModels nm{in.coarse, in.lut};
                    NodeOutput node = node_step(state, seg, nm);
                    payload = std::move(node.payload);
                    kept = static_cast<long long>(node.kept_samples);
                    cr = state.current_cr;
                    coarse_ok += node.predicted_location == loc;
                    report.coarse_confusion->add(index_of(loc), index_of(node.predicted_location));
                    const int reference = in.lut->lookup(loc, node.features).second;
                    row.over_compressed += state.current_cr > reference;
                    row.under_compressed += state.current_cr < reference;
                } else {
                    cr = mode == Mode::naive ? *in.naive_cr : 0.0;
                    payload = compress_segment(seg, cr, derive_seed(loc_seed, static_cast<std::uint64_t>(i)), loc, 0);
                }
                // Through the wire format, as the back-end would receive it.
                const CompressedSegment received = decode(encode(payload));
                const auto tx = static_cast<long long>(received.transmitted_samples());
                row.counts.add_segment(tx, kept, tx > 0 ? kWakesPerSegment : 0);
                row.transmitted_samples += tx;
                cr_sum += cr;

                const BackendResult be = backend_step(received, backend, in.recovery);
                row.unconverged += !be.converged;
                ar_ok += be.activity == seg.activity;
                fine_ok += be.fine_location == loc;
            }
            const auto n = static_cast<double>(stream.size());
            row.segments = static_cast<long long>(stream.size());
            row.mean_cr = cr_sum / n;
            row.samples_per_segment = static_cast<double>(row.transmitted_samples) / n;
            row.ar_accuracy = 100.0 * static_cast<double>(ar_ok) / n;
            row.fine_loc_accuracy = 100.0 * static_cast<double>(fine_ok) / n;
            if (mode == Mode::adaptive) row.coarse_loc_accuracy = 100.0 * static_cast<double>(coarse_ok) / n;
            row.energy = energy_total(mode, row.counts, in.energy, in.n_features);

            EnergyCounts base;
            for (long long s = 0; s < row.segments; ++s) base.add_segment(3 * kSegmentSamples, 0, kWakesPerSegment);
            row.savings = savings_percent(energy_total(Mode::baseline, base, in.energy).total, row.energy.total);
            report.rows.push_back(row);
        }
    }
    return report;
}

namespace {

std::string num(double v) {
    std::ostringstream o;
    o.precision(6);
    o << v;
    return o.str();
}

}  // namespace

std::string report_csv(const RunReport& r) {
    std::ostringstream out;
    out << "mode,location,segments,mean_cr,samples_per_segment,ar_accuracy,fine_loc_accuracy,coarse_loc_accuracy,"
           "over_compressed,under_compressed,unconverged,sigma,sf,fg,nl,st,mm,pi,tau,total,savings\n";
    for (const auto& row : r.rows) {
        const auto& e = row.energy;
        out << to_string(row.mode) << ',' << to_string(row.location) << ',' << row.segments << ',' << num(row.mean_cr)
            << ',' << num(row.samples_per_segment) << ',' << num(row.ar_accuracy) << ',' << num(row.fine_loc_accuracy)
            << ',' << (row.coarse_loc_accuracy ? num(*row.coarse_loc_accuracy) : "") << ',' << row.over_compressed
            << ',' << row.under_compressed << ',' << row.unconverged << ',' << num(e.sigma) << ',' << num(e.sf) << ','
            << num(e.fg) << ',' << num(e.nl) << ',' << num(e.st) << ',' << num(e.mm) << ',' << num(e.pi) << ','
            << num(e.tau) << ',' << num(e.total) << ',' << num(row.savings) << '\n';
    }
    return out.str();
}

nlohmann::json to_json(const RunReport& r) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : r.rows) {
        const auto& e = row.energy;
        nlohmann::json j{{"mode", to_string(row.mode)},
                         {"location", std::string(to_string(row.location))},
                         {"segments", row.segments},
                         {"mean_cr", row.mean_cr},
                         {"samples_per_segment", row.samples_per_segment},
                         {"transmitted_samples", row.transmitted_samples},
                         {"ar_accuracy", row.ar_accuracy},
                         {"fine_loc_accuracy", row.fine_loc_accuracy},
                         {"over_compressed", row.over_compressed},
                         {"under_compressed", row.under_compressed},
                         {"unconverged", row.unconverged},
                         {"energy",
                          {{"sigma", e.sigma}, {"sf", e.sf}, {"fg", e.fg}, {"nl", e.nl}, {"st", e.st}, {"mm", e.mm},
                           {"pi", e.pi}, {"tau", e.tau}, {"total", e.total}}},
                         {"savings", row.savings}};
        if (row.coarse_loc_accuracy) j["coarse_loc_accuracy"] = *row.coarse_loc_accuracy;
        rows.push_back(std::move(j));
    }
    nlohmann::json out{{"schema_version", RunReport::kSchemaVersion},
                       {"seed", r.seed},
                       {"n_features", r.n_features},
                       {"rows", rows}};
    if (r.naive_cr) out["naive_cr"] = *r.naive_cr;
    if (r.coarse_confusion) out["coarse_confusion"] = r.coarse_confusion->counts;
    nlohmann::json means = nlohmann::json::object();
    for (Mode m : {Mode::baseline, Mode::naive, Mode::adaptive}) {
        bool any = false;
        for (const auto& row : r.rows) any = any || row.mode == m;
        if (any) means[to_string(m)] = {{"savings", r.mean_savings(m)}, {"ar_accuracy", r.mean_ar_accuracy(m)}};
    }
    out["means"] = means;
    return out;
}

}  // namespace adaptcs
