#include "adaptcs/problems.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "adaptcs/errors.hpp"

namespace adaptcs {

namespace {

std::vector<std::string> split_array(const std::string& text) {
    if (text.size() < 2 || text.front() != '[' || text.back() != ']') return {};
    std::vector<std::string> out;
    std::string cur;
    for (std::size_t i = 1; i + 1 < text.size(); ++i) {
        if (text[i] == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += text[i];
        }
    }
    out.push_back(cur);
    return out;
}

std::optional<int> to_int(const std::string& s) {
    if (s.empty() || s.size() > 3) return std::nullopt;
    int v = 0;
    for (char c : s) {
        if (c < '0' || c > '9') return std::nullopt;
        v = v * 10 + (c - '0');
    }
    return v;
}

}  // namespace

std::string PhenotypeP1::label() const {
    const auto sel = selection();
    return "k=" + std::to_string(k) + "|" + (sel.empty() ? std::string("-") : sel.label());
}

std::string PhenotypeP2::label() const {
    std::string out = "[";
    for (std::size_t i = 0; i < crs.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(crs[i]);
    }
    return out + "]";
}

const std::string& p1_grammar_text() {
    static const std::string text = [] {
        std::string s = "<Model>   ::= [<K>";
        for (int i = 0; i < kNumFeatures; ++i) s += ",<Boolean>";
        s += "]\n<K>       ::= ";
        for (int k = kMinClusters; k <= kMaxClusters; ++k) s += (k > kMinClusters ? "|" : "") + std::to_string(k);
        s += "\n<Boolean> ::= TRUE|FALSE\n";
        return s;
    }();
    return text;
}

const Grammar& p1_grammar() {
    static const Grammar g = parse_bnf(p1_grammar_text());
    return g;
}

std::string p2_grammar_text(int k) {
    if (k < 1) throw std::invalid_argument("problem-2 grammar needs k >= 1");
    std::string s = "<CRs> ::= [<CR>";
    for (int i = 1; i < k; ++i) s += ",<CR>";
    s += "]\n<CR>  ::= ";
    for (int l = 0; l < kCrLevels; ++l) s += (l ? "|" : "") + std::to_string(l * kCrStep);
    return s + "\n";
}

std::optional<PhenotypeP1> parse_p1(const std::string& text) {
    const auto items = split_array(text);
    if (items.size() != 1 + kNumFeatures) return std::nullopt;
    const auto k = to_int(items[0]);
    if (!k || *k < kMinClusters || *k > kMaxClusters) return std::nullopt;
    PhenotypeP1 ph;
    ph.k = *k;
    for (int i = 0; i < kNumFeatures; ++i) {
        const auto& b = items[static_cast<std::size_t>(i) + 1];
        if (b == "TRUE")
            ph.mask.set(static_cast<std::size_t>(i));
        else if (b != "FALSE")
            return std::nullopt;
    }
    return ph;
}

std::optional<PhenotypeP2> parse_p2(const std::string& text, int k) {
    const auto items = split_array(text);
    if (items.size() != static_cast<std::size_t>(k)) return std::nullopt;
    PhenotypeP2 ph;
    for (const auto& it : items) {
        const auto v = to_int(it);
        if (!v || !on_cr_grid(*v)) return std::nullopt;
        ph.crs.push_back(*v);
    }
    return ph;
}

ProblemP1::ProblemP1(std::vector<FeatureVector> training, std::uint64_t cluster_seed, Grammar grammar)
    : training_(std::move(training)), seed_(cluster_seed), grammar_(std::move(grammar)) {
    if (training_.empty()) throw std::invalid_argument("problem 1: no training features");
}

Objectives ProblemP1::objectives(const PhenotypeP1& ph) {
    const std::string key = ph.label();
    if (const auto it = cache_.find(key); it != cache_.end()) return it->second;
    Objectives obj = kPenaltyP1;
    const auto sel = ph.selection();
    if (!sel.empty() && ph.k >= kMinClusters && ph.k <= kMaxClusters) {
        PointSet points;
        points.reserve(training_.size());
        for (const auto& fv : training_) points.push_back(project(fv, sel));
        try {
            auto fit = kmeans_fit(points, ph.k, seed_);
            fit.model.features = sel;
            const double db = davies_bouldin(fit.model, points);
            obj = {static_cast<double>(sel.size()), db, 1.0 / ph.k};
        } catch (const std::invalid_argument&) {
            // degenerate clustering: keep the penalty
        }
    }
    cache_.emplace(key, obj);
    return obj;
}

Evaluation ProblemP1::evaluate(const std::vector<int>& genotype) {
    const Derivation d = decode({genotype, kWrapLimit}, grammar_);
    const auto ph = d.valid ? parse_p1(d.text) : std::nullopt;
    if (!ph) return {kPenaltyP1, "invalid"};
    return {objectives(*ph), ph->label()};
}

ProblemP2::ProblemP2(std::vector<int> cluster_of_segment, int k, CorrectnessSource correct)
    : cluster_of_(std::move(cluster_of_segment)), k_(k), source_(std::move(correct)),
      grammar_(parse_bnf(p2_grammar_text(k))) {
    if (cluster_of_.empty()) throw std::invalid_argument("problem 2: no training segments");
    counts_.assign(static_cast<std::size_t>(k), 0);
    for (int c : cluster_of_) {
        if (c < 0 || c >= k) throw std::invalid_argument("problem 2: cluster id out of range");
        ++counts_[static_cast<std::size_t>(c)];
    }
}

const std::vector<std::uint8_t>& ProblemP2::level(int lvl) {
    auto it = levels_.find(lvl);
    if (it == levels_.end()) {
        auto flags = source_(lvl);
        if (flags.size() != cluster_of_.size()) throw std::invalid_argument("problem 2: correctness table size mismatch");
        it = levels_.emplace(lvl, std::move(flags)).first;
    }
    return it->second;
}

double ProblemP2::accuracy(const std::vector<int>& crs) {
    if (crs.size() != static_cast<std::size_t>(k_)) throw std::invalid_argument("problem 2: one ratio per cluster");
    std::size_t ok = 0;
    for (std::size_t s = 0; s < cluster_of_.size(); ++s) {
        const int cr = crs[static_cast<std::size_t>(cluster_of_[s])];
        ok += level(cr / kCrStep)[s];
    }
    return 100.0 * static_cast<double>(ok) / static_cast<double>(cluster_of_.size());
}

Objectives ProblemP2::objectives(const PhenotypeP2& ph) {
    for (int cr : ph.crs)
        if (!on_cr_grid(cr)) return kPenaltyP2;
    const double cr_bar = weighted_mean_cr(counts_, ph.crs);
    return {1.0 - cr_bar / 100.0, 1.0 - accuracy(ph.crs) / 100.0};
}

Evaluation ProblemP2::evaluate(const std::vector<int>& genotype) {
    const Derivation d = decode({genotype, kWrapLimit}, grammar_);
    const auto ph = d.valid ? parse_p2(d.text, k_) : std::nullopt;
    if (!ph) return {kPenaltyP2, "invalid"};
    return {objectives(*ph), ph->label()};
}

double error_threshold(double baseline_accuracy) { return (100.0 - baseline_accuracy) + 5.0; }

Candidate select_solution(const std::vector<Candidate>& front, double baseline_accuracy) {
    if (front.empty()) throw std::invalid_argument("select_solution: empty front");
    const double eps = error_threshold(baseline_accuracy);
    constexpr double kSlack = 1e-9;
    const Candidate* best = nullptr;
    double closest = std::numeric_limits<double>::infinity();
    for (const auto& c : front) {
        const double err = 100.0 - c.accuracy;
        if (err > eps + kSlack) {
            closest = std::min(closest, err - eps);
            continue;
        }
        if (!best || c.mean_cr > best->mean_cr ||
            (c.mean_cr == best->mean_cr &&
             (c.accuracy > best->accuracy || (c.accuracy == best->accuracy && c.crs < best->crs))))
            best = &c;
    }
    if (!best) {
        std::ostringstream msg;
        msg << "no solution within the error budget of " << eps << " points; the closest exceeds it by " << closest;
        throw DomainError(msg.str());
    }
    return *best;
}

std::vector<PhenotypeP1> select_p1_solutions(const std::vector<std::pair<PhenotypeP1, Objectives>>& front) {
    if (front.empty()) throw std::invalid_argument("select_p1_solutions: empty front");
    // Best representative for each k.
    std::map<int, const std::pair<PhenotypeP1, Objectives>*> per_k;
    for (const auto& entry : front) {
        auto& slot = per_k[entry.first.k];
        if (!slot || entry.second[0] < slot->second[0] ||
            (entry.second[0] == slot->second[0] && entry.second[1] < slot->second[1]))
            slot = &entry;
    }
    std::vector<const std::pair<PhenotypeP1, Objectives>*> by_k;
    for (const auto& [k, e] : per_k) by_k.push_back(e);
    std::vector<std::size_t> picks{0, (by_k.size() - 1) / 2, by_k.size() - 1};
    picks.erase(std::unique(picks.begin(), picks.end()), picks.end());
    std::vector<PhenotypeP1> out;
    for (std::size_t i : picks) out.push_back(by_k[i]->first);
    return out;
}

}  // namespace adaptcs
