#include "adaptcs/energy.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "adaptcs/errors.hpp"

namespace adaptcs {

double EnergyModel::fg(double q, int n_features) const {
    if (n_features == 30) return fg30_fixed + fg30_sample * q;
    if (n_features == 6) return fg6_fixed + fg6_sample * q;
    throw std::invalid_argument("energy model covers 30 or 6 features");
}

double EnergyModel::nl(int n_features) const {
    if (n_features == 30) return nl30;
    if (n_features == 6) return nl6;
    throw std::invalid_argument("energy model covers 30 or 6 features");
}

std::string to_string(Mode m) {
    switch (m) {
        case Mode::baseline: return "baseline";
        case Mode::naive: return "naive";
        case Mode::adaptive: return "adaptive";
    }
    return "?";
}

Mode parse_mode(const std::string& name) {
    if (name == "baseline") return Mode::baseline;
    if (name == "naive") return Mode::naive;
    if (name == "adaptive") return Mode::adaptive;
    throw std::invalid_argument("unknown mode '" + name + "'");
}

void EnergyCounts::add_segment(long long transmitted, long long kept, long long wakes_in_segment) {
    if (transmitted < 0 || kept < 0 || wakes_in_segment < 0) throw std::invalid_argument("energy counts must be non-negative");
    ++segments;
    tx_samples += transmitted;
    tx_samples_sq += static_cast<double>(transmitted) * static_cast<double>(transmitted);
    kept_samples += kept;
    wakes += wakes_in_segment;
}

EnergyBreakdown energy_total(Mode mode, const EnergyCounts& c, const EnergyModel& m, int n_features) {
    if (c.segments < 0 || c.wakes < 0 || c.tx_samples < 0 || c.tx_samples_sq < 0.0 || c.kept_samples < 0)
        throw std::invalid_argument("energy counts must be non-negative");
    if (c.segments == 0) throw std::invalid_argument("energy of an empty run");
    const double n = static_cast<double>(c.segments);
    const double q_tx = static_cast<double>(c.tx_samples) / n;
    const double q_tx_sq = c.tx_samples_sq / n;
    const double q_kept = static_cast<double>(c.kept_samples) / n;
    const double wakes_per_s = static_cast<double>(c.wakes) / (n * static_cast<double>(kSegmentSeconds));

    EnergyBreakdown e;
    e.sigma = m.sigma;
    e.tau = m.tau(wakes_per_s, q_tx, q_tx_sq);
    if (mode == Mode::naive) {
        e.mm = m.mm(q_tx);
    } else if (mode == Mode::adaptive) {
        e.sf = m.sf(q_kept);
        e.fg = m.fg(q_kept, n_features);
        e.nl = m.nl(n_features);
        e.st = m.st;
        e.mm = m.mm(q_tx);
    }
    e.pi = e.sf + e.fg + e.nl + e.st + e.mm;
    e.total = e.sigma + e.pi + e.tau;
    return e;
}

EnergyBreakdown energy_at(Mode mode, double samples, const EnergyModel& m, int n_features) {
    if (samples < 0.0) throw std::invalid_argument("negative sample count");
    EnergyBreakdown e;
    e.sigma = m.sigma;
    e.tau = m.tau(1.0, samples, samples * samples);
    if (mode == Mode::naive) {
        e.mm = m.mm(samples);
    } else if (mode == Mode::adaptive) {
        e.sf = m.sf(samples);
        e.fg = m.fg(samples, n_features);
        e.nl = m.nl(n_features);
        e.st = m.st;
        e.mm = m.mm(samples);
    }
    e.pi = e.sf + e.fg + e.nl + e.st + e.mm;
    e.total = e.sigma + e.pi + e.tau;
    return e;
}

double savings_percent(double baseline_total, double mode_total) {
    if (!(baseline_total > 0.0)) throw std::invalid_argument("baseline energy must be positive");
    return 100.0 * (baseline_total - mode_total) / baseline_total;
}

namespace {

struct Key {
    const char* name;
    double EnergyModel::*field;
    const char* doc;
};

const std::vector<Key>& keys() {
    static const std::vector<Key> k{
        {"sigma", &EnergyModel::sigma, "sensing"},
        {"tau_wake", &EnergyModel::tau_wake, "transmission, per radio wake per second"},
        {"tau_sample", &EnergyModel::tau_sample, "transmission, per sample in a segment"},
        {"tau_sample_sq", &EnergyModel::tau_sample_sq, "transmission, per squared sample count"},
        {"sf_sample", &EnergyModel::sf_sample, "sparse filter, per kept sample"},
        {"fg30_fixed", &EnergyModel::fg30_fixed, "feature generation, 30 features"},
        {"fg30_sample", &EnergyModel::fg30_sample, "feature generation, 30 features, per kept sample"},
        {"fg6_fixed", &EnergyModel::fg6_fixed, "feature generation, 6 features"},
        {"fg6_sample", &EnergyModel::fg6_sample, "feature generation, 6 features, per kept sample"},
        {"nl30", &EnergyModel::nl30, "node localization, 30 features"},
        {"nl6", &EnergyModel::nl6, "node localization, 6 features"},
        {"st", &EnergyModel::st, "signal-type assignment"},
        {"mm_fixed", &EnergyModel::mm_fixed, "measurement-matrix product"},
        {"mm_sample", &EnergyModel::mm_sample, "measurement-matrix product, per transmitted sample"},
    };
    return k;
}

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

double parse_number(std::string_view s, const std::string& where) {
    const std::string str(trim(s));
    try {
        std::size_t used = 0;
        const double v = std::stod(str, &used);
        if (used != str.size() || !std::isfinite(v)) throw std::invalid_argument(str);
        return v;
    } catch (const std::exception&) {
        throw ParseError(where + ": not a number: '" + str + "'");
    }
}

}  // namespace

std::string format_energy_config(const EnergyModel& m, const std::string& comment) {
    std::ostringstream out;
    std::istringstream lines(comment);
    for (std::string line; std::getline(lines, line);) out << "# " << line << '\n';
    out << "# Units: mJ per second, averaged over 5-s segments. Sample counts are per\n"
           "# segment, summed over the three axes.\n";
    out << std::setprecision(10);
    for (const auto& k : keys()) out << "\n# " << k.doc << '\n' << k.name << " = " << m.*(k.field) << '\n';
    return out.str();
}

EnergyModel parse_energy_config(const std::string& text, const std::string& origin) {
    EnergyModel m;
    std::map<std::string, bool> seen;
    std::istringstream in(text);
    int line_no = 0;
    for (std::string raw; std::getline(in, raw);) {
        ++line_no;
        std::string_view line = raw;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        if (trim(line).empty()) continue;
        const std::string where = origin + ":" + std::to_string(line_no);
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ParseError(where + ": expected key = value");
        const std::string key(trim(line.substr(0, eq)));
        const Key* k = nullptr;
        for (const auto& cand : keys())
            if (key == cand.name) k = &cand;
        if (!k) throw ParseError(where + ": unknown key '" + key + "'");
        if (seen[key]) throw ParseError(where + ": duplicate key '" + key + "'");
        seen[key] = true;
        const double v = parse_number(line.substr(eq + 1), where);
        if (v < 0.0) throw ParseError(where + ": '" + key + "' must be non-negative");
        m.*(k->field) = v;
    }
    for (const auto& k : keys())
        if (!seen[k.name]) throw ParseError(origin + ": missing key '" + std::string(k.name) + "'");
    return m;
}

EnergyModel load_energy_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot read energy config " + file.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_energy_config(buf.str(), file.string());
}

void save_energy_config(const std::filesystem::path& file, const EnergyModel& model, const std::string& comment) {
    std::ofstream out(file);
    if (!out) throw IoError("cannot write energy config " + file.string());
    out << format_energy_config(model, comment);
    if (!out) throw IoError("write failed for " + file.string());
}

std::vector<EnergyReference> load_energy_reference(const std::filesystem::path& csv) {
    std::ifstream in(csv);
    if (!in) throw IoError("cannot read energy reference " + csv.string());
    std::vector<std::string> header;
    std::vector<EnergyReference> rows;
    int line_no = 0;
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        if (trim(line).empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) cells.emplace_back(trim(cell));
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        if (header.empty()) {
            header = cells;
            continue;
        }
        const std::string where = csv.string() + ":" + std::to_string(line_no);
        if (cells.size() != header.size()) throw ParseError(where + ": expected " + std::to_string(header.size()) + " cells");
        EnergyReference r;
        std::map<std::string, std::optional<double>*> opt{
            {"sigma", &r.sigma}, {"pi", &r.pi},     {"tau", &r.tau},     {"total", &r.total}, {"savings", &r.savings},
            {"sf_uj", &r.sf_uj}, {"fg30", &r.fg30}, {"fg6", &r.fg6},     {"nl30", &r.nl30},   {"nl6", &r.nl6},
            {"st_uj", &r.st_uj}, {"mm", &r.mm},     {"pi30", &r.pi30},   {"pi6", &r.pi6}};
        for (std::size_t i = 0; i < cells.size(); ++i) {
            const auto& col = header[i];
            if (col == "row") {
                r.row = cells[i];
            } else if (col == "samples") {
                r.samples = parse_number(cells[i], where);
            } else if (auto it = opt.find(col); it != opt.end()) {
                if (!cells[i].empty()) *it->second = parse_number(cells[i], where);
            } else {
                throw ParseError(where + ": unknown column '" + col + "'");
            }
        }
        rows.push_back(std::move(r));
    }
    if (rows.empty()) throw ParseError(csv.string() + ": no rows");
    return rows;
}

std::vector<double> nnls(const std::vector<std::vector<double>>& a, const std::vector<double>& b) {
    if (a.empty() || a.size() != b.size()) throw std::invalid_argument("nnls: shape mismatch");
    const std::size_t n = a[0].size();
    if (n == 0 || n > 10) throw std::invalid_argument("nnls: between 1 and 10 unknowns supported");
    std::vector<double> best(n, 0.0);
    double best_res = 0.0;
    for (double v : b) best_res += v * v;

    for (unsigned subset = 1; subset < (1u << n); ++subset) {
        std::vector<std::size_t> cols;
        for (std::size_t j = 0; j < n; ++j)
            if (subset & (1u << j)) cols.push_back(j);
        const std::size_t m = cols.size();
        // Normal equations, solved by Gaussian elimination with partial pivoting.
        std::vector<std::vector<double>> g(m, std::vector<double>(m + 1, 0.0));
        for (std::size_t r = 0; r < a.size(); ++r)
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t j = 0; j < m; ++j) g[i][j] += a[r][cols[i]] * a[r][cols[j]];
                g[i][m] += a[r][cols[i]] * b[r];
            }
        bool singular = false;
        for (std::size_t c = 0; c < m && !singular; ++c) {
            std::size_t piv = c;
            for (std::size_t r = c + 1; r < m; ++r)
                if (std::abs(g[r][c]) > std::abs(g[piv][c])) piv = r;
            if (std::abs(g[piv][c]) < 1e-300) {
                singular = true;
                break;
            }
            std::swap(g[c], g[piv]);
            for (std::size_t r = 0; r < m; ++r) {
                if (r == c) continue;
                const double f = g[r][c] / g[c][c];
                for (std::size_t k = c; k <= m; ++k) g[r][k] -= f * g[c][k];
            }
        }
        if (singular) continue;
        std::vector<double> x(n, 0.0);
        bool feasible = true;
        for (std::size_t i = 0; i < m; ++i) {
            x[cols[i]] = g[i][m] / g[i][i];
            if (x[cols[i]] < 0.0) feasible = false;
        }
        if (!feasible) continue;
        double res = 0.0;
        for (std::size_t r = 0; r < a.size(); ++r) {
            double pred = 0.0;
            for (std::size_t j = 0; j < n; ++j) pred += a[r][j] * x[j];
            res += (pred - b[r]) * (pred - b[r]);
        }
        if (res < best_res) {
            best_res = res;
            best = x;
        }
    }
    return best;
}

namespace {

/// Relative-residual NNLS: each row is scaled by 1 / target.
std::vector<double> fit_relative(const std::vector<std::vector<double>>& a, const std::vector<double>& b) {
    std::vector<std::vector<double>> as = a;
    std::vector<double> bs = b;
    for (std::size_t r = 0; r < a.size(); ++r) {
        if (!(b[r] > 0.0)) throw std::invalid_argument("energy calibration: targets must be positive");
        for (double& v : as[r]) v /= b[r];
        bs[r] = 1.0;
    }
    return nnls(as, bs);
}

double mean(const std::vector<double>& v) {
    if (v.empty()) throw DomainError("energy calibration: no rows for a constant term");
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

}  // namespace

EnergyModel calibrate_energy(const std::vector<EnergyReference>& rows) {
    EnergyModel m;
    std::vector<double> sigma, nl30, nl6, st;
    std::vector<std::vector<double>> a_tau, a_sf, a_fg30, a_fg6, a_mm;
    std::vector<double> b_tau, b_sf, b_fg30, b_fg6, b_mm;
    for (const auto& r : rows) {
        const double q = r.samples;
        if (r.sigma) sigma.push_back(*r.sigma);
        if (r.tau) {
            a_tau.push_back({1.0, q, q * q});
            b_tau.push_back(*r.tau);
        }
        if (r.sf_uj && r.fg30) {  // location rows only: the naive row repeats a location
            a_sf.push_back({q});
            b_sf.push_back(*r.sf_uj * 1e-3);
        }
        if (r.fg30) {
            a_fg30.push_back({1.0, q});
            b_fg30.push_back(*r.fg30);
        }
        if (r.fg6) {
            a_fg6.push_back({1.0, q});
            b_fg6.push_back(*r.fg6);
        }
        if (r.mm) {
            a_mm.push_back({1.0, q});
            b_mm.push_back(*r.mm);
        }
        if (r.nl30) nl30.push_back(*r.nl30);
        if (r.nl6) nl6.push_back(*r.nl6);
        if (r.st_uj) st.push_back(*r.st_uj * 1e-3);
    }
    if (a_tau.size() < 3 || a_fg30.size() < 2 || a_fg6.size() < 2 || a_mm.size() < 2 || a_sf.empty())
        throw DomainError("energy calibration: too few reference rows");

    m.sigma = mean(sigma);
    const auto tau = fit_relative(a_tau, b_tau);
    m.tau_wake = tau[0];
    m.tau_sample = tau[1];
    m.tau_sample_sq = tau[2];
    m.sf_sample = fit_relative(a_sf, b_sf)[0];
    const auto fg30 = fit_relative(a_fg30, b_fg30);
    m.fg30_fixed = fg30[0];
    m.fg30_sample = fg30[1];
    const auto fg6 = fit_relative(a_fg6, b_fg6);
    m.fg6_fixed = fg6[0];
    m.fg6_sample = fg6[1];
    const auto mm = fit_relative(a_mm, b_mm);
    m.mm_fixed = mm[0];
    m.mm_sample = mm[1];
    m.nl30 = mean(nl30);
    m.nl6 = mean(nl6);
    m.st = mean(st);
    return m;
}

}  // namespace adaptcs
