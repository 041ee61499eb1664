#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "adaptcs/dataset.hpp"

namespace adaptcs {

/// Energy constants of the sensing node. All terms are mJ per second,
/// averaged over 5-s segments; q is a per-segment sample count summed over
/// the three axes (375 without compression).
struct EnergyModel {
    double sigma = 0.0;          // sensing, constant
    double tau_wake = 0.0;       // per radio wake
    double tau_sample = 0.0;     // per transmitted sample
    double tau_sample_sq = 0.0;  // per squared transmitted sample
    double sf_sample = 0.0;      // sparse filter, per kept sample
    double fg30_fixed = 0.0, fg30_sample = 0.0;  // features, 30-feature mode
    double fg6_fixed = 0.0, fg6_sample = 0.0;    // features, 6-feature mode
    double nl30 = 0.0, nl6 = 0.0;                // node localization
    double st = 0.0;                             // signal-type assignment
    double mm_fixed = 0.0, mm_sample = 0.0;      // measurement-matrix product

    double tau(double wakes_per_s, double q, double q_sq) const {
        return tau_wake * wakes_per_s + tau_sample * q + tau_sample_sq * q_sq;
    }
    double sf(double q) const { return sf_sample * q; }
    double fg(double q, int n_features) const;
    double nl(int n_features) const;
    double mm(double q) const { return mm_fixed + mm_sample * q; }
};

enum class Mode { baseline, naive, adaptive };
std::string to_string(Mode m);
Mode parse_mode(const std::string& name);

/// Totals accumulated over a replay.
struct EnergyCounts {
    long long segments = 0;
    long long wakes = 0;
    long long tx_samples = 0;       // transmitted samples
    double tx_samples_sq = 0.0;     // sum over segments of (samples per segment)^2
    long long kept_samples = 0;     // samples kept by the on-node sparse filter

    void add_segment(long long transmitted, long long kept, long long wakes_in_segment);
};


struct EnergyBreakdown {
    double sigma = 0.0;
    double sf = 0.0, fg = 0.0, nl = 0.0, st = 0.0, mm = 0.0;
    double pi = 0.0;
    double tau = 0.0;
    double total = 0.0;
};

/// sigma + pi + tau per second. Processing pi is every block for adaptive,
/// the measurement product alone for naive and nothing for baseline.
EnergyBreakdown energy_total(Mode mode, const EnergyCounts& counts, const EnergyModel& model, int n_features = 30);

/// Steady state with a fixed per-segment sample count and one wake per second.
EnergyBreakdown energy_at(Mode mode, double samples_per_segment, const EnergyModel& model, int n_features = 30);

double savings_percent(double baseline_total, double mode_total);

/// Flat `key = value` file; `#` starts a comment. Every key is required.
EnergyModel load_energy_config(const std::filesystem::path& file);
void save_energy_config(const std::filesystem::path& file, const EnergyModel& model, const std::string& comment);
std::string format_energy_config(const EnergyModel& model, const std::string& comment);
EnergyModel parse_energy_config(const std::string& text, const std::string& origin);

/// One row of measured reference energies (blank cells become nullopt).
struct EnergyReference {
    std::string row;  // location name, "Naive" or "Baseline"
    double samples = 0.0;
    std::optional<double> sigma, pi, tau, total, savings;
    std::optional<double> sf_uj, fg30, fg6, nl30, nl6, st_uj, mm, pi30, pi6;
};

std::vector<EnergyReference> load_energy_reference(const std::filesystem::path& csv);

/// Fits the model to reference rows. Sample-dependent terms use
/// non-negative least squares on relative residuals; constant terms are
/// row means. Transmission is affine in the wake rate with a linear and a
/// quadratic sample term.
EnergyModel calibrate_energy(const std::vector<EnergyReference>& rows);

/// Minimizes ||A x - b|| subject to x >= 0 by trying every active set
/// (meant for a handful of unknowns).
std::vector<double> nnls(const std::vector<std::vector<double>>& a, const std::vector<double>& b);

}  // namespace adaptcs
