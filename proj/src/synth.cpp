#include "adaptcs/synth.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "adaptcs/dataset.hpp"
#include "adaptcs/errors.hpp"
#include "adaptcs/rng.hpp"

namespace fs = std::filesystem;

namespace adaptcs {

namespace {

using Vec3 = std::array<double, 3>;
constexpr double kGravity = 9.81;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

enum Posture { Upright, Sit, Back, Side, Recline, Forward, Row, Bent, kPostures };
enum Group { Torso, Arm, Leg };

// Gravity direction per posture for T, RA, LA, RL, LL. X runs along the body
// segment, Y is lateral (mirrored between left and right), Z anterior.
constexpr std::array<std::array<Vec3, 5>, kPostures> kPostureGravity{{
    /* Upright */ {{{9.5, 0.3, -2.5}, {9.3, -2.6, 0.6}, {9.3, 2.6, 0.6}, {9.6, -0.6, 1.8}, {9.6, 0.6, 1.8}}},
    /* Sit     */ {{{9.2, 0.3, -3.4}, {8.4, -2.4, 4.0}, {8.4, 2.4, 4.0}, {1.6, -0.6, 9.6}, {1.6, 0.6, 9.6}}},
    /* Back    */ {{{2.6, 0.3, -9.4}, {1.2, -2.2, -9.5}, {1.2, 2.2, -9.5}, {0.4, -0.6, -9.7}, {0.4, 0.6, -9.7}}},
    /* Side    */ {{{0.8, -9.7, 0.6}, {1.6, -9.4, 2.2}, {3.6, -8.6, 3.0}, {1.0, -9.7, 0.6}, {2.4, -9.3, 1.9}}},
    /* Recline */ {{{6.9, 0.3, -6.9}, {5.0, -2.0, 7.6}, {5.0, 2.0, 7.6}, {3.8, -0.6, 9.0}, {3.8, 0.6, 9.0}}},
    /* Forward */ {{{9.0, 0.3, -3.8}, {6.4, -2.1, 6.9}, {6.4, 2.1, 6.9}, {5.0, -0.6, 8.4}, {5.0, 0.6, 8.4}}},
    /* Row     */ {{{7.6, 0.3, -6.0}, {3.0, -1.8, 9.1}, {3.0, 1.8, 9.1}, {5.9, -0.6, 7.8}, {5.9, 0.6, 7.8}}},
    /* Bent    */ {{{8.8, 0.3, -4.2}, {7.0, -2.5, 6.3}, {7.0, 2.5, 6.3}, {8.0, -0.6, 5.6}, {8.0, 0.6, 5.6}}},
}};

struct Profile {
    Posture posture;
    double cadence;                 // stride frequency, Hz (0 = static)
    std::array<Vec3, 3> amplitude;  // first-harmonic amplitude per group and axis
    double impact = 0.0;            // heel-strike pulse height
    double irregular = 0.0;         // 0 periodic .. 1 erratic
    bool legs_in_phase = false;
    double sway = 0.0;              // slow vertical acceleration (elevator)
};

// Activities 1..19 in dataset order.
const std::array<Profile, 19>& profiles() {
    static const std::array<Profile, 19> p{{
        {Sit, 0.0, {{{0, 0, 0}, {0, 0, 0}, {0, 0, 0}}}},                                             // sitting
        {Upright, 0.0, {{{0, 0, 0}, {0, 0, 0}, {0, 0, 0}}}},                                         // standing
        {Back, 0.0, {{{0, 0, 0}, {0, 0, 0}, {0, 0, 0}}}},                                            // lying on back
        {Side, 0.0, {{{0, 0, 0}, {0, 0, 0}, {0, 0, 0}}}},                                            // lying on right side
        {Bent, 0.80, {{{1.8, 0.6, 1.0}, {1.5, 0.4, 1.8}, {4.0, 1.0, 5.0}}}, 1.5},                    // ascending stairs
        {Upright, 0.92, {{{2.2, 0.7, 1.1}, {1.8, 0.5, 1.9}, {4.2, 1.0, 4.6}}}, 3.5},                 // descending stairs
        {Upright, 0.0, {{{0, 0, 0}, {0, 0, 0}, {0, 0, 0}}}, 0.0, 0.0, false, 0.35},                  // elevator, still
        {Upright, 0.60, {{{0.4, 0.3, 0.3}, {0.8, 0.3, 0.8}, {1.0, 0.4, 1.2}}}, 0.0, 0.7, false, 0.3},  // elevator, moving
        {Upright, 0.90, {{{1.5, 0.6, 0.8}, {2.0, 0.5, 2.5}, {3.5, 0.8, 4.0}}}, 1.0, 0.15},           // walking, parking lot
        {Upright, 0.85, {{{1.4, 0.5, 0.7}, {1.9, 0.5, 2.3}, {3.3, 0.8, 3.8}}}, 0.8},                 // treadmill flat
        {Forward, 0.85, {{{1.6, 0.5, 0.9}, {1.6, 0.4, 2.0}, {3.8, 0.8, 4.4}}}, 0.8},                 // treadmill inclined
        {Upright, 1.35, {{{6.0, 1.5, 2.5}, {6.0, 1.5, 6.0}, {12.0, 2.5, 10.0}}}, 6.0, 0.05},         // running
        {Bent, 0.75, {{{0.8, 0.3, 0.4}, {0.4, 0.2, 0.4}, {3.0, 0.6, 3.5}}}},                         // stepper
        {Upright, 0.95, {{{1.2, 0.5, 0.8}, {3.0, 0.8, 3.5}, {3.5, 0.8, 4.0}}}},                      // cross trainer
        {Recline, 1.00, {{{0.3, 0.2, 0.3}, {0.3, 0.2, 0.3}, {4.0, 0.8, 4.5}}}},                      // cycling, horizontal
        {Forward, 1.05, {{{0.6, 0.3, 0.4}, {0.5, 0.2, 0.5}, {4.5, 0.8, 5.0}}}},                      // cycling, vertical
        {Row, 0.45, {{{3.0, 0.4, 4.0}, {5.0, 0.8, 6.0}, {4.0, 0.6, 5.0}}}},                          // rowing
        {Upright, 2.00, {{{10.0, 1.0, 3.0}, {8.0, 1.5, 5.0}, {14.0, 2.0, 6.0}}}, 9.0, 0.05, true},  // jumping
        {Upright, 1.20, {{{3.0, 1.5, 2.0}, {6.0, 2.0, 6.0}, {6.0, 1.5, 6.0}}}, 3.0, 0.8},            // basketball
    }};
    return p;
}

Group group_of(int loc) { return loc == 0 ? Torso : (loc <= 2 ? Arm : Leg); }

struct Recording {
    // samples[loc][axis][n] over the whole recording
    std::array<std::array<std::vector<double>, 3>, 5> samples;
};

Recording simulate_recording(int activity, std::uint64_t seed, int n_samples) {
    const Profile& prof = profiles()[static_cast<std::size_t>(activity - 1)];
    Rng rng(seed);

    // Subject/session level variation.
    const double amp_scale = rng.uniform(0.8, 1.25);
    const double cadence = prof.cadence * rng.uniform(0.9, 1.12);
    const double drift_phase_f = rng.uniform(0.0, kTwoPi);
    const double drift_phase_a = rng.uniform(0.0, kTwoPi);
    const double dt = 1.0 / kSampleRateHz;

    // Shared stride phase (integrated instantaneous cadence) and amplitude envelope.
    std::vector<double> phase(static_cast<std::size_t>(n_samples));
    std::vector<double> envelope(static_cast<std::size_t>(n_samples));
    double theta = rng.uniform(0.0, kTwoPi);
    double erratic = 0.0;
    for (int n = 0; n < n_samples; ++n) {
        const double t = n * dt;
        const double f = cadence * (1.0 + 0.04 * std::sin(kTwoPi * t / 70.0 + drift_phase_f));
        erratic = 0.97 * erratic + 0.25 * rng.normal();
        theta += kTwoPi * f * dt * (1.0 + 0.35 * prof.irregular * std::tanh(erratic));
        phase[static_cast<std::size_t>(n)] = theta;
        envelope[static_cast<std::size_t>(n)] =
            amp_scale * (1.0 + 0.12 * std::sin(kTwoPi * t / 45.0 + drift_phase_a)) *
            (1.0 + 0.5 * prof.irregular * std::tanh(0.5 * erratic));
    }

    Recording rec;
    constexpr std::array<double, 3> kRho{0.45, 0.40, 0.58};  // harmonic decay per group
    constexpr int kHarmonics = 6;
    for (int loc = 0; loc < 5; ++loc) {
        const Group g = group_of(loc);
        const bool left = loc == 2 || loc == 4;
        const double mirror = left ? -1.0 : 1.0;

        Vec3 grav = kPostureGravity[static_cast<std::size_t>(prof.posture)][static_cast<std::size_t>(loc)];
        for (double& c : grav) c += 0.6 * rng.normal();
        const double norm = std::sqrt(grav[0] * grav[0] + grav[1] * grav[1] + grav[2] * grav[2]);
        for (double& c : grav) c *= kGravity / norm;

        // Torso sees every step (twice the stride rate); limbs see the stride.
        const double rate = g == Torso ? 2.0 : 1.0;
        const double offset = (g != Torso && left && !prof.legs_in_phase) ? std::numbers::pi : 0.0;
        std::array<std::array<double, kHarmonics>, 3> hphase{};
        for (auto& ax : hphase)
            for (double& ph : ax) ph = rng.uniform(0.0, kTwoPi);
        const double noise = prof.cadence > 0.0 ? 0.15 : 0.08;

        for (int a = 0; a < 3; ++a) {
            auto& out = rec.samples[static_cast<std::size_t>(loc)][static_cast<std::size_t>(a)];
            out.resize(static_cast<std::size_t>(n_samples));
            const double amp1 = prof.amplitude[static_cast<std::size_t>(g)][static_cast<std::size_t>(a)];
            const double sign = a == 1 ? mirror : 1.0;
            for (int n = 0; n < n_samples; ++n) {
                const auto ni = static_cast<std::size_t>(n);
                const double th = rate * phase[ni] + offset;
                double v = grav[static_cast<std::size_t>(a)];
                double h_amp = amp1 * envelope[ni];
                for (int h = 1; h <= kHarmonics && amp1 > 0.0; ++h) {
                    v += sign * h_amp * std::cos(h * th + hphase[static_cast<std::size_t>(a)][static_cast<std::size_t>(h - 1)]);
                    h_amp *= kRho[static_cast<std::size_t>(g)];
                }
                if (prof.impact > 0.0 && a != 1) {
                    // Narrow pulse at each foot strike; limbs further from the ground see less.
                    const double w = std::cos(th);
                    const double share = g == Leg ? 1.0 : (g == Torso ? 0.6 : 0.35);
                    v += share * prof.impact * envelope[ni] * std::pow(std::max(0.0, w), 24.0);
                }
                if (prof.sway > 0.0 && a == 0)
                    v += prof.sway * std::sin(kTwoPi * 0.08 * n * dt + drift_phase_a);
                v += noise * rng.normal();
                out[ni] = v;
            }
        }
    }
    return rec;
}

}  // namespace

void write_synthetic_corpus(const fs::path& root, const SynthConfig& cfg) {
    if (cfg.activities < 1 || cfg.activities > kNumActivities || cfg.subjects < 1 ||
        cfg.subjects > kNumSubjects || cfg.segments < 1 || cfg.segments > 60)
        throw std::invalid_argument("synthetic corpus dimensions out of range");
    const int n_samples = cfg.segments * kSegmentSamples;
    for (int act = 1; act <= cfg.activities; ++act) {
        for (int subj = 1; subj <= cfg.subjects; ++subj) {
            const std::uint64_t rec_seed =
                derive_seed(derive_seed(cfg.seed, "synth"), static_cast<std::uint64_t>(act * 100 + subj));
            const Recording rec = simulate_recording(act, rec_seed, n_samples);
            Rng filler(derive_seed(rec_seed, std::uint64_t{7}));

            char adir[16];
            std::snprintf(adir, sizeof adir, "a%02d", act);
            const fs::path dir = root / adir / ("p" + std::to_string(subj));
            fs::create_directories(dir);
            for (int s = 0; s < cfg.segments; ++s) {
                char name[16];
                std::snprintf(name, sizeof name, "s%02d.txt", s + 1);
                std::ofstream out(dir / name, std::ios::binary);
                if (!out) throw IoError("cannot write " + (dir / name).string());
                std::string line;
                char buf[32];
                for (int r = 0; r < kSegmentSamples; ++r) {
                    line.clear();
                    const auto n = static_cast<std::size_t>(s * kSegmentSamples + r);
                    for (int loc = 0; loc < 5; ++loc) {
                        for (int a = 0; a < 3; ++a) {
                            std::snprintf(buf, sizeof buf, "%.4f,", rec.samples[static_cast<std::size_t>(loc)][static_cast<std::size_t>(a)][n]);
                            line += buf;
                        }
                        // Gyroscope and magnetometer channels are not modelled.
                        for (int c = 0; c < 6; ++c) {
                            std::snprintf(buf, sizeof buf, "%.4f,", (c < 3 ? 0.0 : 0.5) + 0.01 * filler.normal());
                            line += buf;
                        }
                    }
                    line.back() = '\n';
                    out << line;
                }
            }
        }
    }
}

}  // namespace adaptcs
