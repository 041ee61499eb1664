#pragma once

#include <cstdint>
#include <filesystem>

namespace adaptcs {

/// Parameters of the synthetic stand-in for the daily/sports activity corpus.
struct SynthConfig {
    int activities = 19;
    int subjects = 8;
    int segments = 60;  ///< files per (activity, subject), s01..sNN
    std::uint64_t seed = 1;
};

/// Writes a directory tree in the 45-column, 25 Hz text format that
/// load_corpus() reads: a{01..19}/p{1..8}/s{01..NN}.txt.
///
/// Each recording is a continuous 5-minute simulation per unit: a posture
/// dependent gravity vector plus cadence-locked harmonics (richer on legs),
/// heel-strike impacts for running, jumping and stairs, slow cadence and
/// amplitude drift, per-subject scale/tilt variation and sensor noise. Left and
/// right limbs are mirror images across the lateral axis with half a stride of
/// phase offset, which is what makes the two legs hard to tell apart.
void write_synthetic_corpus(const std::filesystem::path& root, const SynthConfig& cfg);

}  // namespace adaptcs
