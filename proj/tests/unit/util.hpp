#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "adaptcs/dataset.hpp"
#include "adaptcs/rng.hpp"

namespace testutil {

/// Fresh directory under the system temp dir, removed on destruction.
struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() / ("adaptcs-unit-" + tag);
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

/// Writes a rows x cols file of comma-separated values where column c of row r
/// holds r + c / 100.
inline void write_grid(const std::filesystem::path& file, int rows, int cols, const std::string& sep = ",") {
    std::filesystem::create_directories(file.parent_path());
    std::ofstream f(file);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) f << (c ? sep : "") << r + c / 100.0;
        f << '\n';
    }
}

inline adaptcs::Segment random_segment(std::uint64_t seed, int activity = 1, adaptcs::Location loc = adaptcs::Location::T) {
    adaptcs::Rng rng(seed);
    adaptcs::Segment s;
    s.location = loc;
    s.activity = activity;
    for (auto& axis : s.axes) {
        axis.resize(adaptcs::kSegmentSamples);
        double level = 0.0;
        for (auto& v : axis) v = (level += rng.normal());
    }
    return s;
}

}  // namespace testutil
