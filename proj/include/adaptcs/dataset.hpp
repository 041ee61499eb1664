#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace adaptcs {

/// On-body sensor placement. Integer encoding is stable (0..4).
enum class Location : std::uint8_t { T = 0, RA = 1, LA = 2, RL = 3, LL = 4 };

inline constexpr std::array<Location, 5> kAllLocations{Location::T, Location::RA, Location::LA,
                                                       Location::RL, Location::LL};
inline constexpr int kNumLocations = 5;
inline constexpr int kNumActivities = 19;
inline constexpr int kNumSubjects = 8;
inline constexpr int kSegmentSamples = 125;
inline constexpr int kSampleRateHz = 25;
inline constexpr int kSegmentSeconds = 5;
inline constexpr int kFileColumns = 45;
inline constexpr int kColumnsPerUnit = 9;

std::string_view to_string(Location loc);
Location parse_location(std::string_view name);
/// Parses a comma-separated list such as "T,RA,LL" (or "all").
std::set<Location> parse_locations(std::string_view list);
inline int index_of(Location loc) { return static_cast<int>(loc); }

/// Five seconds of 3-axis accelerometer data from one unit.
struct Segment {
    Location location = Location::T;
    int activity = 1;       // 1..19
    int subject = 1;        // 1..8
    int segment_index = 1;  // 1..60 in the source tree
    std::array<std::vector<double>, 3> axes;  // X, Y, Z; kSegmentSamples each

    std::span<const double> axis(int a) const { return axes[static_cast<std::size_t>(a)]; }
};

struct Corpus {
    std::vector<Segment> segments;
    std::string provenance;  // hex digest of the source files

    std::size_t size() const { return segments.size(); }
    bool empty() const { return segments.empty(); }
    /// Segments recorded at one location, in canonical order.
    Corpus at(Location loc) const;
};

struct Split {
    Corpus train;
    Corpus test;
    double ratio = 0.8;
    std::uint64_t seed = 0;
};

/// Checks shape and finiteness; throws std::invalid_argument on violation.
void validate(const Segment& s);

/// Canonical ordering: activity, subject, segment index, location.
void canonicalize(std::vector<Segment>& segments);

/// Parses one 125 x 45 file (comma or whitespace separated) and extracts the
/// accelerometer columns of the requested units. Throws IngestError on shape
/// problems and ParseError on non-numeric tokens, both naming file and line.
std::vector<Segment> parse_segment_file(const std::filesystem::path& file, int activity,
                                        int subject, int segment_index,
                                        const std::set<Location>& locations);

/// Loads a directory tree a01..a19/p1..p8/sNN.txt.
Corpus load_corpus(const std::filesystem::path& root, const std::set<Location>& locations);

/// Keeps only segments whose index satisfies (index - 1) % stride == 0.
Corpus subsample_segments(const Corpus& corpus, int stride);

/// Deterministic split stratified by (location, activity).
Split split_corpus(const Corpus& corpus, double ratio, std::uint64_t seed);

/// Line-delimited JSON archive: a header line then one record per segment.
inline constexpr int kArchiveVersion = 1;
void write_archive(const Corpus& corpus, const std::filesystem::path& file);
Corpus read_archive(const std::filesystem::path& file);

/// Loads a directory tree or an archive file, whichever the path names.
Corpus load_any(const std::filesystem::path& path, const std::set<Location>& locations);

std::string hex64(std::uint64_t v);

}  // namespace adaptcs
