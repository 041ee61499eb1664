#include "adaptcs/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include <json.hpp>

#include "adaptcs/errors.hpp"
#include "adaptcs/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace adaptcs {

namespace {

constexpr std::array<std::string_view, 5> kLocationNames{"T", "RA", "LA", "RL", "LL"};

std::string read_file(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IoError("cannot open " + file.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

auto key_of(const Segment& s) {
    return std::make_tuple(s.activity, s.subject, s.segment_index, index_of(s.location));
}

}  // namespace

std::string_view to_string(Location loc) { return kLocationNames[static_cast<std::size_t>(loc)]; }

Location parse_location(std::string_view name) {
    for (std::size_t i = 0; i < kLocationNames.size(); ++i)
        if (kLocationNames[i] == name) return static_cast<Location>(i);
    throw std::invalid_argument("unknown location '" + std::string(name) + "'");
}

std::set<Location> parse_locations(std::string_view list) {
    if (list == "all" || list.empty()) return {kAllLocations.begin(), kAllLocations.end()};
    std::set<Location> out;
    std::size_t start = 0;
    while (start <= list.size()) {
        const auto comma = list.find(',', start);
        const auto token = list.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                               : comma - start);
        if (!token.empty()) out.insert(parse_location(token));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    if (out.empty()) throw std::invalid_argument("empty location list");
    return out;
}

Corpus Corpus::at(Location loc) const {
    Corpus out;
    out.provenance = provenance;
    for (const auto& s : segments)
        if (s.location == loc) out.segments.push_back(s);
    return out;
}

void validate(const Segment& s) {
    if (s.activity < 1 || s.activity > kNumActivities)
        throw std::invalid_argument("segment activity out of range");
    for (const auto& axis : s.axes) {
        if (axis.size() != kSegmentSamples)
            throw std::invalid_argument("segment must have 125 samples per axis");
        for (double v : axis)
            if (!std::isfinite(v)) throw std::invalid_argument("segment has non-finite sample");
    }
}

void canonicalize(std::vector<Segment>& segments) {
    std::stable_sort(segments.begin(), segments.end(),
                     [](const Segment& a, const Segment& b) { return key_of(a) < key_of(b); });
}

std::vector<Segment> parse_segment_file(const fs::path& file, int activity, int subject,
                                        int segment_index, const std::set<Location>& locations) {
    const std::string text = read_file(file);
    std::vector<std::array<double, kFileColumns>> rows;
    std::size_t pos = 0;
    int line_no = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        std::string_view line(text.data() + pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.find_first_not_of(" \t,") == std::string_view::npos) {
            // Blank lines are tolerated only as trailing padding.
            if (text.find_first_not_of(" \t\r\n,", pos) == std::string::npos) break;
            throw IngestError(file.string() + ":" + std::to_string(line_no) + ": empty line");
        }
        std::array<double, kFileColumns> row{};
        int col = 0;
        std::size_t i = 0;
        while (i < line.size()) {
            while (i < line.size() && (line[i] == ',' || line[i] == ' ' || line[i] == '\t')) ++i;
            if (i >= line.size()) break;
            std::size_t j = i;
            while (j < line.size() && line[j] != ',' && line[j] != ' ' && line[j] != '\t') ++j;
            const auto token = line.substr(i, j - i);
            if (col >= kFileColumns)
                throw IngestError(file.string() + ":" + std::to_string(line_no) +
                                  ": more than 45 columns");
            double v = 0.0;
            const char* first = token.data();
            if (!token.empty() && token.front() == '+') ++first;
            auto [ptr, ec] = std::from_chars(first, token.data() + token.size(), v);
            if (ec != std::errc() || ptr != token.data() + token.size() || !std::isfinite(v))
                throw ParseError(file.string() + ":" + std::to_string(line_no) +
                                 ": invalid number '" + std::string(token) + "'");
            row[static_cast<std::size_t>(col++)] = v;
            i = j;
        }
        if (col != kFileColumns)
            throw IngestError(file.string() + ":" + std::to_string(line_no) + ": expected 45 columns, got " +
                              std::to_string(col));
        rows.push_back(row);
    }
    if (rows.size() != kSegmentSamples)
        throw IngestError(file.string() + ":" + std::to_string(line_no) + ": expected 125 rows, got " +
                          std::to_string(rows.size()));

    std::vector<Segment> out;
    for (Location loc : locations) {
        Segment s;
        s.location = loc;
        s.activity = activity;
        s.subject = subject;
        s.segment_index = segment_index;
        const int base = index_of(loc) * kColumnsPerUnit;
        for (int a = 0; a < 3; ++a) {
            auto& axis = s.axes[static_cast<std::size_t>(a)];
            axis.resize(kSegmentSamples);
            for (int r = 0; r < kSegmentSamples; ++r)
                axis[static_cast<std::size_t>(r)] = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(base + a)];
        }
        out.push_back(std::move(s));
    }
    return out;
}

Corpus load_corpus(const fs::path& root, const std::set<Location>& locations) {
    if (!fs::is_directory(root)) throw IoError("dataset root is not a directory: " + root.string());
    if (locations.empty()) throw std::invalid_argument("no locations requested");

    struct Entry {
        int activity, subject, segment;
        fs::path path;
    };
    std::vector<Entry> entries;
    for (int a = 1; a <= kNumActivities; ++a) {
        char adir[8];
        std::snprintf(adir, sizeof adir, "a%02d", a);
        for (int p = 1; p <= kNumSubjects; ++p) {
            const fs::path pdir = root / adir / ("p" + std::to_string(p));
            if (!fs::is_directory(pdir)) continue;
            for (const auto& f : fs::directory_iterator(pdir)) {
                const auto name = f.path().filename().string();
                int idx = 0;
                if (name.size() == 7 && name[0] == 's' && name.substr(3) == ".txt" &&
                    std::from_chars(name.data() + 1, name.data() + 3, idx).ec == std::errc() && idx >= 1)
                    entries.push_back({a, p, idx, f.path()});
            }
        }
    }
    if (entries.empty()) throw IoError("no segment files under " + root.string());
    std::sort(entries.begin(), entries.end(), [](const Entry& x, const Entry& y) {
        return std::tie(x.activity, x.subject, x.segment) < std::tie(y.activity, y.subject, y.segment);
    });

    Corpus corpus;
    Fnv1a digest;
    for (const auto& e : entries) {
        auto rel = fs::relative(e.path, root).generic_string();
        digest.update(rel);
        digest.update(read_file(e.path));
        auto segs = parse_segment_file(e.path, e.activity, e.subject, e.segment, locations);
        for (auto& s : segs) corpus.segments.push_back(std::move(s));
    }
    canonicalize(corpus.segments);
    corpus.provenance = hex64(digest.value());
    return corpus;
}

Corpus subsample_segments(const Corpus& corpus, int stride) {
    if (stride < 1) throw std::invalid_argument("stride must be >= 1");
    Corpus out;
    out.provenance = corpus.provenance;
    for (const auto& s : corpus.segments)
        if ((s.segment_index - 1) % stride == 0) out.segments.push_back(s);
    return out;
}

Split split_corpus(const Corpus& corpus, double ratio, std::uint64_t seed) {
    if (!(ratio > 0.0 && ratio < 1.0)) throw std::invalid_argument("split ratio must be in (0,1)");
    if (corpus.empty()) throw std::invalid_argument("cannot split an empty corpus");

    // Strata in canonical (location, activity) order.
    std::map<std::pair<int, int>, std::vector<std::size_t>> strata;
    for (std::size_t i = 0; i < corpus.segments.size(); ++i) {
        const auto& s = corpus.segments[i];
        strata[{index_of(s.location), s.activity}].push_back(i);
    }

    const std::size_t total = corpus.size();
    const auto target = static_cast<std::size_t>(std::llround(static_cast<double>(total) * ratio));

    // Largest-remainder apportionment keeps the global count within one segment.
    struct Quota {
        std::size_t n, take;
        double frac;
    };
    std::vector<Quota> quotas;
    std::size_t assigned = 0;
    for (const auto& [key, idx] : strata) {
        const double exact = static_cast<double>(idx.size()) * ratio;
        const auto fl = static_cast<std::size_t>(std::floor(exact));
        quotas.push_back({idx.size(), fl, exact - static_cast<double>(fl)});
        assigned += fl;
    }
    std::vector<std::size_t> order(quotas.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return quotas[a].frac > quotas[b].frac; });
    for (std::size_t i = 0; assigned < target && i < order.size(); ++i, ++assigned) ++quotas[order[i]].take;

    // Every class with >= 2 members lands in both halves.
    for (auto& q : quotas) {
        if (q.n >= 2 && q.take == 0) q.take = 1;
        if (q.n >= 2 && q.take == q.n) q.take = q.n - 1;
    }
    auto current = [&] {
        std::size_t s = 0;
        for (const auto& q : quotas) s += q.take;
        return s;
    };
    for (std::size_t cur = current(); cur != target;) {
        bool moved = false;
        for (std::size_t oi : order) {
            auto& q = quotas[oi];
            if (cur > target && q.take > (q.n >= 2 ? 1u : 0u)) {
                --q.take, --cur, moved = true;
            } else if (cur < target && q.take < (q.n >= 2 ? q.n - 1 : q.n)) {
                ++q.take, ++cur, moved = true;
            }
            if (cur == target) break;
        }
        if (!moved) break;
    }

    Rng rng(seed);
    std::vector<bool> in_train(total, false);
    std::size_t qi = 0;
    for (const auto& [key, idx] : strata) {
        auto shuffled = idx;
        for (std::size_t i = shuffled.size(); i > 1; --i)
            std::swap(shuffled[i - 1], shuffled[rng.uniform_index(i)]);
        for (std::size_t i = 0; i < quotas[qi].take; ++i) in_train[shuffled[i]] = true;
        ++qi;
    }

    Split split;
    split.ratio = ratio;
    split.seed = seed;
    split.train.provenance = split.test.provenance = corpus.provenance;
    for (std::size_t i = 0; i < total; ++i)
        (in_train[i] ? split.train : split.test).segments.push_back(corpus.segments[i]);
    return split;
}

void write_archive(const Corpus& corpus, const fs::path& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw IoError("cannot write " + file.string());
    json header = {{"format", "adaptcs-corpus"},
                   {"version", kArchiveVersion},
                   {"segments", corpus.size()},
                   {"provenance", corpus.provenance}};
    out << header.dump() << '\n';
    for (const auto& s : corpus.segments) {
        json rec = {{"activity", s.activity},
                    {"subject", s.subject},
                    {"segment", s.segment_index},
                    {"location", std::string(to_string(s.location))},
                    {"x", s.axes[0]},
                    {"y", s.axes[1]},
                    {"z", s.axes[2]}};
        out << rec.dump() << '\n';
    }
    if (!out) throw IoError("write failed: " + file.string());
}

Corpus read_archive(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IoError("cannot open " + file.string());
    std::string line;
    if (!std::getline(in, line)) throw ParseError(file.string() + ":1: missing archive header");
    Corpus corpus;
    std::size_t expected = 0;
    try {
        const auto header = json::parse(line);
        if (header.at("format") != "adaptcs-corpus" || header.at("version") != kArchiveVersion)
            throw ParseError(file.string() + ":1: unsupported archive format");
        expected = header.at("segments").get<std::size_t>();
        corpus.provenance = header.at("provenance").get<std::string>();
    } catch (const json::exception& e) {
        throw ParseError(file.string() + ":1: " + e.what());
    }
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            const auto rec = json::parse(line);
            Segment s;
            s.activity = rec.at("activity").get<int>();
            s.subject = rec.at("subject").get<int>();
            s.segment_index = rec.at("segment").get<int>();
            s.location = parse_location(rec.at("location").get<std::string>());
            s.axes[0] = rec.at("x").get<std::vector<double>>();
            s.axes[1] = rec.at("y").get<std::vector<double>>();
            s.axes[2] = rec.at("z").get<std::vector<double>>();
            validate(s);
            corpus.segments.push_back(std::move(s));
        } catch (const std::exception& e) {
            throw ParseError(file.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (corpus.size() != expected)
        throw ParseError(file.string() + ": header announces " + std::to_string(expected) +
                         " segments, found " + std::to_string(corpus.size()));
    return corpus;
}

Corpus load_any(const fs::path& path, const std::set<Location>& locations) {
    if (fs::is_directory(path)) return load_corpus(path, locations);
    if (!fs::exists(path)) throw IoError("no such corpus: " + path.string());
    Corpus all = read_archive(path);
    Corpus out;
    out.provenance = all.provenance;
    for (auto& s : all.segments)
        if (locations.count(s.location)) out.segments.push_back(std::move(s));
    canonicalize(out.segments);
    return out;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace adaptcs
