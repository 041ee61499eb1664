#include <doctest.h>

#include <set>

#include "adaptcs/dataset.hpp"
#include "adaptcs/errors.hpp"
#include "adaptcs/synth.hpp"
#include "util.hpp"

using namespace adaptcs;
using testutil::TempDir;
using testutil::write_grid;

TEST_SUITE("dataset") {
    TEST_CASE("location encoding is stable") {
        CHECK(kAllLocations.size() == 5);
        for (int i = 0; i < 5; ++i) CHECK(index_of(kAllLocations[static_cast<std::size_t>(i)]) == i);
        CHECK(parse_location("RL") == Location::RL);
        CHECK(to_string(Location::LA) == "LA");
        CHECK_THROWS_AS(parse_location("XX"), std::invalid_argument);
        CHECK(parse_locations("all").size() == 5);
        CHECK(parse_locations("T,LL") == std::set<Location>{Location::T, Location::LL});
    }

    TEST_CASE("one well-formed file gives one segment per location") {
        TempDir dir("ds-one");
        write_grid(dir.path / "a03" / "p2" / "s07.txt", 125, 45);
        const Corpus c = load_corpus(dir.path, {Location::T});
        REQUIRE(c.size() == 1);
        const Segment& s = c.segments[0];
        CHECK(s.activity == 3);
        CHECK(s.subject == 2);
        CHECK(s.segment_index == 7);
        for (int a = 0; a < 3; ++a) CHECK(s.axes[static_cast<std::size_t>(a)].size() == 125);
        // Torso accelerometer is columns 0..2; row r column c holds r + c/100.
        CHECK(s.axes[1][10] == doctest::Approx(10.01));

        const Corpus all = load_corpus(dir.path, {kAllLocations.begin(), kAllLocations.end()});
        CHECK(all.size() == 5);
        // Right-leg unit starts at column 27.
        CHECK(all.at(Location::RL).segments[0].axes[0][0] == doctest::Approx(0.27));
    }

    TEST_CASE("whitespace separated files parse identically") {
        TempDir a("ds-comma"), b("ds-space");
        write_grid(a.path / "a01" / "p1" / "s01.txt", 125, 45, ",");
        write_grid(b.path / "a01" / "p1" / "s01.txt", 125, 45, " ");
        const auto ca = load_corpus(a.path, {Location::LA});
        const auto cb = load_corpus(b.path, {Location::LA});
        CHECK(ca.segments[0].axes == cb.segments[0].axes);
    }

    TEST_CASE("malformed files are rejected with file and line") {
        TempDir dir("ds-bad");
        write_grid(dir.path / "a01" / "p1" / "s01.txt", 124, 45);
        CHECK_THROWS_AS(load_corpus(dir.path, {Location::T}), IngestError);

        TempDir cols("ds-cols");
        write_grid(cols.path / "a01" / "p1" / "s01.txt", 125, 44);
        CHECK_THROWS_AS(load_corpus(cols.path, {Location::T}), IngestError);

        TempDir tok("ds-token");
        const auto f = tok.path / "a01" / "p1" / "s01.txt";
        write_grid(f, 125, 45);
        {
            std::ofstream out(f, std::ios::app);
        }
        std::string text;
        {
            std::ifstream in(f);
            text.assign(std::istreambuf_iterator<char>(in), {});
        }
        text.replace(text.find("0.01"), 4, "abcd");
        {
            std::ofstream out(f);
            out << text;
        }
        try {
            load_corpus(tok.path, {Location::T});
            FAIL("expected a parse error");
        } catch (const ParseError& e) {
            CHECK(std::string(e.what()).find("s01.txt:1") != std::string::npos);
        }

        CHECK_THROWS_AS(load_corpus(tok.path / "missing", {Location::T}), IoError);
    }

    TEST_CASE("synthetic corpus has the full count and canonical order") {
        TempDir dir("ds-synth");
        SynthConfig cfg;
        cfg.activities = 19;
        cfg.subjects = 8;
        cfg.segments = 2;
        cfg.seed = 5;
        write_synthetic_corpus(dir.path, cfg);
        const Corpus c = load_corpus(dir.path, {kAllLocations.begin(), kAllLocations.end()});
        CHECK(c.size() == 19u * 8u * 2u * 5u);
        std::set<std::tuple<int, int, int, int>> keys;
        for (std::size_t i = 0; i < c.size(); ++i) {
            const auto& s = c.segments[i];
            CHECK_NOTHROW(validate(s));
            keys.insert({s.subject, s.activity, s.segment_index, index_of(s.location)});
            if (i) {
                const auto& p = c.segments[i - 1];
                CHECK(std::tie(p.activity, p.subject, p.segment_index, p.location) <
                      std::tie(s.activity, s.subject, s.segment_index, s.location));
            }
        }
        CHECK(keys.size() == c.size());

        const Corpus again = load_corpus(dir.path, {kAllLocations.begin(), kAllLocations.end()});
        CHECK(again.provenance == c.provenance);
        for (std::size_t i = 0; i < c.size(); ++i) CHECK(again.segments[i].axes == c.segments[i].axes);

        SUBCASE("archive round trip") {
            const auto file = dir.path / "corpus.jsonl";
            write_archive(c, file);
            const Corpus back = read_archive(file);
            REQUIRE(back.size() == c.size());
            CHECK(back.provenance == c.provenance);
            for (std::size_t i = 0; i < c.size(); ++i) CHECK(back.segments[i].axes == c.segments[i].axes);
            const Corpus any = load_any(file, {Location::T});
            CHECK(any.size() == c.at(Location::T).size());
        }
    }

    TEST_CASE("split is a deterministic stratified partition") {
        Corpus c;
        for (int i = 0; i < 100; ++i) {
            Segment s = testutil::random_segment(static_cast<std::uint64_t>(i), 1 + i % 2);
            s.segment_index = i + 1;
            c.segments.push_back(std::move(s));
        }
        canonicalize(c.segments);
        const Split a = split_corpus(c, 0.8, 7);
        const Split b = split_corpus(c, 0.8, 7);
        CHECK(a.train.size() == 80);
        CHECK(a.test.size() == 20);
        std::set<int> tr, te;
        for (std::size_t i = 0; i < a.train.size(); ++i) {
            CHECK(a.train.segments[i].segment_index == b.train.segments[i].segment_index);
            tr.insert(a.train.segments[i].segment_index);
        }
        for (const auto& s : a.test.segments) te.insert(s.segment_index);
        CHECK(tr.size() + te.size() == 100);
        for (int x : te) CHECK(tr.count(x) == 0);
        int class2_test = 0;
        for (const auto& s : a.test.segments) class2_test += s.activity == 2;
        CHECK(class2_test == 10);

        const Split other = split_corpus(c, 0.8, 8);
        std::set<int> te2;
        for (const auto& s : other.test.segments) te2.insert(s.segment_index);
        CHECK(te2 != te);

        CHECK_THROWS_AS(split_corpus(c, 1.0, 7), std::invalid_argument);
        CHECK_THROWS_AS(split_corpus(Corpus{}, 0.5, 7), std::invalid_argument);
    }

    TEST_CASE("subsampling keeps every stride-th segment index") {
        Corpus c;
        for (int i = 1; i <= 10; ++i) {
            Segment s = testutil::random_segment(static_cast<std::uint64_t>(i));
            s.segment_index = i;
            c.segments.push_back(std::move(s));
        }
        const Corpus sub = subsample_segments(c, 3);
        CHECK(sub.size() == 4);
        CHECK(subsample_segments(c, 1).size() == 10);
        CHECK_THROWS_AS(subsample_segments(c, 0), std::invalid_argument);
    }

    TEST_CASE("validate rejects bad shapes") {
        Segment s = testutil::random_segment(1);
        CHECK_NOTHROW(validate(s));
        s.axes[2].pop_back();
        CHECK_THROWS_AS(validate(s), std::invalid_argument);
        s = testutil::random_segment(1);
        s.axes[0][3] = std::numeric_limits<double>::quiet_NaN();
        CHECK_THROWS_AS(validate(s), std::invalid_argument);
        s = testutil::random_segment(1);
        s.activity = 20;
        CHECK_THROWS_AS(validate(s), std::invalid_argument);
    }
}
