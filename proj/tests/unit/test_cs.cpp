#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "adaptcs/cs.hpp"
#include "adaptcs/errors.hpp"
#include "adaptcs/pipeline.hpp"
#include "adaptcs/rng.hpp"
#include "util.hpp"

using namespace adaptcs;

namespace {

// Orthonormal DCT-II synthesis element written out directly.
double dct_entry(std::size_t n, std::size_t k, std::size_t p) {
    const double scale = k == 0 ? std::sqrt(1.0 / static_cast<double>(p)) : std::sqrt(2.0 / static_cast<double>(p));
    return scale * std::cos(std::numbers::pi * (2.0 * static_cast<double>(n) + 1.0) * static_cast<double>(k) /
                            (2.0 * static_cast<double>(p)));
}

RecoveryConfig tight() {
    RecoveryConfig cfg;
    cfg.epsilon_rel = 1e-8;
    cfg.max_iter = 5000;
    return cfg;
}

}  // namespace

TEST_SUITE("cs") {
    TEST_CASE("basis matches the closed form and is orthonormal") {
        const DctBasis b(125);
        double worst = 0.0;
        for (std::size_t n = 0; n < 125; ++n)
            for (std::size_t k = 0; k < 125; ++k) worst = std::max(worst, std::abs(b.psi()(n, k) - dct_entry(n, k, 125)));
        CHECK(worst < 1e-12);
        for (std::size_t n = 0; n < 125; ++n) CHECK(b.psi()(n, 0) == doctest::Approx(1.0 / std::sqrt(125.0)));
        CHECK_THROWS_AS(DctBasis(0), std::invalid_argument);
    }

    TEST_CASE("constant vector has only a DC coefficient") {
        const DctBasis b(4);
        const std::vector<double> ones{1, 1, 1, 1};
        const auto c = b.forward(ones);
        CHECK(c[0] == doctest::Approx(2.0));
        for (int k = 1; k < 4; ++k) CHECK(std::abs(c[static_cast<std::size_t>(k)]) < 1e-12);
    }

    TEST_CASE("forward and inverse are a pair") {
        const DctBasis& b = default_basis();
        Rng rng(3);
        std::vector<double> x(125);
        for (auto& v : x) v = rng.normal();
        const auto back = b.inverse(b.forward(x));
        for (std::size_t i = 0; i < 125; ++i) CHECK(std::abs(back[i] - x[i]) < 1e-9);
    }

    TEST_CASE("sensing patterns") {
        const auto full = SensingPattern::make(125, 125, 9);
        for (std::size_t i = 0; i < 125; ++i) CHECK(full.kept[i] == i);
        CHECK(kept_count(125, 0.328) == 41);
        CHECK(kept_count_for_cr(125, 12) == 110);
        CHECK(kept_count_for_cr(125, 96) == 5);
        CHECK(kept_count_for_cr(125, 0) == 125);
        const auto a = SensingPattern::make(125, 41, 77), b = SensingPattern::make(125, 41, 77);
        CHECK(a.kept == b.kept);
        CHECK(std::is_sorted(a.kept.begin(), a.kept.end()));
        CHECK(std::adjacent_find(a.kept.begin(), a.kept.end()) == a.kept.end());
        CHECK(SensingPattern::make(125, 41, 78).kept != a.kept);
        CHECK_THROWS_AS(SensingPattern::make(10, 11, 1), std::invalid_argument);

        const std::vector<double> x = testutil::random_segment(1).axes[0];
        const auto filtered = sparse_filter(x, 0.328, 5);
        CHECK(filtered.values.size() == 41);
        for (std::size_t i = 0; i < 41; ++i) CHECK(filtered.values[i] == x[filtered.pattern.kept[i]]);
        CHECK(sparse_filter(x, 1.0, 5).values == x);
        CHECK_THROWS_AS(sparse_filter(x, 0.0, 5), std::invalid_argument);
    }

    TEST_CASE("measurement matrix rows are basis rows") {
        const DctBasis& b = default_basis();
        const auto pat = SensingPattern::make(125, 50, 4);
        const auto a = MeasurementMatrix::from(b, pat);
        CHECK(a.a.rows() == 50);
        for (std::size_t r = 0; r < 50; ++r)
            for (std::size_t k = 0; k < 125; ++k) CHECK(a.a(r, k) == b.psi()(pat.kept[r], k));
        // A c equals the kept samples of Psi c.
        Rng rng(4);
        std::vector<double> c(125);
        for (auto& v : c) v = rng.normal();
        const auto y = a.measure(c);
        const auto x = b.inverse(c);
        const auto sub = apply_pattern(x, pat);
        for (std::size_t r = 0; r < 50; ++r) CHECK(y[r] == doctest::Approx(sub[r]));
    }

    TEST_CASE("full sampling reconstructs exactly") {
        const DctBasis& b = default_basis();
        const auto seg = testutil::random_segment(8);
        const auto pat = SensingPattern::make(125, 125, 1);
        const auto rec = reconstruct(apply_pattern(seg.axes[0], pat), MeasurementMatrix::from(b, pat), b);
        CHECK(rec.converged);
        CHECK(nrmse(seg.axes[0], rec.signal) < 1e-9);
    }

    TEST_CASE("one-sparse signal at keep 10 percent") {
        const DctBasis& b = default_basis();
        Rng rng(21);
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<double> c(125, 0.0);
            c[1 + rng.uniform_index(124)] = rng.uniform(0.5, 3.0);
            const auto x = b.inverse(c);
            const auto pat = SensingPattern::make(125, kept_count(125, 0.1), rng.next_u64());
            const auto rec = reconstruct(apply_pattern(x, pat), MeasurementMatrix::from(b, pat), b, tight());
            CHECK(nrmse(x, rec.signal) < 1e-6);
        }
    }

    TEST_CASE("three-sparse recovery at keep 0.3") {
        const DctBasis& b = default_basis();
        Rng rng(22);
        int ok = 0;
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<double> c(125, 0.0);
            for (int placed = 0; placed < 3;) {
                const auto i = rng.uniform_index(125);
                if (c[i] != 0.0) continue;
                c[i] = (rng.bernoulli(0.5) ? 1 : -1) * rng.uniform(0.5, 2.0);
                ++placed;
            }
            const auto x = b.inverse(c);
            const auto pat = SensingPattern::make(125, kept_count(125, 0.3), rng.next_u64());
            const auto rec = reconstruct(apply_pattern(x, pat), MeasurementMatrix::from(b, pat), b, tight());
            ok += nrmse(x, rec.signal) < 1e-3;
        }
        CHECK(ok >= 95);
    }

    TEST_CASE("error falls as more samples are kept") {
        const DctBasis& b = default_basis();
        std::vector<double> mean;
        for (double keep : {0.2, 0.4, 0.6, 0.8, 1.0}) {
            double sum = 0.0;
            for (int i = 0; i < 200; ++i) {
                const auto seg = testutil::random_segment(static_cast<std::uint64_t>(1000 + i));
                const auto pat = SensingPattern::make(125, kept_count(125, keep), static_cast<std::uint64_t>(i));
                sum += nrmse(seg.axes[0],
                             reconstruct(apply_pattern(seg.axes[0], pat), MeasurementMatrix::from(b, pat), b).signal);
            }
            mean.push_back(sum / 200);
        }
        for (std::size_t i = 1; i < mean.size(); ++i) CHECK(mean[i] <= mean[i - 1]);
    }

    TEST_CASE("recovery reports non-convergence instead of throwing") {
        const DctBasis& b = default_basis();
        const auto seg = testutil::random_segment(9);
        const auto pat = SensingPattern::make(125, 10, 3);
        RecoveryConfig cfg;
        cfg.epsilon_rel = 1e-12;
        cfg.max_iter = 5;
        const auto rec = reconstruct(apply_pattern(seg.axes[0], pat), MeasurementMatrix::from(b, pat), b, cfg);
        CHECK_FALSE(rec.converged);
        CHECK(rec.iterations == 5);
        const std::vector<double> wrong(9, 0.0);
        CHECK_THROWS_AS(reconstruct(wrong, MeasurementMatrix::from(b, pat), b), std::invalid_argument);
    }

    TEST_CASE("nrmse") {
        const std::vector<double> x{0, 2}, y{1, 1}, flat{3, 3};
        CHECK(nrmse(x, x) == 0.0);
        CHECK(nrmse(x, y) == doctest::Approx(0.5));
        CHECK_THROWS_AS(nrmse(flat, x), std::invalid_argument);
    }

    TEST_CASE("wire format round trip") {
        const auto seg = testutil::random_segment(10, 4, Location::LA);
        const CompressedSegment cs = compress_segment(seg, 40, 1234, Location::LA, 3);
        CHECK(cs.q() == 75);
        CHECK(cs.cr_percent == 40);
        CHECK(cs.transmitted_samples() == 225);
        const auto bytes = encode(cs);
        CHECK(bytes.size() == kWireHeaderBytes + 12 * 75);
        CHECK(bytes[0] == 125);
        CHECK(bytes[1] == 0);
        CHECK(bytes[2] == 75);
        const CompressedSegment back = decode(bytes);
        CHECK(back.p == 125);
        CHECK(back.seed == 1234);
        CHECK(back.location == Location::LA);
        CHECK(back.cluster == 3);
        CHECK(back.y == cs.y);
        CHECK(back.pattern().kept == cs.pattern().kept);

        auto truncated = bytes;
        truncated.pop_back();
        CHECK_THROWS_AS(decode(truncated), ParseError);
        auto bad_loc = bytes;
        bad_loc[13] = 9;
        CHECK_THROWS_AS(decode(bad_loc), ParseError);
    }
}
