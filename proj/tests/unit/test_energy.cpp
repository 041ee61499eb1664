#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "adaptcs/energy.hpp"
#include "adaptcs/errors.hpp"
#include "util.hpp"

using namespace adaptcs;
namespace fs = std::filesystem;

namespace {

const fs::path kSource(ADAPTCS_SOURCE_DIR);

std::vector<EnergyReference> reference() { return load_energy_reference(kSource / "data" / "energy_reference.csv"); }

const EnergyReference& row(const std::vector<EnergyReference>& rows, const std::string& name) {
    for (const auto& r : rows)
        if (r.row == name) return r;
    throw std::runtime_error("missing reference row " + name);
}

bool within(double got, double want, double rel) { return std::abs(got - want) <= rel * std::abs(want); }

constexpr double kRowTol = 0.05;
// A straight line through the six-feature generation costs cannot reach 5%:
// the best possible worst-case relative residual over the five rows is 6.2%.
constexpr double kFg6Tol = 0.075;

}  // namespace

TEST_SUITE("energy") {
    TEST_CASE("shipped config equals a fresh calibration") {
        const EnergyModel shipped = load_energy_config(kSource / "config" / "energy.cfg");
        const EnergyModel fresh = calibrate_energy(reference());
        CHECK(shipped.sigma == doctest::Approx(fresh.sigma).epsilon(1e-9));
        CHECK(shipped.tau_wake == doctest::Approx(fresh.tau_wake).epsilon(1e-9));
        CHECK(shipped.tau_sample == doctest::Approx(fresh.tau_sample).epsilon(1e-9));
        CHECK(shipped.tau_sample_sq == doctest::Approx(fresh.tau_sample_sq).epsilon(1e-9));
        CHECK(shipped.fg30_sample == doctest::Approx(fresh.fg30_sample).epsilon(1e-9));
        CHECK(shipped.fg6_fixed == doctest::Approx(fresh.fg6_fixed).epsilon(1e-9));
        CHECK(shipped.mm_sample == doctest::Approx(fresh.mm_sample).epsilon(1e-9));
        CHECK(shipped.nl30 == fresh.nl30);
        CHECK(shipped.nl6 == fresh.nl6);
    }

    TEST_CASE("calibrated model reproduces the reference rows") {
        const auto rows = reference();
        const EnergyModel m = calibrate_energy(rows);
        for (double v : {m.sigma, m.tau_wake, m.tau_sample, m.tau_sample_sq, m.sf_sample, m.fg30_fixed, m.fg30_sample,
                         m.fg6_fixed, m.fg6_sample, m.nl30, m.nl6, m.st, m.mm_fixed, m.mm_sample})
            CHECK(v >= 0.0);

        const auto base = energy_at(Mode::baseline, 375, m);
        CHECK(base.pi == 0.0);
        CHECK(within(base.tau, 56.9, kRowTol));
        CHECK(within(base.total, 70.3, kRowTol));

        for (const std::string name : {"T", "RA", "LA", "RL", "LL"}) {
            CAPTURE(name);
            const auto& r = row(rows, name);
            const auto e = energy_at(Mode::adaptive, r.samples, m);
            CHECK(within(e.tau, *r.tau, kRowTol));
            CHECK(within(e.total, *r.total, kRowTol));
            CHECK(within(e.pi, *r.pi30, kRowTol));
            CHECK(within(savings_percent(base.total, e.total), *r.savings, kRowTol));
            CHECK(within(m.fg(r.samples, 30), *r.fg30, kRowTol));
            CHECK(within(m.fg(r.samples, 6), *r.fg6, kFg6Tol));
            CHECK(within(energy_at(Mode::adaptive, r.samples, m, 6).pi, *r.pi6, kRowTol));
            // Reference values carry one decimal: allow half a unit of rounding on top.
            CHECK(std::abs(m.mm(r.samples) - *r.mm) <= 0.05 + kRowTol * *r.mm);
            CHECK(std::abs(m.sf(r.samples) * 1000.0 - *r.sf_uj) <= kRowTol * *r.sf_uj);
        }

        const auto& naive = row(rows, "Naive");
        const auto n = energy_at(Mode::naive, naive.samples, m);
        CHECK(within(n.total, *naive.total, kRowTol));
        CHECK(within(n.pi, *naive.pi, kRowTol));
        CHECK(n.fg == 0.0);
        CHECK(n.nl == 0.0);
    }

    TEST_CASE("reduced features trade generation for localization") {
        const EnergyModel m = calibrate_energy(reference());
        for (double q : {87.0, 132.0, 216.0}) {
            CHECK(m.fg(q, 6) < m.fg(q, 30));
            CHECK(m.nl(6) >= m.nl(30));
        }
        CHECK_THROWS(m.fg(100, 12));
    }

    TEST_CASE("totals from counts") {
        const EnergyModel m = load_energy_config(kSource / "config" / "energy.cfg");
        EnergyCounts c;
        for (int i = 0; i < 10; ++i) c.add_segment(132, 132, 5);
        const auto e = energy_total(Mode::adaptive, c, m);
        const auto at = energy_at(Mode::adaptive, 132, m);
        CHECK(e.total == doctest::Approx(at.total));
        CHECK(e.total == doctest::Approx(e.sigma + e.pi + e.tau));
        CHECK(e.pi == doctest::Approx(e.sf + e.fg + e.nl + e.st + e.mm));

        EnergyCounts silent;
        silent.add_segment(0, 0, 0);
        CHECK(energy_total(Mode::baseline, silent, m).tau == 0.0);

        EnergyCounts bad;
        bad.segments = 1;
        bad.tx_samples = -1;
        CHECK_THROWS_AS(energy_total(Mode::adaptive, bad, m), std::invalid_argument);

        // More samples always cost more for a fixed processing term.
        double last = 0.0;
        for (int q = 0; q <= 375; q += 15) {
            const double t = energy_at(Mode::naive, q, m).total;
            CHECK(t > last);
            last = t;
        }
    }

    TEST_CASE("savings formula") {
        CHECK(savings_percent(70.3, 27.7) == doctest::Approx(60.597).epsilon(1e-4));
        CHECK(savings_percent(70.3, 70.3) == 0.0);
    }

    TEST_CASE("config parsing") {
        const EnergyModel m = calibrate_energy(reference());
        const auto text = format_energy_config(m, "test");
        const EnergyModel back = parse_energy_config(text, "memory");
        CHECK(back.tau_sample == doctest::Approx(m.tau_sample).epsilon(1e-9));
        CHECK(back.fg6_sample == doctest::Approx(m.fg6_sample).epsilon(1e-9));
        CHECK_THROWS_AS(parse_energy_config(text + "bogus = 1\n", "memory"), ParseError);
        CHECK_THROWS_AS(parse_energy_config(text + "sigma = 2\n", "memory"), ParseError);
        CHECK_THROWS_AS(parse_energy_config("sigma = 1\n", "memory"), ParseError);
        std::string negative = text;
        negative.replace(negative.find("sigma = "), 8, "sigma = -");
        CHECK_THROWS_AS(parse_energy_config(negative, "memory"), ParseError);

        testutil::TempDir dir("energy-cfg");
        save_energy_config(dir.path / "e.cfg", m, "round trip");
        CHECK(load_energy_config(dir.path / "e.cfg").mm_fixed == doctest::Approx(m.mm_fixed).epsilon(1e-9));
        CHECK(parse_mode("naive") == Mode::naive);
        CHECK_THROWS(parse_mode("fast"));
    }

    TEST_CASE("nnls") {
        // Unconstrained solution (1, 2) is feasible.
        const auto x = nnls({{1, 0}, {0, 1}, {1, 1}}, {1, 2, 3});
        CHECK(x[0] == doctest::Approx(1));
        CHECK(x[1] == doctest::Approx(2));
        // Unconstrained solution has a negative entry; it is clamped to zero.
        const auto y = nnls({{1, 0}, {0, 1}}, {-1, 2});
        CHECK(y[0] == 0.0);
        CHECK(y[1] == doctest::Approx(2));
    }
}
