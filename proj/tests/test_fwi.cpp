#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "doctest.h"
#include "wildfire/fwi.hpp"
#include "wildfire/rng.hpp"

using namespace wildfire;

TEST_CASE("angstroem formula and clamp") {
    CHECK(fwi::angstroem(27.0, 20.0) == doctest::Approx(1.0));
    CHECK(fwi::angstroem(27.0, 0.0) == doctest::Approx(0.0));
    CHECK(fwi::angstroem(17.0, 60.0) == doctest::Approx(4.0));
    CHECK(fwi::angstroem(45.0, 0.0) == 0.0);  // clamped below at 0
    CHECK_THROWS_AS(fwi::angstroem(20.0, 101.0), core::ValidationError);
}

TEST_CASE("nesterov recurrence") {
    CHECK(fwi::nesterov_step(500.0, 30.0, 10.0, 5.0) == 0.0);
    CHECK(fwi::nesterov_step(0.0, 30.0, 10.0, 0.0) == doctest::Approx(600.0));
    double v = 0.0;
    for (int i = 0; i < 10; ++i) v = fwi::nesterov_step(v, 25.0, 5.0, 0.0);
    CHECK(v == doctest::Approx(5000.0));  // 10 * 25 * 20
    // rain exactly 3 mm does not reset (reset is rain > 3)
    CHECK(fwi::nesterov_step(100.0, 20.0, 10.0, 3.0) == doctest::Approx(300.0));
}

TEST_CASE("munger recurrence") {
    CHECK(fwi::munger_step(4.5, 2.0) == 0.0);
    CHECK(fwi::munger_step(0.0, 0.0) == doctest::Approx(0.5));
    double v = 0.0;
    for (int i = 0; i < 6; ++i) v = fwi::munger_step(v, 0.0);
    CHECK(v == doctest::Approx(18.0));  // 0.5 * 6^2
    CHECK(fwi::munger_step(18.0, 1.27) == 0.0);
    CHECK_THROWS_AS(fwi::munger_step(3.0, 0.0), core::ValidationError);  // not 0.5*n^2
}

TEST_CASE("kbdi recurrence") {
    // Cold day: the drought factor goes negative and is clamped, heavy rain keeps Q at 0.
    CHECK(fwi::kbdi_step(0.0, 5.0, 40.0, 800.0) == doctest::Approx(0.0).epsilon(1e-9));
    // Hand evaluation of the published equation sheet.
    CHECK(fwi::kbdi_step(400.0, 35.0, 0.0, 800.0) == doctest::Approx(409.6589082250).epsilon(1e-9));
    // Monotone in temperature on dry days.
    double prev_out = 0.0;
    for (double t = 5.0; t <= 45.0; t += 5.0) {
        const double out = fwi::kbdi_step(300.0, t, 0.0, 800.0);
        CHECK(out >= prev_out);
        prev_out = out;
    }
    CHECK_THROWS_AS(fwi::kbdi_step(-1.0, 20.0, 0.0, 800.0), core::ValidationError);
    CHECK_THROWS_AS(fwi::kbdi_step(801.0, 20.0, 0.0, 800.0), core::ValidationError);
}

TEST_CASE("canadian FWI one dry step from startup matches the hand-evaluated sheet") {
    fwi::FwiState startup;  // FFMC 85, DMC 6, DC 15
    const auto r = fwi::canadian_fwi_step(startup, 25.0, 40.0, 15.0, 0.0, 7, 12.0, 800.0);
    // Frozen from an independent transcription of the 1987 equation sheet.
    CHECK(r.state.ffmc == doctest::Approx(89.3332335452).epsilon(1e-9));
    CHECK(r.state.dmc == doctest::Approx(9.6778449600).epsilon(1e-9));
    CHECK(r.state.dc == doctest::Approx(23.2040000000).epsilon(1e-9));
    CHECK(r.outputs.isi == doctest::Approx(8.2968918899).epsilon(1e-9));
    CHECK(r.outputs.bui == doctest::Approx(9.6581244876).epsilon(1e-9));
    CHECK(r.outputs.fwi == doctest::Approx(8.5087073627).epsilon(1e-9));
    CHECK(r.outputs.dsr == doctest::Approx(1.2034483440).epsilon(1e-9));
    CHECK(r.state.nesterov == doctest::Approx(325.0));
    CHECK(r.state.munger == doctest::Approx(0.5));
    CHECK(r.state.kbdi == doctest::Approx(7.0117114363).epsilon(1e-9));
    CHECK(r.state.angstroem == doctest::Approx(2.2));
}

TEST_CASE("canadian FWI rainy step matches the hand-evaluated sheet") {
    fwi::FwiState prev;
    prev.ffmc = 88.0;
    prev.dmc = 20.0;
    prev.dc = 60.0;
    prev.nesterov = 500.0;
    prev.munger = 4.5;
    prev.kbdi = 120.0;
    const auto r = fwi::canadian_fwi_step(prev, 18.0, 85.0, 8.0, 8.0, 8, 14.0, 800.0);
    CHECK(r.state.ffmc == doctest::Approx(42.5425486593).epsilon(1e-9));
    CHECK(r.state.dmc == doctest::Approx(11.1629065569).epsilon(1e-9));
    CHECK(r.state.dc == doctest::Approx(54.1472038374).epsilon(1e-9));
    CHECK(r.outputs.isi == doctest::Approx(0.0823842183).epsilon(1e-7));
    CHECK(r.outputs.bui == doctest::Approx(14.7326568574).epsilon(1e-9));
    CHECK(r.outputs.fwi == doctest::Approx(0.0619293407).epsilon(1e-7));
    CHECK(r.state.nesterov == 0.0);
    CHECK(r.state.munger == 0.0);
    CHECK(r.state.kbdi == doctest::Approx(111.1598096724).epsilon(1e-9));
}

TEST_CASE("benign day keeps startup codes in bounds") {
    fwi::FwiState startup;
    const auto r = fwi::canadian_fwi_step(startup, 20.0, 50.0, 10.0, 0.0, 7, 10.0, 800.0);
    CHECK(r.state.ffmc >= 0.0);
    CHECK(r.state.ffmc <= 101.0);
    CHECK(r.state.dmc >= 0.0);
    CHECK(r.state.dc >= 0.0);
    CHECK(r.state.kbdi >= 0.0);
    CHECK(r.state.kbdi <= 800.0);
}

TEST_CASE("state invariants hold over random in-bound steps") {
    rng::Engine e(rng::derive_seed(42, "fwi-sweep"));
    fwi::FwiState state;
    for (int i = 0; i < 20000; ++i) {
        const double t = e.uniform(-5.0, 45.0);
        const double rh = e.uniform(0.0, 100.0);
        const double wind = e.uniform(0.0, 90.0);
        const double rain = e.bernoulli(0.3) ? e.uniform(0.0, 60.0) : 0.0;
        const int month = static_cast<int>(e.uniform_index(12)) + 1;
        const double dew = t - e.uniform(0.0, 20.0);
        const auto r = fwi::canadian_fwi_step(state, t, rh, wind, rain, month, dew, 800.0);
        state = r.state;
        REQUIRE(state.ffmc >= 0.0);
        REQUIRE(state.ffmc <= 101.0);
        REQUIRE(state.dmc >= 0.0);
        REQUIRE(state.dc >= 0.0);
        REQUIRE(state.kbdi >= 0.0);
        REQUIRE(state.kbdi <= 800.0);
        REQUIRE(state.nesterov >= 0.0);
        REQUIRE(state.munger >= 0.0);
        REQUIRE(r.outputs.isi >= 0.0);
        REQUIRE(r.outputs.bui >= 0.0);
        REQUIRE(r.outputs.fwi >= 0.0);
        REQUIRE(r.outputs.dsr >= 0.0);
        REQUIRE(std::isfinite(r.outputs.fwi));
    }
}

TEST_CASE("dsr is zero iff fwi is zero and increasing in fwi") {
    CHECK(0.0272 * std::pow(0.0, 1.77) == 0.0);
    double prev = 0.0;
    for (double f = 0.5; f < 40.0; f += 0.5) {
        const double dsr = 0.0272 * std::pow(f, 1.77);
        CHECK(dsr > prev);
        prev = dsr;
    }
}

TEST_CASE("precipitation features") {
    SUBCASE("all-zero series") {
        const std::vector<double> rain(5, 0.0);
        const auto f = fwi::precipitation_features(rain);
        for (std::size_t i = 0; i < 5; ++i) {
            CHECK(f.days_since_rain[i] == static_cast<int>(i));
            CHECK(f.precip_index_3[i] == 0.0);
            CHECK(f.rain_sum_7d[i] == 0.0);
        }
    }
    SUBCASE("window arithmetic") {
        const std::vector<double> rain = {0.0, 0.0, 10.0, 0.0, 0.0};
        const auto f = fwi::precipitation_features(rain);
        CHECK(f.precip_index_3[4] == doctest::Approx(10.0));
        CHECK(f.precip_index_3[2] == doctest::Approx(10.0));
        CHECK(f.days_since_rain[2] == 0);
        CHECK(f.days_since_rain[4] == 2);
    }
    SUBCASE("random series matches brute force") {
        rng::Engine e(rng::derive_seed(42, "precip-oracle"));
        std::vector<double> rain(30);
        for (auto& r : rain) r = e.bernoulli(0.4) ? e.uniform(0.0, 20.0) : 0.0;
        const auto f = fwi::precipitation_features(rain);
        auto brute = [&](std::size_t i, std::size_t w) {
            double s = 0.0;
            for (std::size_t j = (i + 1 >= w ? i + 1 - w : 0); j <= i; ++j) s += rain[j];
            return s;
        };
        for (std::size_t i = 0; i < rain.size(); ++i) {
            CHECK(f.precip_index_3[i] == doctest::Approx(brute(i, 3)));
            CHECK(f.precip_index_5[i] == doctest::Approx(brute(i, 5)));
            CHECK(f.precip_index_9[i] == doctest::Approx(brute(i, 9)));
            CHECK(f.rain_sum_7d[i] == doctest::Approx(brute(i, 7)));
        }
    }
}
