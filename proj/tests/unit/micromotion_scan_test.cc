// Copyright 2026 The trapsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "trapsim/fitkit.h"
#include "trapsim/micromotion_scan.h"
#include "trapsim/trap_field.h"

using namespace trapsim;
using namespace trapsim::micromotion;

namespace {

const MicromotionSetup &setup() {
    static const MicromotionSetup s = MicromotionSetup::standard();
    return s;
}

DriveParams pi_pulse() {
    return DriveParams(545e3, setup().pi_time(545e3));
}

// Field axis (gain 1): grid values are ΔE in V/m.
std::vector<double> field_grid(double lo, double hi, double step) {
    std::vector<double> g;
    for (double v = lo; v <= hi + 1e-9; v += step) g.push_back(v);
    return g;
}

}  // namespace

TEST_SUITE("micromotion_scan") {
    TEST_CASE("modulation index from the displacement") {
        auto yb = IonSpecies::yb171();
        ModeSpec mode(2.11e6, ModeId::r2, 0.09);
        auto geom = RamanGeometry::counter_355nm();
        double q = 0.2846;
        double expected = geom.delta_k_normal() * 0.5 * q * 3.211468584e-7;
        CHECK(modulation_index(100.0, yb, mode, geom, q) == doctest::Approx(expected).epsilon(1e-9));
        CHECK(modulation_index(-100.0, yb, mode, geom, q) == doctest::Approx(expected).epsilon(1e-9));
        CHECK(modulation_index(100.0, yb, mode, RamanGeometry::co_355nm(), q) == 0.0);
        CHECK_THROWS_AS(modulation_index(1.0, yb, mode, geom, -0.1), DomainError);
    }

    TEST_CASE("carrier vanishes at the first Bessel zero") {
        double p = carrier_p1(2.404825557695773, pi_pulse(), setup().etas, setup().phonons);
        CHECK(p < 1e-28);
        CHECK(carrier_p1(0.0, pi_pulse(), setup().etas, setup().phonons) == doctest::Approx(1.0).epsilon(1e-12));
    }

    TEST_CASE("noiseless pattern peaks exactly at the cancelling field") {
        std::mt19937_64 rng(31);
        std::uniform_real_distribution<double> field(-1500.0, 1500.0);
        for (int i = 0; i < 20; i++) {
            double e_y = std::round(field(rng) * 100) / 100;  // on the 0.01 V/m grid
            auto grid = field_grid(-e_y - 30, -e_y + 30, 0.01);
            std::vector<double> when{0.0};
            auto rec = simulate_scan(StrayFieldTrajectory::constant(e_y), when, grid, 1.0, pi_pulse(), setup(),
                                     std::nullopt, 1)[0];
            auto best = std::max_element(rec.points.begin(), rec.points.end(),
                                         [](const ScanPoint &a, const ScanPoint &b) { return a.p1 < b.p1; });
            CHECK(std::abs(best->x + e_y) <= 0.01 + 1e-9);
        }
    }

    TEST_CASE("pattern is symmetric about the cancelling field") {
        for (double e_y : {-800.0, -35.5, 0.0, 123.4, 1900.0}) {
            for (double d : {1.0, 17.0, 60.0, 140.0, 400.0}) {
                double up = carrier_p1(setup().modulation_per_field() * std::abs(d), pi_pulse(), setup().etas,
                                       setup().phonons);
                std::vector<double> grid{-e_y + d, -e_y - d}, when{0.0};
                auto rec = simulate_scan(StrayFieldTrajectory::constant(e_y), when, grid, 1.0, pi_pulse(), setup(),
                                         std::nullopt, 1)[0];
                CHECK(rec.points[0].p1 == doctest::Approx(rec.points[1].p1).epsilon(1e-12));
                CHECK(rec.points[0].p1 == doctest::Approx(up).epsilon(1e-12));
            }
        }
    }

    TEST_CASE("expected-value fit recovers the offset") {
        std::mt19937_64 rng(32);
        std::uniform_real_distribution<double> field(-1000.0, 1000.0);
        for (int i = 0; i < 20; i++) {
            double e_y = field(rng);
            auto grid = field_grid(-1300, 1300, 5.0);
            std::vector<double> when{0.0};
            auto rec = simulate_scan(StrayFieldTrajectory::constant(e_y), when, grid, 1.0, pi_pulse(), setup(),
                                     std::nullopt, 1)[0];
            CHECK(rec.expected_value());
            auto fit = fit_offset(rec);
            CHECK(std::abs(fit.delta_e_fit + e_y) <= 1e-3 * std::max(std::abs(e_y), 1.0));
            CHECK(fit.uncertainty >= 0);
        }
    }

    TEST_CASE("Debye-Waller suppression never raises the on-null signal") {
        double last = 2.0;
        for (int i = 0; i <= 40; i++) {
            double nbar = 0.5 * i;
            std::vector<PhononDistribution> hot{thermal_pmf(nbar), thermal_pmf(nbar)};
            double p = carrier_p1(0.0, pi_pulse(), setup().etas, hot);
            CHECK(p <= last + 1e-12);
            last = p;
        }
    }

    TEST_CASE("shot-noise scans are seed-reproducible and bounded") {
        auto grid = field_grid(-200, 200, 4);
        std::vector<double> when{0.0, 1.0, 2.0};
        auto traj = StrayFieldTrajectory::constant(40.0);
        auto a = simulate_scan(traj, when, grid, 1.0, pi_pulse(), setup(), 200, 77);
        auto b = simulate_scan(traj, when, grid, 1.0, pi_pulse(), setup(), 200, 77);
        auto c = simulate_scan(traj, when, grid, 1.0, pi_pulse(), setup(), 200, 78);
        bool differs = false;
        for (std::size_t r = 0; r < a.size(); r++) {
            for (std::size_t i = 0; i < grid.size(); i++) {
                CHECK(a[r].points[i].p1 == b[r].points[i].p1);
                CHECK(a[r].points[i].p1 >= 0);
                CHECK(a[r].points[i].p1 <= 1);
                differs = differs || a[r].points[i].p1 != c[r].points[i].p1;
            }
        }
        CHECK(differs);
        CHECK_THROWS_AS(simulate_scan(traj, when, grid, 1.0, pi_pulse(), setup(), 0, 1), DomainError);
    }

    TEST_CASE("flat scans are rejected") {
        ScanRecord rec{0.0, ScanAxis::field, 1.0, {}};
        for (int i = 0; i < 20; i++) rec.points.push_back({1.0 * i, 0.3, 500});
        CHECK_THROWS_AS(fit_offset(rec), fitkit::FitError);
        std::vector<ScanRecord> records{rec};
        auto series = monitor_series(records);
        REQUIRE(series.size() == 1);
        CHECK(series[0].error.has_value());
    }

    TEST_CASE("trajectories") {
        CHECK(charging_field(1.0, 20, 200, 150, 10, 6) == 20.0);
        CHECK(charging_field(10.0, 20, 200, 150, 10, 6) == 220.0);
        CHECK(charging_field(16.0, 20, 200, 150, 10, 6) == doctest::Approx(220 + 150 * (1 - std::exp(-1.0))));
        auto charging = StrayFieldTrajectory::charging(20, 200, 150, 10, 6, 0, 40);
        for (double t : {0.5, 9.5, 10.0, 10.5, 25.0, 39.5}) {
            CHECK(charging.at(t) == doctest::Approx(charging_field(t, 20, 200, 150, 10, 6)).epsilon(1e-6));
        }
        StrayFieldTrajectory steps({{0, 1}, {1, 3}}, Interpolation::step);
        StrayFieldTrajectory ramp({{0, 1}, {1, 3}}, Interpolation::linear);
        CHECK(steps.at(0.5) == 1.0);
        CHECK(ramp.at(0.5) == 2.0);
        CHECK(ramp.at(5.0) == 3.0);
        CHECK_THROWS_AS(StrayFieldTrajectory({{1, 1}, {1, 3}}, Interpolation::step), DomainError);
        CHECK_THROWS_AS(StrayFieldTrajectory({}, Interpolation::step), DomainError);
    }

    TEST_CASE("charging fit on an exact series") {
        std::vector<MonitorSample> series;
        for (int i = 0; i < 40; i++) {
            double t = 0.5 + i;
            series.push_back({t, charging_field(t, 20, 200, 150, 10, 6), 0.5, 1.0, std::nullopt});
        }
        auto fit = fit_charging(series, 10.0, 4.0);
        CHECK(fit.e0 == doctest::Approx(20).epsilon(1e-6));
        CHECK(fit.step == doctest::Approx(200).epsilon(1e-6));
        CHECK(fit.e_inf == doctest::Approx(150).epsilon(1e-6));
        CHECK(fit.tau == doctest::Approx(6).epsilon(1e-6));
    }
}
