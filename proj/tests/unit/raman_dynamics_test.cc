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

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "doctest.h"
#include "trapsim/fitkit.h"
#include "trapsim/raman_dynamics.h"

using namespace trapsim;
using namespace trapsim::raman;

namespace {

// exp(iη(a + a†)) in a large truncated Fock space.
Eigen::MatrixXcd displacement(double eta, int dim) {
    Eigen::MatrixXcd x = Eigen::MatrixXcd::Zero(dim, dim);
    for (int n = 0; n + 1 < dim; n++) {
        x(n, n + 1) = x(n + 1, n) = std::sqrt(static_cast<double>(n + 1));
    }
    Eigen::MatrixXcd arg = std::complex<double>(0, eta) * x;
    return arg.exp();
}

std::vector<ModeSpec> radial_modes() {
    auto yb = IonSpecies::yb171();
    auto geom = RamanGeometry::counter_355nm();
    return {ModeSpec(1.84e6, ModeId::r1, lamb_dicke(yb, geom, 1.84e6, std::numbers::pi / 4)),
            ModeSpec(2.11e6, ModeId::r2, lamb_dicke(yb, geom, 2.11e6, std::numbers::pi / 4))};
}

std::vector<double> grid(int points, double stop) {
    std::vector<double> t;
    for (int i = 0; i < points; i++) t.push_back(stop * i / (points - 1));
    return t;
}

}  // namespace

TEST_SUITE("raman_dynamics") {
    TEST_CASE("matrix elements against the matrix exponential") {
        for (double eta : {0.05, 0.0937, 0.3}) {
            auto d = displacement(eta, 140);
            for (int n = 0; n < 40; n++) {
                for (int s = -2; s <= 2; s++) {
                    if (n + s < 0) continue;
                    CHECK(matrix_element(n, s, eta) == doctest::Approx(std::abs(d(n + s, n))).epsilon(1e-10).scale(1.0));
                }
            }
        }
    }

    TEST_CASE("matrix element Hermiticity") {
        std::mt19937_64 rng(41);
        std::uniform_real_distribution<double> eta(0.0, 0.5);
        for (int i = 0; i < 300; i++) {
            int n = static_cast<int>(rng() % 200);
            double e = eta(rng);
            CHECK(std::abs(matrix_element(n, 1, e) - matrix_element(n + 1, -1, e)) <= 1e-12);
        }
    }

    TEST_CASE("Debye-Waller ground state and Laguerre form") {
        double eta = 0.0937;
        CHECK(matrix_element(0, 0, eta) == doctest::Approx(std::exp(-eta * eta / 2)).epsilon(1e-15));
        CHECK(matrix_element(5, 0, eta) ==
              doctest::Approx(std::exp(-eta * eta / 2) * fitkit::laguerre(5, 0, eta * eta)).epsilon(1e-14));
        CHECK(matrix_element(3, 0, 0.0) == 1.0);
        CHECK(matrix_element(3, 1, 0.0) == 0.0);
        CHECK_THROWS_AS(matrix_element(-1, 0, eta), DomainError);
        CouplingMatrixElements cache(eta, 50);
        CHECK(cache(10, -1) == matrix_element(10, -1, eta));
        CHECK(cache(0, -1) == 0.0);
    }

    TEST_CASE("two-level formula") {
        CHECK(rabi_probability(1e5, 0.0, 5e-6) == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(rabi_probability(1e5, 1e5, 0.5 / std::sqrt(2e10)) == doctest::Approx(0.5).epsilon(1e-14));
        CHECK(rabi_probability(0.0, 0.0, 1.0) == 0.0);
    }

    TEST_CASE("carrier flops stay within [0, 1] and ordered in nbar at the pi time") {
        auto modes = radial_modes();
        auto counter = RamanGeometry::counter_355nm();
        DriveParams drive(545e3, 0.0);
        auto times = grid(60, 1e-5);
        double last = 2.0;
        for (int i = 0; i <= 20; i++) {
            double nbar = i;
            std::vector<PhononDistribution> d{thermal_pmf(nbar), thermal_pmf(nbar)};
            auto curve = rabi_curve(times, drive, counter, modes, d);
            for (double p : curve) {
                CHECK(p >= 0);
                CHECK(p <= 1);
            }
            std::vector<double> pi{drive.pi_time()};
            double p_pi = rabi_curve(pi, drive, counter, modes, d)[0];
            CHECK(p_pi <= last + 1e-12);
            last = p_pi;
        }
    }

    TEST_CASE("co-propagating flops ignore the phonon state") {
        auto modes = radial_modes();
        auto co = RamanGeometry::co_355nm();
        DriveParams drive(545e3, 0.0);
        auto times = grid(80, 1e-5);
        std::mt19937_64 rng(42);
        std::uniform_real_distribution<double> nb(0.0, 20.0);
        std::vector<PhononDistribution> ref{thermal_pmf(0.0), thermal_pmf(0.0)};
        auto base = rabi_curve(times, drive, co, modes, ref);
        for (int i = 0; i < 20; i++) {
            std::vector<PhononDistribution> d{thermal_pmf(nb(rng)), thermal_pmf(nb(rng))};
            CHECK(rabi_curve(times, drive, co, modes, d) == base);
        }
    }

    TEST_CASE("uniform and irregular time grids agree") {
        auto modes = radial_modes();
        std::vector<double> etas{modes[0].lamb_dicke, modes[1].lamb_dicke};
        std::vector<PhononDistribution> d{thermal_pmf(3.0), thermal_pmf(1.0)};
        DriveParams drive(545e3, 0.0, 20e3);
        auto even = grid(101, 1e-5);
        auto fast = carrier_curve(even, drive, etas, d);
        for (std::size_t i = 0; i < even.size(); i++) {
            std::vector<double> one{even[i], even[i] + 1e-7, even[i] + 3e-7};  // irregular path
            CHECK(fast[i] == doctest::Approx(carrier_curve(one, drive, etas, d)[0]).epsilon(1e-10).scale(1.0));
        }
    }

    TEST_CASE("thermal fit recovers a cooled single mode") {
        auto modes = radial_modes();
        std::vector<ModeSpec> one{modes[0]};
        auto counter = RamanGeometry::counter_355nm();
        DriveParams drive(545e3, 0.0);
        auto times = grid(101, 1e-5);
        std::vector<PhononDistribution> d{thermal_pmf(4.0)};
        RabiMeasurement m{times, rabi_curve(times, drive, counter, one, d), {}};
        std::vector<double> guess{1.0};
        auto fit = fit_nbar(m, DriveParams(500e3, 0.0), counter, one, guess);
        CHECK(fit.nbar[0] == doctest::Approx(4.0).epsilon(1e-5));
        CHECK(fit.rabi == doctest::Approx(545e3).epsilon(1e-7));
    }

    TEST_CASE("two-mode fit warns about weak identifiability") {
        auto modes = radial_modes();
        auto counter = RamanGeometry::counter_355nm();
        auto times = grid(101, 1e-5);
        std::vector<PhononDistribution> d{thermal_pmf(4.0), thermal_pmf(0.1)};
        RabiMeasurement m{times, rabi_curve(times, DriveParams(545e3, 0.0), counter, modes, d), {}};
        auto fit = fit_nbar(m, DriveParams(545e3, 0.0), counter, modes);
        CHECK(fit.nbar_sum == doctest::Approx(4.1).epsilon(0.01));
        CHECK(fit.nbar_sum_error < 1.0);
        CHECK_FALSE(fit.warnings.empty());
        CHECK_THROWS_AS(fit_nbar(m, DriveParams(545e3, 0.0), RamanGeometry::co_355nm(), modes), fitkit::FitError);
    }

    TEST_CASE("contrast fit of a pure sinusoid") {
        auto times = grid(101, 1e-5);
        RabiMeasurement m{times, {}, {}};
        for (double t : times) m.p1.push_back(0.93 * std::pow(std::sin(std::numbers::pi * 545e3 * t), 2));
        auto fit = fit_carrier_contrast(m, 520e3);
        CHECK(fit.contrast == doctest::Approx(0.93).epsilon(1e-9));
        CHECK(fit.rabi == doctest::Approx(545e3).epsilon(1e-9));
    }

    TEST_CASE("sideband spectrum") {
        auto modes = radial_modes();
        std::vector<PhononDistribution> ground{thermal_pmf(0.0), thermal_pmf(0.0)};
        DriveParams probe(545e3, 0.5 / 545e3 / modes[0].lamb_dicke);
        CHECK(sideband_probability(Transition::red_sideband, 0, probe, modes, ground) == 0.0);
        CHECK(sideband_probability(Transition::blue_sideband, 0, probe, modes, ground) > 0.5);
        std::vector<double> det{-1.84e6, 0.0, 1.84e6, 2.11e6};
        auto spec = sideband_spectrum(det, DriveParams(545e3, 1e-6), modes, ground);
        CHECK(spec[0] == 0.0);
        for (double p : spec) {
            CHECK(p >= 0);
            CHECK(p <= 1);
        }
        CHECK_THROWS_AS(sideband_probability(Transition::carrier, 2, probe, modes, ground), DomainError);
    }
}
