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

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "trapsim/ms_gate.h"

using namespace trapsim;
using namespace trapsim::ms;
using cd = std::complex<double>;

namespace {

// Pure-state Schrödinger evolution of |00>|n> under
// H = g (σx⊗1 + 1⊗σx)(a e^{-iδt} + a† e^{iδt}), fixed-step RK4.
// Returns populations of |00>, |01>, |10>, |11> at each requested time.
std::vector<std::array<double, 4>> brute_force(double g, double delta, int n0, int dim,
                                               const std::vector<double> &times, int steps_per_unit) {
    using State = std::vector<cd>;  // index 4*n + spin, spin = 2*b1 + b2
    auto rhs = [&](double t, const State &psi) {
        State out(psi.size());
        cd phase = std::exp(cd(0, -delta * t));
        for (int n = 0; n < dim; n++) {
            for (int s = 0; s < 4; s++) {
                // S_x flips either qubit.
                auto sx = [&](int m) { return psi[4 * m + (s ^ 2)] + psi[4 * m + (s ^ 1)]; };
                cd v = 0;
                if (n + 1 < dim) v += phase * std::sqrt(n + 1.0) * sx(n + 1);        // a
                if (n > 0) v += std::conj(phase) * std::sqrt(double(n)) * sx(n - 1);  // a†
                out[4 * n + s] = cd(0, -g) * v;
            }
        }
        return out;
    };
    State psi(4 * dim, 0.0);
    psi[4 * n0] = 1.0;
    std::vector<std::array<double, 4>> result;
    double t = 0;
    for (double target : times) {
        int steps = std::max(1, static_cast<int>(std::ceil((target - t) * steps_per_unit)));
        double h = (target - t) / steps;
        for (int k = 0; k < steps && h > 0; k++) {
            auto k1 = rhs(t, psi);
            State tmp(psi.size());
            for (std::size_t i = 0; i < psi.size(); i++) tmp[i] = psi[i] + 0.5 * h * k1[i];
            auto k2 = rhs(t + h / 2, tmp);
            for (std::size_t i = 0; i < psi.size(); i++) tmp[i] = psi[i] + 0.5 * h * k2[i];
            auto k3 = rhs(t + h / 2, tmp);
            for (std::size_t i = 0; i < psi.size(); i++) tmp[i] = psi[i] + h * k3[i];
            auto k4 = rhs(t + h, tmp);
            for (std::size_t i = 0; i < psi.size(); i++) psi[i] += h / 6 * (k1[i] + 2. * k2[i] + 2. * k3[i] + k4[i]);
            t += h;
        }
        std::array<double, 4> pops{};
        for (int n = 0; n < dim; n++)
            for (int s = 0; s < 4; s++) pops[s] += std::norm(psi[4 * n + s]);
        result.push_back(pops);
    }
    return result;
}

// Thermal average of Fock-state runs.
std::vector<std::array<double, 4>> brute_force_thermal(const MSGateParams &p, const std::vector<double> &times) {
    double delta = 2 * std::numbers::pi * p.detuning;
    double g = p.coupling();
    std::vector<std::array<double, 4>> acc(times.size(), std::array<double, 4>{});
    double r = p.initial_nbar / (p.initial_nbar + 1);
    for (int n = 0; n < 12; n++) {
        double w = std::pow(r, n) / (p.initial_nbar + 1);
        if (w < 1e-10) break;
        auto run = brute_force(g, delta, n, 40, times, 2e8);
        for (std::size_t i = 0; i < times.size(); i++)
            for (int k = 0; k < 4; k++) acc[i][k] += w * run[i][k];
    }
    return acc;
}

std::vector<double> span(double stop, int points) {
    std::vector<double> t;
    for (int i = 0; i < points; i++) t.push_back(stop * i / (points - 1));
    return t;
}

}  // namespace

TEST_SUITE("ms_gate") {
    TEST_CASE("tilt-mode coupling") {
        auto mode = default_tilt_mode();
        CHECK(mode.frequency == 2.11e6);
        CHECK(mode.lamb_dicke == doctest::Approx(0.09369521231 / std::numbers::sqrt2).epsilon(1e-9));
        MSGateParams p{49.9e3, -9.4e3};
        CHECK(p.coupling() == doctest::Approx(0.5 * mode.lamb_dicke * 2 * std::numbers::pi * 49.9e3).epsilon(1e-15));
    }

    TEST_CASE("propagation against a state-vector oracle") {
        for (double nbar : {0.0, 0.2}) {
            for (double det : {-9.4e3, 15e3}) {
                MSGateParams p{49.9e3, det};
                p.initial_nbar = nbar;
                auto times = span(250e-6, 11);
                auto curve = propagate(p, times);
                auto ref = brute_force_thermal(p, times);
                for (std::size_t i = 0; i < times.size(); i++) {
                    auto got = curve.at(i);
                    for (int k = 0; k < 4; k++) CHECK(std::abs(got[k] - ref[i][k]) < 1e-6);
                }
            }
        }
    }

    TEST_CASE("closed form against the state-vector oracle") {
        MSGateParams p{30e3, -12e3};
        auto times = span(200e-6, 9);
        auto curve = ms_closed_form(p, times);
        auto ref = brute_force_thermal(p, times);
        for (std::size_t i = 0; i < times.size(); i++) {
            auto got = curve.at(i);
            for (int k = 0; k < 4; k++) CHECK(std::abs(got[k] - ref[i][k]) < 1e-8);
        }
    }

    TEST_CASE("Bell point") {
        MSGateParams p{49.9e3, 0.0};
        p.detuning = 2 * p.mode.lamb_dicke * p.rabi;
        std::vector<double> t{0.0, 1.0 / p.detuning};
        for (const auto &curve : {propagate(p, t), ms_closed_form(p, t)}) {
            CHECK(curve.p00[0] == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(std::abs(curve.p00[1] - 0.5) < 1e-6);
            CHECK(std::abs(curve.p11[1] - 0.5) < 1e-6);
        }
    }

    TEST_CASE("heating degrades parity at the Bell point") {
        MSGateParams cold{49.9e3, 0.0};
        cold.detuning = 2 * cold.mode.lamb_dicke * cold.rabi;
        auto hot = cold;
        hot.heating_rate = 2000.0;
        std::vector<double> t{1.0 / cold.detuning};
        auto a = propagate(cold, t), b = propagate(hot, t);
        CHECK(b.p00[0] + b.p11[0] < a.p00[0] + a.p11[0]);
    }

    TEST_CASE("symmetry, trace and positivity with heating") {
        MSGateParams p{49.9e3, -9.4e3};
        p.initial_nbar = 0.2;
        p.heating_rate = 62;
        auto curve = propagate(p, span(320e-6, 81));
        for (std::size_t i = 0; i < curve.size(); i++) {
            CHECK(std::abs(curve.p01[i] - curve.p10[i]) < 1e-12);
            auto pops = curve.at(i);
            double sum = 0;
            for (double v : pops) {
                CHECK(v >= 0);
                sum += v;
            }
            CHECK(std::abs(sum - 1) <= 1e-8);
        }
        CHECK(curve.warnings.empty());
    }

    TEST_CASE("detuning sign does not change populations") {
        MSGateParams a{40e3, -11e3}, b{40e3, 11e3};
        a.initial_nbar = b.initial_nbar = 0.3;
        auto times = span(200e-6, 21);
        auto ca = propagate(a, times), cb = propagate(b, times);
        for (std::size_t i = 0; i < times.size(); i++) CHECK(std::abs(ca.p00[i] - cb.p00[i]) < 1e-8);
    }

    TEST_CASE("readout confusion") {
        PopulationCurve ideal;
        ideal.times = {0.0};
        ideal.p00 = {1.0};
        ideal.p01 = {0.0};
        ideal.p10 = {0.0};
        ideal.p11 = {0.0};
        auto c = apply_confusion(ideal, ConfusionMatrix(0.06, 0.04));
        CHECK(c.p00[0] == doctest::Approx(0.8836).epsilon(1e-14));
        CHECK(c.p01[0] == doctest::Approx(0.94 * 0.06).epsilon(1e-14));
        CHECK(c.p11[0] == doctest::Approx(0.0036).epsilon(1e-14));
        ideal.p00 = {0.0};
        ideal.p11 = {1.0};
        c = apply_confusion(ideal, ConfusionMatrix(0.06, 0.04));
        CHECK(c.p00[0] == doctest::Approx(0.0016).epsilon(1e-14));
        CHECK_THROWS_AS(ConfusionMatrix(-0.1, 0.0), DomainError);
        CHECK_THROWS_AS(ConfusionMatrix(0.0, 1.1), DomainError);
    }

    TEST_CASE("validation and truncation") {
        MSGateParams p{49.9e3, -9.4e3};
        p.initial_nbar = 2.0;
        p.n_max = 30;
        CHECK_THROWS_AS(p.validate(), DomainError);
        CHECK_THROWS_AS(propagate(p, span(1e-4, 3)), DomainError);
        MSGateParams far{400e3, 1e3};
        far.n_max = 25;
        CHECK_THROWS_AS(propagate(far, span(5e-4, 5)), TruncationError);
        MSGateParams hot{49.9e3, -9.4e3};
        hot.heating_rate = 10;
        CHECK_THROWS_AS(ms_closed_form(hot, span(1e-4, 3)), DomainError);
        std::vector<double> backwards{2e-6, 1e-6};
        CHECK_THROWS_AS(propagate(MSGateParams{49.9e3, -9.4e3}, backwards), DomainError);
        CHECK(MSGateParams{49.9e3, -9.4e3}.effective_n_max(3e-4) >= 20);
    }

    TEST_CASE("multinomial sampling") {
        MSGateParams p{49.9e3, -9.4e3};
        auto curve = apply_confusion(propagate(p, span(3e-4, 21)), ConfusionMatrix(0.04, 0.06));
        auto a = sample_curve(curve, 300, 5), b = sample_curve(curve, 300, 5);
        CHECK(a.populations == b.populations);
        CHECK(a.shots == 300);
        for (const auto &row : a.populations) {
            CHECK(row[0] + row[1] + row[2] + row[3] == doctest::Approx(1.0).epsilon(1e-12));
        }
    }

    TEST_CASE("noiseless fit recovers gate parameters") {
        MSGateParams truth{49.9e3, -9.4e3};
        truth.initial_nbar = 0.2;
        auto times = span(320e-6, 33);
        auto curve = apply_confusion(propagate(truth, times), ConfusionMatrix(0.04, 0.06));
        MSMeasurement data{times, {}, 0};
        for (std::size_t i = 0; i < curve.size(); i++) data.populations.push_back(curve.at(i));
        MSGateParams guess{47e3, -9.8e3};
        guess.initial_nbar = 0.3;
        auto fit = fit_ms(data, guess, ConfusionMatrix(0.02, 0.02));
        CHECK(fit.params.rabi == doctest::Approx(49.9e3).epsilon(1e-4));
        CHECK(fit.params.detuning == doctest::Approx(-9.4e3).epsilon(1e-4));
        CHECK(fit.confusion.p10 == doctest::Approx(0.04).epsilon(1e-3));
        CHECK(fit.confusion.p01 == doctest::Approx(0.06).epsilon(1e-3));
        CHECK(fit.params.detuning < 0);
        CHECK(fit.names.size() == 5);
    }
}
