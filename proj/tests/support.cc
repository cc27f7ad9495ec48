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

#include "support.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <random>

#include "trapsim/cool_heat.h"
#include "trapsim/ms_gate.h"

namespace trapsim::testing {

std::string fmt(double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", value);
    return buf;
}

PhononDistribution random_distribution(fitkit::Rng &rng, std::size_t n_max) {
    std::exponential_distribution<double> draw(1.0);
    std::vector<double> p(n_max + 1);
    for (auto &v : p) {
        v = draw(rng);
    }
    double total = std::accumulate(p.begin(), p.end(), 0.0);
    for (auto &v : p) {
        v /= total;
    }
    return PhononDistribution(std::move(p));
}

double laplace_residual(std::span<const trap::ElectrodePatch> patches, const trap::Vec3 &x) {
    const double h = 2e-7;
    double phi = trap::potential(patches, x);
    double lap = 0, scale = 0;
    for (int k = 0; k < 3; k++) {
        trap::Vec3 d = trap::Vec3::Zero();
        d[k] = h;
        double second = (trap::potential(patches, x + d) + trap::potential(patches, x - d) - 2 * phi) / (h * h);
        lap += second;
        scale += std::abs(second);
    }
    return std::abs(lap) / scale;
}

double field_vs_gradient(std::span<const trap::ElectrodePatch> patches, const trap::Vec3 &x) {
    auto central = [&](int k, double h) {
        trap::Vec3 d = trap::Vec3::Zero();
        d[k] = h;
        return (trap::potential(patches, x + d) - trap::potential(patches, x - d)) / (2 * h);
    };
    trap::Vec3 e = trap::field(patches, x);
    double worst = 0;
    for (int k = 0; k < 3; k++) {
        double h = 2e-7;
        double grad = (4 * central(k, h / 2) - central(k, h)) / 3;
        worst = std::max(worst, std::abs(e[k] + grad));
    }
    return worst / e.norm();
}

ConservationReport run_conservation_suite(std::uint64_t seed) {
    ConservationReport report;
    fitkit::Rng rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto uniform = [&](double a, double b) { return a + (b - a) * unit(rng); };
    auto check = [&](const std::string &what, double error, double tol) {
        report.cases++;
        report.worst_error = std::max(report.worst_error, error);
        if (!(error <= tol)) {
            report.failures++;
            if (report.first_failure.empty()) {
                report.first_failure = what + " error " + fmt(error);
            }
        }
    };
    auto in_unit = [](std::span<const double> p) {
        return std::all_of(p.begin(), p.end(), [](double v) { return v >= 0 && v <= 1; });
    };

    for (int i = 0; i < 300; i++) {
        auto dist = thermal_pmf(uniform(0.0, 50.0));
        check("thermal_pmf", in_unit(dist.populations()) ? std::abs(dist.total() - 1) : INFINITY, 1e-9);
    }
    for (int i = 0; i < 100; i++) {
        auto dist = random_distribution(rng, 5 + rng() % 60);
        auto moved = dist.resized(2 + rng() % 80);
        check("resized", std::abs(moved.total() - 1), 1e-9);
    }
    for (int i = 0; i < 300; i++) {
        auto dist = random_distribution(rng, 2 + rng() % 60);
        DriveParams pulse(uniform(1e4, 1e6), uniform(1e-7, 5e-5));
        double eta = uniform(0.0, 0.3);
        auto red = cooling::apply_rsb_pulse(dist, pulse, eta);
        auto blue = cooling::apply_bsb_pulse(dist, pulse, eta);
        check("apply_rsb_pulse", in_unit(red.populations()) ? std::abs(red.total() - 1) : INFINITY, 1e-9);
        check("apply_bsb_pulse", in_unit(blue.populations()) ? std::abs(blue.total() - 1) : INFINITY, 1e-9);
    }
    for (int i = 0; i < 100; i++) {
        auto dist = i % 2 ? random_distribution(rng, 2 + rng() % 30) : thermal_pmf(uniform(0.0, 10.0));
        auto out = cooling::evolve_heating(dist, cooling::HeatingRate(uniform(0.0, 5e3), ModeId::r2),
                                           uniform(0.0, 2e-3));
        check("evolve_heating", in_unit(out.populations()) ? std::abs(out.total() - 1) : INFINITY, 1e-9);
    }
    for (int i = 0; i < 30; i++) {
        std::map<ModeId, PhononDistribution> initial{{ModeId::r1, thermal_pmf(uniform(0.0, 15.0))},
                                                     {ModeId::r2, thermal_pmf(uniform(0.0, 15.0))}};
        std::map<ModeId, double> etas{{ModeId::r1, uniform(0.02, 0.15)}, {ModeId::r2, uniform(0.02, 0.15)}};
        cooling::PulseSchedule schedule;
        int pulses = 2 + static_cast<int>(rng() % 20);
        for (int k = 0; k < pulses; k++) {
            schedule.pulses.emplace_back(k % 2 ? ModeId::r2 : ModeId::r1,
                                         unit(rng) < 0.8 ? cooling::Sideband::RSB : cooling::Sideband::BSB,
                                         uniform(1e-6, 3e-5), uniform(1e5, 6e5));
        }
        auto trace = cooling::run_schedule(initial, schedule, etas, {{ModeId::r2, uniform(0.0, 3e3)}});
        for (const auto &[mode, dist] : trace.final) {
            check("run_schedule", std::abs(dist.total() - 1), 1e-9);
        }
    }
    for (int i = 0; i < 20; i++) {
        ms::MSGateParams p{uniform(2e4, 6e4), (unit(rng) < 0.5 ? -1 : 1) * uniform(5e3, 3e4)};
        p.initial_nbar = uniform(0.0, 1.0);
        p.heating_rate = uniform(0.0, 500.0);
        std::vector<double> times;
        for (int k = 0; k <= 30; k++) {
            times.push_back(300e-6 * k / 30.0);
        }
        auto curve = ms::propagate(p, times);
        double worst = 0;
        for (std::size_t k = 0; k < curve.size(); k++) {
            auto pops = curve.at(k);
            worst = std::max(worst, in_unit(pops) ? std::abs(pops[0] + pops[1] + pops[2] + pops[3] - 1) : INFINITY);
        }
        check("ms::propagate", worst, 1e-8);
    }
    for (int i = 0; i < 100; i++) {
        ms::PopulationCurve curve;
        for (int k = 0; k < 10; k++) {
            std::array<double, 4> w{unit(rng), unit(rng), unit(rng), unit(rng)};
            double total = w[0] + w[1] + w[2] + w[3];
            curve.times.push_back(k * 1e-6);
            curve.p00.push_back(w[0] / total);
            curve.p01.push_back(w[1] / total);
            curve.p10.push_back(w[2] / total);
            curve.p11.push_back(w[3] / total);
        }
        auto confused = ms::apply_confusion(curve, ms::ConfusionMatrix(unit(rng), unit(rng)));
        double worst = 0;
        for (std::size_t k = 0; k < confused.size(); k++) {
            auto pops = confused.at(k);
            worst = std::max(worst, in_unit(pops) ? std::abs(pops[0] + pops[1] + pops[2] + pops[3] - 1) : INFINITY);
        }
        check("apply_confusion", worst, 1e-12);
    }
    for (int i = 0; i < 100; i++) {
        std::vector<double> p{unit(rng), unit(rng), unit(rng), unit(rng)};
        double total = std::accumulate(p.begin(), p.end(), 0.0);
        for (auto &v : p) {
            v /= total;
        }
        auto shots = static_cast<std::int64_t>(1 + rng() % 5000);
        auto counts = fitkit::sample_multinomial(rng, shots, p);
        check("sample_multinomial",
              std::abs(static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::int64_t{0}) - shots)),
              0.0);
    }
    return report;
}

}  // namespace trapsim::testing
