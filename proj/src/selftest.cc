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
#include <functional>
#include <numbers>
#include <ostream>

#include "trapsim/cli_io.h"
#include "trapsim/raman_dynamics.h"

namespace trapsim::io {

namespace {

struct Check {
    const char *name;
    std::function<double()> error;  // returns the deviation from the oracle
    double tolerance;
};

double max_abs_diff(const ms::PopulationCurve &a, const ms::PopulationCurve &b) {
    double worst = 0;
    for (std::size_t i = 0; i < a.size(); i++) {
        for (int k = 0; k < 4; k++) worst = std::max(worst, std::abs(a.at(i)[k] - b.at(i)[k]));
    }
    return worst;
}

}  // namespace

int run_selftest(std::ostream &out) {
    const IonSpecies yb = IonSpecies::yb171();
    const RamanGeometry counter = RamanGeometry::counter_355nm();
    std::vector<Check> checks = {
        {"bessel_j0_first_zero", [] { return std::abs(fitkit::bessel_j(0, 2.404825557695773)); }, 1e-12},
        {"laguerre_5_1_half", [] { return std::abs(fitkit::laguerre(5, 1, 0.5) - 2699.0 / 3840.0); }, 1e-13},
        {"lamb_dicke_2p11MHz",
         [&] { return std::abs(lamb_dicke(yb, counter, 2.11e6, std::numbers::pi / 4) / 0.09369521231 - 1); }, 1e-9},
        {"debye_waller_ground",
         [] { return std::abs(raman::matrix_element(0, 0, 0.1) - std::exp(-0.005)); }, 1e-15},
        {"sideband_ratio_identity",
         [] {
             double worst = 0;
             for (double nb : {0.0, 0.1, 0.2, 1.0, 5.0}) {
                 worst = std::max(worst, std::abs(cooling::sideband_ratio_nbar(nb / (nb + 1), 1.0) - nb));
             }
             return worst;
         },
         1e-9},
        {"heating_mean_law",
         [] {
             auto d = cooling::evolve_heating(PhononDistribution::ground(), cooling::HeatingRate(500, ModeId::r2), 1e-3);
             return std::abs(d.mean() - 0.5);
         },
         1e-4},
        {"rsb_pi_pulse_n1",
         [] {
             double eta = 0.1;
             double t = 0.5 / (1e5 * raman::matrix_element(1, -1, eta));
             auto d = cooling::apply_rsb_pulse(PhononDistribution::fock(1, 5), DriveParams(1e5, t), eta);
             return std::abs(d[0] - 1);
         },
         1e-12},
        {"carrier_at_j0_zero",
         [] {
             auto setup = micromotion::MicromotionSetup::standard();
             return micromotion::carrier_p1(2.404825557695773, DriveParams(545e3, 1e-6), setup.etas, setup.phonons);
         },
         1e-20},
        {"confusion_perfect_11",
         [] {
             ms::PopulationCurve c{{0.0}, {0.0}, {0.0}, {0.0}, {1.0}, {}};
             return std::abs(ms::apply_confusion(c, ms::ConfusionMatrix(0.04, 0.06)).p11[0] - 0.8836);
         },
         1e-12},
        {"ms_bell_point",
         [] {
             ms::MSGateParams p{49.9e3, 0.0};
             p.detuning = 2 * p.mode.lamb_dicke * p.rabi;
             p.n_max = 40;
             double t = 1 / p.detuning;
             auto c = ms::propagate(p, std::span<const double>(&t, 1));
             return std::max({std::abs(c.p00[0] - 0.5), std::abs(c.p11[0] - 0.5), c.p01[0], c.p10[0]});
         },
         1e-6},
        {"ms_propagate_vs_closed_form",
         [] {
             ms::MSGateParams p{49.9e3, -9.4e3};
             p.initial_nbar = 0.2;
             std::vector<double> t;
             for (int i = 0; i <= 10; i++) t.push_back(i * 2e-5);
             return max_abs_diff(ms::propagate(p, t), ms::ms_closed_form(p, t));
         },
         1e-6},
        {"laplace_residual_default_layout",
         [] {
             auto layout = trap::default_layout();
             auto dc = layout.dc_patches();
             trap::Vec3 x(12e-6, 95e-6, 7e-6);
             double h = 1e-6;
             double lap = 0;
             for (int k = 0; k < 3; k++) {
                 trap::Vec3 d = trap::Vec3::Zero();
                 d[k] = h;
                 lap += (trap::field(dc, x + d)[k] - trap::field(dc, x - d)[k]) / (2 * h);
             }
             return std::abs(lap) / trap::field(dc, x).norm() * h;
         },
         1e-4},
    };
    int failures = 0;
    for (const Check &c : checks) {
        double err;
        std::string note;
        try {
            err = c.error();
        } catch (const std::exception &e) {
            err = INFINITY;
            note = std::string(" (") + e.what() + ")";
        }
        bool ok = err <= c.tolerance;
        failures += ok ? 0 : 1;
        out << (ok ? "PASS " : "FAIL ") << c.name << " error=" << format_number(err)
            << " tol=" << format_number(c.tolerance) << note << '\n';
    }
    out << (failures == 0 ? "selftest: all checks passed" : "selftest: " + std::to_string(failures) + " failed") << '\n';
    return failures;
}

}  // namespace trapsim::io
