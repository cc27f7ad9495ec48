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

// One-time calibration of the default electrode layout: fits the RF rail
// width and the electrode voltages so that the gapless-plane model puts a
// 171Yb+ ion at 100 um with radial modes 1.84 MHz (lateral) and 2.11 MHz
// (normal) with no DC field at the RF null. The ODC centre segments stay grounded.
//
// Prints the fitted dimensions/voltages; paste them into default_layout().

#include <cstdio>

#include "trapsim/fitkit.h"
#include "trapsim/trap_field.h"

using namespace trapsim;

int main() {
    const auto species = IonSpecies::yb171();
    const double drive = 20e6;
    auto dims = trap::default_dimensions();

    auto evaluate = [&](std::span<const double> p) {
        dims.rf_width = p[0] * 1e-6;
        trap::LayoutVoltages v{.rf_amplitude = p[1], .idc = p[2], .odc_center = 0.0, .odc_endcap = p[3]};
        auto layout = trap::build_symmetric_layout(dims, v, drive);
        auto op = trap::rf_null_and_frequencies(layout, species);
        double f_normal = op.normal_frequency();
        double f_lateral = op.radial_frequencies[0] + op.radial_frequencies[1] - f_normal;
        auto e_dc = trap::field(layout.dc_patches(), op.rf_null);
        return std::vector<double>{
            (op.rf_null.y() - 100e-6) / 1e-7,
            (f_lateral - 1.84e6) / 100.0,
            (f_normal - 2.11e6) / 100.0,
            e_dc.y() / 1e-2,
        };
    };

    fitkit::FitProblem problem;
    problem.model = evaluate;
    problem.y = {0, 0, 0, 0};
    problem.sigma = {1, 1, 1, 1};
    problem.initial = {110.0, 152.0, 3.0, 5.0};
    problem.typical = {100.0, 100.0, 1.0, 1.0};
    problem.names = {"rf_width_um", "rf_amplitude", "idc", "odc_endcap"};
    problem.tolerance = 1e-14;
    problem.max_iterations = 500;
    auto fit = fitkit::lm_fit(problem);

    std::printf("status %s, chi2 %.3e after %d iterations\n", fit.status.c_str(), fit.chi2, fit.iterations);
    for (std::size_t i = 0; i < fit.params.size(); i++) {
        std::printf("%-14s %.10g\n", problem.names[i].c_str(), fit.params[i]);
    }
    dims.rf_width = fit.params[0] * 1e-6;
    trap::LayoutVoltages v{fit.params[1], fit.params[2], 0.0, fit.params[3]};
    auto op = trap::rf_null_and_frequencies(trap::build_symmetric_layout(dims, v, drive), species);
    std::printf("ion height %.6f um, radial %.6f / %.6f MHz, axial %.6f MHz, q %.4f / %.4f\n", op.ion_height * 1e6,
                op.radial_frequencies[0] * 1e-6, op.radial_frequencies[1] * 1e-6, op.axial_frequency * 1e-6,
                op.mathieu_q[0], op.mathieu_q[1]);
    return 0;
}
