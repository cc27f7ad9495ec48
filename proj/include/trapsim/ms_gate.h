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

#ifndef TRAPSIM_MS_GATE_H
#define TRAPSIM_MS_GATE_H

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "trapsim/core_types.h"
#include "trapsim/fitkit.h"

namespace trapsim::ms {

/// Two-ion tilt mode used by default: 2.11 MHz with the per-ion Lamb–Dicke
/// parameter of a single ion divided by √2 (355 nm counter-propagating, 45°).
ModeSpec default_tilt_mode();

struct MSGateParams {
    double rabi;           // Hz, per ion
    double detuning;       // Hz, signed
    ModeSpec mode = default_tilt_mode();
    double initial_nbar = 0.0;
    double heating_rate = 0.0;  // quanta / s
    double gate_duration = 0.0;  // s, used when no explicit time grid is given
    std::size_t n_max = 0;       // 0 = automatic

    /// Validates the parameter set; throws DomainError.
    void validate() const;
    /// Explicit n_max, or one large enough for the thermal state, heating
    /// over `t_end` and the largest spin-dependent displacement.
    std::size_t effective_n_max(double t_end) const;
    /// Coupling strength ηΩ/2 in rad/s.
    double coupling() const;
};

struct ConfusionMatrix {
    double p10 = 0.0;  // read 1 given 0
    double p01 = 0.0;  // read 0 given 1

    ConfusionMatrix() = default;
    ConfusionMatrix(double p10, double p01);
};

struct PopulationCurve {
    std::vector<double> times;  // s
    std::vector<double> p00, p01, p10, p11;
    std::vector<std::string> warnings;

    std::size_t size() const { return times.size(); }
    std::array<double, 4> at(std::size_t i) const { return {p00[i], p01[i], p10[i], p11[i]}; }
};

/// Master-equation evolution of |00⟩ ⊗ thermal(n̄) under
/// H = ħ(ηΩ/2) S_x (a e^{-iδt} + a† e^{iδt}), S_x = σx⁽¹⁾ + σx⁽²⁾, with the
/// diffusive dissipator ṅ(D[a] + D[a†]). Times must be non-negative and
/// non-decreasing. Throws TruncationError when more than 1e-5 of the
/// population reaches n_max, IntegrationError when the stepper fails.
PopulationCurve propagate(const MSGateParams &params, std::span<const double> times);

/// Spin-dependent displacement α(t) = (ηΩ/2δ)(1 - e^{iδt}) and geometric
/// phase Φ(t) = (ηΩ/2δ)²(δt - sin δt) evaluated in closed form with the
/// thermal average of the displacement. Requires heating_rate = 0.
PopulationCurve ms_closed_form(const MSGateParams &params, std::span<const double> times);

/// Independent per-qubit readout errors applied to the joint populations.
PopulationCurve apply_confusion(const PopulationCurve &curve, const ConfusionMatrix &cm);

struct MSMeasurement {
    std::vector<double> times;  // s
    std::vector<std::array<double, 4>> populations;  // p00, p01, p10, p11
    double shots = 0;  // per time point, 0 = unknown (unit weights)
};

/// Multinomial sampling of a (confused) population curve.
MSMeasurement sample_curve(const PopulationCurve &curve, std::int64_t shots, std::uint64_t seed);

struct MSFit {
    MSGateParams params;
    ConfusionMatrix confusion;
    std::vector<std::string> names;  // rabi, detuning, nbar, p10, p01
    std::vector<std::vector<double>> covariance;
    std::vector<double> errors;
    double chi2_reduced;
    std::vector<std::string> warnings;
};

/// Least squares over (Ω, δ, n̄, p10, p01) with the forward model
/// apply_confusion(propagate(...)). Mode, heating rate and n_max come from
/// `guess`. δ keeps the sign of the guess.
MSFit fit_ms(const MSMeasurement &data, const MSGateParams &guess, const ConfusionMatrix &confusion_guess);

}  // namespace trapsim::ms

#endif
