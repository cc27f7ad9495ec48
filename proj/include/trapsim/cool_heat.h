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

#ifndef TRAPSIM_COOL_HEAT_H
#define TRAPSIM_COOL_HEAT_H

#include <map>
#include <span>
#include <string>
#include <vector>

#include "trapsim/core_types.h"

namespace trapsim::cooling {

enum class Sideband { RSB, BSB, carrier };

std::string to_string(Sideband sideband);
Sideband sideband_from_string(const std::string &name);

struct CoolingPulse {
    ModeId mode;
    Sideband sideband;
    double duration;  // s
    double rabi;      // Hz, bare

    CoolingPulse(ModeId mode, Sideband sideband, double duration, double rabi);
};

/// Only phonon populations are tracked, so every pulse must be followed by
/// an optical repump that returns the spin to the ground state.
struct PulseSchedule {
    std::vector<CoolingPulse> pulses;
    bool repump_after_each = true;
};

struct HeatingRate {
    double rate;  // quanta / s, >= 0
    ModeId mode;

    HeatingRate(double rate, ModeId mode);
};

/// Population transfer n -> n-1 with probability sin²(Ω_{n,n-1} t / 2),
/// spin reset afterwards. n = 0 is dark.
PhononDistribution apply_rsb_pulse(const PhononDistribution &dist, const DriveParams &pulse, double eta);

/// Population transfer n -> n+1 with probability sin²(Ω_{n,n+1} t / 2).
PhononDistribution apply_bsb_pulse(const PhononDistribution &dist, const DriveParams &pulse, double eta);

/// Heating by an infinite-temperature bath:
/// dp(n)/dt = ṅ [n p(n-1) + (n+1) p(n+1) - (2n+1) p(n)],
/// integrated with adaptive Dormand–Prince steps. The Fock space grows as
/// needed so the final tail stays below the accepted threshold.
PhononDistribution evolve_heating(const PhononDistribution &dist, const HeatingRate &rate, double t);

struct ScheduleTrace {
    std::vector<ModeId> modes;
    std::vector<std::vector<double>> nbar;  // [pulse index][mode], index 0 = before the first pulse
    std::map<ModeId, PhononDistribution> final;
};

/// Runs the schedule on independent modes. Modes absent from `heating` do
/// not heat; the others heat for the duration of every pulse.
ScheduleTrace run_schedule(const std::map<ModeId, PhononDistribution> &initial, const PulseSchedule &schedule,
                           const std::map<ModeId, double> &etas, const std::map<ModeId, double> &heating = {});

/// Documented stand-in for an untuned pulsed-cooling sequence: `rounds` RSB
/// pulses on each mode, alternating modes, with durations cycling through the
/// π times of the n -> n-1 transitions for n = 1..cycle.
PulseSchedule default_schedule(std::span<const ModeSpec> modes, double rabi, int rounds = 50, int cycle = 6);

/// n̄ = r/(1 - r) with r = P_RSB / P_BSB.
double sideband_ratio_nbar(double p_rsb, double p_bsb);

struct HeatingSample {
    double t;      // s
    double nbar;
    double sigma;
};

struct HeatingRateFit {
    ModeId mode;
    double rate;  // quanta / s, may be negative
    double rate_error;
    double nbar0;
    double nbar0_error;
    double chi2_reduced;
    std::vector<std::string> warnings;
};

/// Weighted straight-line fit n̄(t) = n̄0 + ṅ t. A negative slope is reported
/// as-is with a warning.
HeatingRateFit fit_heating_rate(std::span<const HeatingSample> samples, ModeId mode = ModeId::r2);

}  // namespace trapsim::cooling

#endif
