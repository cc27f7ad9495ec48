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

#include "trapsim/cool_heat.h"

#include <algorithm>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <numbers>

#include "trapsim/fitkit.h"
#include "trapsim/raman_dynamics.h"

namespace trapsim::cooling {

namespace odeint = boost::numeric::odeint;

std::string to_string(Sideband sideband) {
    switch (sideband) {
        case Sideband::RSB:
            return "rsb";
        case Sideband::BSB:
            return "bsb";
        case Sideband::carrier:
            return "carrier";
    }
    return "?";
}

Sideband sideband_from_string(const std::string &name) {
    if (name == "rsb") return Sideband::RSB;
    if (name == "bsb") return Sideband::BSB;
    if (name == "carrier") return Sideband::carrier;
    throw DomainError("unknown sideband '" + name + "' (expected rsb, bsb or carrier)");
}

CoolingPulse::CoolingPulse(ModeId mode, Sideband sideband, double duration, double rabi)
    : mode(mode), sideband(sideband), duration(duration), rabi(rabi) {
    if (!(duration > 0) || !std::isfinite(duration)) {
        throw DomainError("pulse duration must be finite and positive");
    }
    if (!(rabi > 0) || !std::isfinite(rabi)) {
        throw DomainError("pulse Rabi frequency must be finite and positive");
    }
}

HeatingRate::HeatingRate(double rate, ModeId mode) : rate(rate), mode(mode) {
    if (!(rate >= 0) || !std::isfinite(rate)) {
        throw DomainError("heating rate must be finite and non-negative");
    }
}

namespace {

double transfer_probability(double rabi, double element, double t) {
    double s = std::sin(std::numbers::pi * rabi * element * t);
    return s * s;
}

constexpr double kNegligible = 1e-15;
constexpr std::size_t kMaxLevels = 20000;

}  // namespace

PhononDistribution apply_rsb_pulse(const PhononDistribution &dist, const DriveParams &pulse, double eta) {
    auto p = dist.populations();
    std::vector<double> out(p.begin(), p.end());
    for (std::size_t n = 1; n < p.size(); n++) {
        double moved = p[n] * transfer_probability(pulse.rabi, raman::matrix_element(static_cast<int>(n), -1, eta),
                                                   pulse.duration);
        out[n] -= moved;
        out[n - 1] += moved;
    }
    return PhononDistribution(std::move(out));
}

PhononDistribution apply_bsb_pulse(const PhononDistribution &dist, const DriveParams &pulse, double eta) {
    auto p = dist.populations();
    std::vector<double> out(p.begin(), p.end());
    if (p.back() > kNegligible) {
        out.push_back(0.0);
    }
    std::size_t top = out.size() - 1;
    for (std::size_t n = 0; n < top; n++) {
        double moved = p[n] * transfer_probability(pulse.rabi, raman::matrix_element(static_cast<int>(n), 1, eta),
                                                   pulse.duration);
        out[n] -= moved;
        out[n + 1] += moved;
    }
    return PhononDistribution(std::move(out));
}

namespace {

// Birth–death chain with rates ṅ(n+1) up and ṅn down; the top level does not
// pump upward, which keeps the truncated generator trace-preserving.
struct HeatingSystem {
    double rate;

    void operator()(const std::vector<double> &p, std::vector<double> &dp, double) const {
        std::size_t size = p.size();
        std::size_t top = size - 1;
        for (std::size_t n = 0; n < size; n++) {
            double nn = static_cast<double>(n);
            double v = -nn * p[n];
            if (n < top) v -= (nn + 1) * p[n];
            if (n < top) v += (nn + 1) * p[n + 1];
            if (n > 0) v += nn * p[n - 1];
            dp[n] = rate * v;
        }
    }
};

std::vector<double> integrate_heating(std::vector<double> p, double rate, double t) {
    auto stepper = odeint::make_controlled<odeint::runge_kutta_dopri5<std::vector<double>>>(1e-13, 1e-10);
    double top = static_cast<double>(p.size());
    double dt0 = std::min(t, 0.01 / (rate * (2 * top + 1)));
    try {
        odeint::integrate_adaptive(stepper, HeatingSystem{rate}, p, 0.0, t, dt0);
    } catch (const std::exception &e) {
        throw IntegrationError(std::string("heating integration failed: ") + e.what());
    }
    for (double v : p) {
        if (!std::isfinite(v)) {
            throw IntegrationError("heating integration produced non-finite populations");
        }
    }
    for (double &v : p) {
        v = std::max(v, 0.0);
    }
    return p;
}

}  // namespace

PhononDistribution evolve_heating(const PhononDistribution &dist, const HeatingRate &rate, double t) {
    if (!(t >= 0) || !std::isfinite(t)) {
        throw DomainError("heating time must be finite and non-negative");
    }
    if (t == 0 || rate.rate == 0) {
        return dist;
    }
    double final_mean = dist.mean() + rate.rate * t;
    // Too small a space shows up as tail mass and is doubled below.
    std::size_t n_max = std::max(dist.n_max(), default_n_max(final_mean));
    while (true) {
        PhononDistribution padded = dist.resized(n_max);
        auto p = padded.populations();
        std::vector<double> out = integrate_heating(std::vector<double>(p.begin(), p.end()), rate.rate, t);
        PhononDistribution result(std::move(out));
        if (result.tail() < PhononDistribution::kTailThreshold) {
            return result;
        }
        if (2 * n_max > kMaxLevels) {
            throw TruncationError("heating: Fock space would exceed " + std::to_string(kMaxLevels) + " levels",
                                  2 * n_max);
        }
        n_max *= 2;
    }
}

ScheduleTrace run_schedule(const std::map<ModeId, PhononDistribution> &initial, const PulseSchedule &schedule,
                           const std::map<ModeId, double> &etas, const std::map<ModeId, double> &heating) {
    if (!schedule.repump_after_each) {
        throw DomainError("schedules without a repump after each pulse are not supported");
    }
    ScheduleTrace trace;
    std::map<ModeId, PhononDistribution> state = initial;
    for (const auto &[mode, dist] : initial) {
        trace.modes.push_back(mode);
        if (!etas.contains(mode)) {
            throw DomainError("no Lamb-Dicke parameter for mode " + to_string(mode));
        }
    }
    for (const auto &[mode, rate] : heating) {
        if (!initial.contains(mode)) {
            throw DomainError("heating rate given for unknown mode " + to_string(mode));
        }
        (void)HeatingRate(rate, mode);
    }
    auto record = [&] {
        std::vector<double> row;
        for (ModeId mode : trace.modes) row.push_back(state.at(mode).mean());
        trace.nbar.push_back(std::move(row));
    };
    record();
    for (const CoolingPulse &pulse : schedule.pulses) {
        auto it = state.find(pulse.mode);
        if (it == state.end()) {
            throw DomainError("pulse addresses mode " + to_string(pulse.mode) + " without an initial distribution");
        }
        DriveParams drive(pulse.rabi, pulse.duration);
        double eta = etas.at(pulse.mode);
        switch (pulse.sideband) {
            case Sideband::RSB:
                it->second = apply_rsb_pulse(it->second, drive, eta);
                break;
            case Sideband::BSB:
                it->second = apply_bsb_pulse(it->second, drive, eta);
                break;
            case Sideband::carrier:
                break;
        }
        for (const auto &[mode, rate] : heating) {
            state.at(mode) = evolve_heating(state.at(mode), HeatingRate(rate, mode), pulse.duration);
        }
        record();
    }
    trace.final = std::move(state);
    return trace;
}

PulseSchedule default_schedule(std::span<const ModeSpec> modes, double rabi, int rounds, int cycle) {
    if (modes.empty()) {
        throw DomainError("default_schedule needs at least one mode");
    }
    if (rounds < 1 || cycle < 1) {
        throw DomainError("default_schedule: rounds and cycle must be positive");
    }
    PulseSchedule schedule;
    for (int r = 0; r < rounds; r++) {
        int n = cycle - (r % cycle);
        for (const ModeSpec &mode : modes) {
            double element = raman::matrix_element(n, -1, mode.lamb_dicke);
            schedule.pulses.emplace_back(mode.mode_id, Sideband::RSB, 0.5 / (rabi * element), rabi);
        }
    }
    return schedule;
}

double sideband_ratio_nbar(double p_rsb, double p_bsb) {
    if (!std::isfinite(p_rsb) || !std::isfinite(p_bsb) || p_rsb < 0 || p_bsb <= 0) {
        throw DomainError("sideband ratio needs finite P_RSB >= 0 and P_BSB > 0");
    }
    double r = p_rsb / p_bsb;
    if (r >= 1) {
        throw DomainError("sideband ratio P_RSB/P_BSB = " + std::to_string(r) + " is not below 1");
    }
    return r / (1 - r);
}

HeatingRateFit fit_heating_rate(std::span<const HeatingSample> samples, ModeId mode) {
    if (samples.size() < 3) {
        throw DomainError("heating-rate fit needs at least 3 samples");
    }
    std::vector<fitkit::DataPoint> points;
    for (const HeatingSample &s : samples) {
        if (!(s.sigma > 0)) {
            throw DomainError("heating samples need positive uncertainties");
        }
        points.push_back({s.t, s.nbar, s.sigma});
    }
    fitkit::LinearFit line = fitkit::linear_fit(points);
    HeatingRateFit fit{mode, line.slope, line.slope_error, line.intercept, line.intercept_error, line.chi2_reduced, {}};
    if (line.slope < 0) {
        fit.warnings.push_back("fitted heating rate is negative");
    }
    return fit;
}

}  // namespace trapsim::cooling
