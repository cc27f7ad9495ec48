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

#include "trapsim/micromotion_scan.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "trapsim/raman_dynamics.h"
#include "trapsim/trap_field.h"

namespace trapsim::micromotion {

double modulation_index(double e_total_y, const IonSpecies &species, const ModeSpec &normal_mode,
                        const RamanGeometry &geometry, double mathieu_q) {
    if (!(mathieu_q >= 0)) {
        throw DomainError("Mathieu q must be non-negative");
    }
    double dy = trap::displacement_from_field(e_total_y, species, normal_mode);
    return geometry.delta_k_normal() * 0.5 * mathieu_q * std::abs(dy);
}

double carrier_p1(double beta, const DriveParams &pulse, std::span<const double> etas,
                  std::span<const PhononDistribution> phonons) {
    if (!(beta >= 0)) {
        throw DomainError("modulation index must be non-negative");
    }
    double t = pulse.duration;
    return raman::carrier_curve(std::span<const double>(&t, 1), pulse, etas, phonons, fitkit::bessel_j(0, beta))[0];
}

double MicromotionSetup::modulation_per_field() const {
    return modulation_index(1.0, species, normal_mode, geometry, mathieu_q);
}

double MicromotionSetup::pi_time(double rabi) const {
    double dw = 1.0;
    for (double eta : etas) {
        dw *= std::exp(-0.5 * eta * eta);
    }
    return 0.5 / (rabi * dw);
}

MicromotionSetup MicromotionSetup::standard() {
    static const double q = [] {
        auto op = trap::rf_null_and_frequencies(trap::default_layout(), IonSpecies::yb171());
        return op.normal_mathieu_q();
    }();
    auto species = IonSpecies::yb171();
    auto geometry = RamanGeometry::counter_355nm();
    double eta1 = lamb_dicke(species, geometry, 1.84e6, geometry.projection_angles[0]);
    double eta2 = lamb_dicke(species, geometry, 2.11e6, geometry.projection_angles[1]);
    return MicromotionSetup{
        .species = species,
        .normal_mode = ModeSpec(2.11e6, ModeId::r2, eta2),
        .mathieu_q = q,
        .geometry = geometry,
        .etas = {eta1, eta2},
        .phonons = {PhononDistribution::ground(), PhononDistribution::ground()},
    };
}

StrayFieldTrajectory::StrayFieldTrajectory(std::vector<FieldSample> samples, Interpolation interpolation)
    : samples_(std::move(samples)), interpolation_(interpolation) {
    if (samples_.empty()) {
        throw DomainError("stray-field trajectory needs at least one sample");
    }
    for (std::size_t i = 1; i < samples_.size(); i++) {
        if (!(samples_[i].t > samples_[i - 1].t)) {
            throw DomainError("stray-field trajectory times must be strictly increasing");
        }
    }
}

StrayFieldTrajectory StrayFieldTrajectory::constant(double e_y) {
    return StrayFieldTrajectory({{0.0, e_y}}, Interpolation::step);
}

double charging_field(double t, double e0, double step, double e_inf, double t_on, double tau) {
    if (t < t_on) {
        return e0;
    }
    return e0 + step + e_inf * (1.0 - std::exp(-(t - t_on) / tau));
}

StrayFieldTrajectory StrayFieldTrajectory::charging(double e0, double step, double e_inf, double t_on, double tau,
                                                    double t_start, double t_end) {
    if (!(tau > 0) || !(t_end > t_start)) {
        throw DomainError("charging trajectory needs tau > 0 and t_end > t_start");
    }
    constexpr int kSamples = 4000;
    double span = t_end - t_start;
    std::vector<FieldSample> samples;
    for (int i = 0; i <= kSamples; i++) {
        double t = t_start + span * i / kSamples;
        if (samples.empty() || t > samples.back().t) {
            samples.push_back({t, charging_field(t, e0, step, e_inf, t_on, tau)});
        }
        double next = t_start + span * (i + 1) / kSamples;
        if (i < kSamples && t < t_on && next >= t_on) {
            // Bracket the jump with samples 1e-9 of the span apart.
            double before = t_on - 1e-9 * span;
            if (before > samples.back().t) {
                samples.push_back({before, e0});
            }
            if (t_on > samples.back().t && t_on < next) {
                samples.push_back({t_on, charging_field(t_on, e0, step, e_inf, t_on, tau)});
            }
        }
    }
    return StrayFieldTrajectory(std::move(samples), Interpolation::linear);
}

double StrayFieldTrajectory::at(double t) const {
    if (t <= samples_.front().t) {
        return samples_.front().e_y;
    }
    if (t >= samples_.back().t) {
        return samples_.back().e_y;
    }
    auto it = std::upper_bound(samples_.begin(), samples_.end(), t,
                               [](double value, const FieldSample &s) { return value < s.t; });
    const auto &hi = *it;
    const auto &lo = *(it - 1);
    if (interpolation_ == Interpolation::step) {
        return lo.e_y;
    }
    double w = (t - lo.t) / (hi.t - lo.t);
    return lo.e_y + w * (hi.e_y - lo.e_y);
}

double ScanRecord::delta_e(std::size_t i) const {
    return axis == ScanAxis::voltage ? gain * points[i].x : points[i].x;
}

bool ScanRecord::expected_value() const {
    return std::all_of(points.begin(), points.end(), [](const ScanPoint &p) { return std::isinf(p.shots); });
}

std::vector<ScanRecord> simulate_scan(const StrayFieldTrajectory &trajectory, std::span<const double> scan_times,
                                      std::span<const double> grid, double gain, const DriveParams &pulse,
                                      const MicromotionSetup &setup, std::optional<std::int64_t> shots,
                                      std::uint64_t seed) {
    if (grid.empty()) {
        throw DomainError("simulate_scan: the compensation grid is empty");
    }
    if (scan_times.empty()) {
        throw DomainError("simulate_scan: no scan instants given");
    }
    if (shots && *shots < 1) {
        throw DomainError("simulate_scan: shots must be at least 1");
    }
    double per_field = setup.modulation_per_field();
    std::vector<ScanRecord> records;
    records.reserve(scan_times.size());
    for (std::size_t r = 0; r < scan_times.size(); r++) {
        fitkit::Rng rng(fitkit::derive_seed(seed, r));
        ScanRecord record{scan_times[r], ScanAxis::voltage, gain, {}};
        double e_y = trajectory.at(scan_times[r]);
        for (double dv : grid) {
            double beta = per_field * std::abs(e_y + gain * dv);
            double p = carrier_p1(beta, pulse, setup.etas, setup.phonons);
            if (shots) {
                double k = static_cast<double>(fitkit::sample_binomial(rng, *shots, p));
                record.points.push_back({dv, k / static_cast<double>(*shots), static_cast<double>(*shots)});
            } else {
                record.points.push_back({dv, p, std::numeric_limits<double>::infinity()});
            }
        }
        records.push_back(std::move(record));
    }
    return records;
}

namespace {

double pattern(double a, double b, double s, double offset, double delta_e) {
    double v = std::sin(0.5 * std::numbers::pi * fitkit::bessel_j(0, s * (delta_e - offset)));
    return a * v * v + b;
}

// Index of the first local minimum of `y` walking from `start` in direction `dir`.
std::optional<std::size_t> first_minimum(const std::vector<double> &y, std::size_t start, int dir) {
    std::size_t i = start;
    while (true) {
        std::size_t next = static_cast<std::size_t>(static_cast<long>(i) + dir);
        if (next >= y.size()) {
            return std::nullopt;
        }
        if (y[next] > y[i] && i != start) {
            return i;
        }
        i = next;
    }
}

}  // namespace

OffsetFitResult fit_offset(const ScanRecord &record) {
    const std::size_t n = record.points.size();
    if (n < 5) {
        throw DomainError("fit_offset: need at least 5 scan points");
    }
    std::vector<std::pair<double, std::size_t>> order;
    for (std::size_t i = 0; i < n; i++) {
        order.emplace_back(record.delta_e(i), i);
    }
    std::sort(order.begin(), order.end());
    std::vector<double> x(n), y(n), sigma(n);
    bool exact = record.expected_value();
    for (std::size_t k = 0; k < n; k++) {
        const auto &pt = record.points[order[k].second];
        x[k] = order[k].first;
        y[k] = pt.p1;
        if (exact) {
            sigma[k] = 1.0;
        } else {
            double p = (pt.p1 * pt.shots + 1.0) / (pt.shots + 2.0);
            sigma[k] = std::sqrt(p * (1.0 - p) / pt.shots);
        }
    }

    auto [lo_it, hi_it] = std::minmax_element(y.begin(), y.end());
    double contrast = *hi_it - *lo_it;
    double typical_sigma = exact ? 0.0 : *std::min_element(sigma.begin(), sigma.end());
    if (!(contrast > std::max(1e-6, 4.0 * typical_sigma))) {
        throw fitkit::FitError("fit_offset: scan shows no contrast; the offset is undetermined (degenerate fit)");
    }

    // Seed from the smoothed maximum and the distance to the neighbouring minima.
    std::vector<double> smooth(n);
    for (std::size_t k = 0; k < n; k++) {
        double sum = 0;
        int count = 0;
        for (std::size_t j = (k == 0 ? 0 : k - 1); j <= std::min(n - 1, k + 1); j++) {
            sum += y[j];
            count++;
        }
        smooth[k] = exact ? y[k] : sum / count;
    }
    std::size_t peak = static_cast<std::size_t>(std::max_element(smooth.begin(), smooth.end()) - smooth.begin());
    double span = x.back() - x.front();
    auto left = first_minimum(smooth, peak, -1);
    auto right = first_minimum(smooth, peak, 1);
    double center = x[peak];
    double width = 0.5 * span;
    if (left && right) {
        // The pattern is symmetric, so the flanking minima pin the centre even
        // when the top is flat and the maximum sits off to one side.
        center = 0.5 * (x[*left] + x[*right]);
        width = 0.5 * (x[*right] - x[*left]);
    } else if (left || right) {
        width = std::abs(x[left ? *left : *right] - x[peak]);
    }
    constexpr double kFirstZero = 2.404825557695773;
    width = std::max(width, 2.0 * span / static_cast<double>(n));

    fitkit::FitProblem problem;
    problem.y = y;
    problem.sigma = sigma;
    problem.scale_covariance = exact;
    problem.names = {"contrast", "offset", "scale", "delta_e_fit"};
    problem.lower = {0.0, -1.0, 0.0, x.front() - span};
    problem.upper = {2.0, 1.0, std::numeric_limits<double>::infinity(), x.back() + span};
    problem.model = fitkit::pointwise(
        [](std::span<const double> p, double de) { return pattern(p[0], p[1], p[2], p[3], de); }, x);
    problem.tolerance = 1e-12;
    problem.max_iterations = 400;

    std::optional<fitkit::FitResult> best;
    std::string last_error;
    for (double factor : {1.0, 0.7, 1.4}) {
        double s0 = kFirstZero / width * factor;
        problem.initial = {std::max(contrast, 1e-3), *lo_it, s0, center};
        problem.typical = {1.0, 1.0, s0, 1.0 / s0};
        try {
            auto fit = fitkit::lm_fit(problem);
            if (!best || fit.chi2 < best->chi2) {
                best = fit;
            }
        } catch (const fitkit::FitError &e) {
            last_error = e.what();
        }
    }
    if (!best) {
        throw fitkit::FitError("fit_offset: no convergence (" + last_error + ")");
    }
    if (!exact) {
        // Weights from the observed p̂ favour downward fluctuations; refit
        // with binomial σ of the fitted pattern instead.
        for (int round = 0; round < 2; round++) {
            auto pred = problem.model(best->params);
            for (std::size_t k = 0; k < n; k++) {
                double shots = record.points[order[k].second].shots;
                double q = std::clamp(pred[k], 0.5 / shots, 1.0 - 0.5 / shots);
                problem.sigma[k] = std::sqrt(q * (1.0 - q) / shots);
            }
            problem.initial = best->params;
            try {
                best = fitkit::lm_fit(problem);
            } catch (const fitkit::FitError &) {
                break;
            }
        }
    }
    if (best->params[0] < 1e-9 || best->params[2] <= 0) {
        throw fitkit::FitError("fit_offset: fitted pattern has no contrast (degenerate fit)");
    }
    return OffsetFitResult{
        .delta_e_fit = best->params[3],
        .uncertainty = best->errors[3],
        .modulation_scale = best->params[2],
        .contrast = best->params[0],
        .offset = best->params[1],
        .chi2_reduced = best->chi2_reduced,
    };
}

std::vector<MonitorSample> monitor_series(std::span<const ScanRecord> records) {
    if (records.empty()) {
        throw DomainError("monitor_series: no scan records");
    }
    std::vector<MonitorSample> out;
    out.reserve(records.size());
    for (const auto &record : records) {
        try {
            auto fit = fit_offset(record);
            out.push_back({record.timestamp, -fit.delta_e_fit, fit.uncertainty, fit.chi2_reduced, std::nullopt});
        } catch (const Error &e) {
            double nan = std::numeric_limits<double>::quiet_NaN();
            out.push_back({record.timestamp, nan, nan, nan, std::string(e.what())});
        }
    }
    return out;
}

ChargingFit fit_charging(std::span<const MonitorSample> series, double t_on, double tau_guess) {
    std::vector<double> t, y, sigma;
    for (const auto &s : series) {
        if (!s.error && s.sigma > 0) {
            t.push_back(s.timestamp);
            y.push_back(s.e_y_estimate);
            sigma.push_back(s.sigma);
        }
    }
    std::size_t before = std::count_if(t.begin(), t.end(), [&](double v) { return v < t_on; });
    if (t.size() < 6 || before < 1 || t.size() - before < 3) {
        throw fitkit::FitError("fit_charging: need samples before and after the turn-on");
    }
    double e0_guess = 0, late = 0;
    for (std::size_t i = 0; i < t.size(); i++) {
        if (t[i] < t_on) {
            e0_guess += y[i] / static_cast<double>(before);
        }
    }
    late = y.back();
    double step_guess = 0;
    for (std::size_t i = 0; i < t.size(); i++) {
        if (t[i] >= t_on) {
            step_guess = y[i] - e0_guess;
            break;
        }
    }
    double scale = std::max({std::abs(e0_guess), std::abs(late), 1.0});
    fitkit::FitProblem problem;
    problem.y = y;
    problem.sigma = sigma;
    problem.scale_covariance = false;
    problem.names = {"e0", "step", "e_inf", "tau"};
    problem.initial = {e0_guess, step_guess, late - e0_guess - step_guess, tau_guess};
    problem.typical = {scale, scale, scale, tau_guess};
    problem.lower = {-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
                     -std::numeric_limits<double>::infinity(), 1e-6 * tau_guess};
    problem.upper = {};
    problem.upper.assign(4, std::numeric_limits<double>::infinity());
    problem.model = fitkit::pointwise(
        [t_on](std::span<const double> p, double time) { return charging_field(time, p[0], p[1], p[2], t_on, p[3]); },
        t);
    auto fit = fitkit::lm_fit(problem);
    return ChargingFit{
        .e0 = fit.params[0],
        .e0_error = fit.errors[0],
        .step = fit.params[1],
        .step_error = fit.errors[1],
        .e_inf = fit.params[2],
        .e_inf_error = fit.errors[2],
        .tau = fit.params[3],
        .tau_error = fit.errors[3],
        .chi2_reduced = fit.chi2_reduced,
    };
}

}  // namespace trapsim::micromotion
