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

#include "trapsim/raman_dynamics.h"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace trapsim::raman {

double matrix_element(int n, int s, double eta) {
    if (n < 0 || n + s < 0) {
        throw DomainError("matrix_element: Fock indices must be non-negative");
    }
    if (!(eta >= 0) || !std::isfinite(eta)) {
        throw DomainError("matrix_element: eta must be finite and non-negative");
    }
    int lo = std::min(n, n + s);
    int hi = std::max(n, n + s);
    int order = hi - lo;
    double x = eta * eta;
    // sqrt(lo!/hi!) η^order as a running product to avoid factorial overflow.
    double prefactor = std::exp(-0.5 * x);
    for (int k = lo + 1; k <= hi; k++) {
        prefactor *= eta / std::sqrt(static_cast<double>(k));
    }
    return std::abs(prefactor * fitkit::laguerre(lo, order, x));
}

CouplingMatrixElements::CouplingMatrixElements(double eta, int n_max)
    : eta_(eta), n_max_(n_max), table_(static_cast<std::size_t>(n_max + 1) * (2 * kMaxOrder + 1), 0.0) {
    for (int n = 0; n <= n_max; n++) {
        for (int s = -kMaxOrder; s <= kMaxOrder; s++) {
            if (n + s >= 0) {
                table_[static_cast<std::size_t>(n) * (2 * kMaxOrder + 1) + (s + kMaxOrder)] = matrix_element(n, s, eta);
            }
        }
    }
}

double CouplingMatrixElements::operator()(int n, int s) const {
    if (n < 0 || n > n_max_ || s < -kMaxOrder || s > kMaxOrder) {
        throw DomainError("CouplingMatrixElements: index out of cached range");
    }
    if (n + s < 0) {
        return 0.0;
    }
    return table_[static_cast<std::size_t>(n) * (2 * kMaxOrder + 1) + (s + kMaxOrder)];
}

double rabi_probability(double rabi, double detuning, double t) {
    double generalized_sq = rabi * rabi + detuning * detuning;
    if (generalized_sq == 0) {
        return 0.0;
    }
    double s = std::sin(std::numbers::pi * std::sqrt(generalized_sq) * t);
    return rabi * rabi / generalized_sq * s * s;
}

namespace {

struct WeightedRate {
    double weight;
    double factor;
};

// Joint (weight, carrier factor) list for independent modes; negligible
// joint weights are dropped.
std::vector<WeightedRate> carrier_terms(std::span<const double> etas, std::span<const PhononDistribution> phonons) {
    if (etas.size() != phonons.size() || etas.empty() || etas.size() > 2) {
        throw DomainError("carrier dynamics needs one or two modes with matching distributions");
    }
    auto factors = [](double eta, const PhononDistribution &dist) {
        std::vector<double> f(dist.size());
        for (std::size_t n = 0; n < dist.size(); n++) {
            f[n] = eta == 0 ? 1.0 : matrix_element(static_cast<int>(n), 0, eta);
        }
        return f;
    };
    std::vector<WeightedRate> terms;
    if (std::all_of(etas.begin(), etas.end(), [](double eta) { return eta == 0; })) {
        // No motional coupling: the phonon state drops out exactly.
        terms.push_back({1.0, 1.0});
        return terms;
    }
    auto f1 = factors(etas[0], phonons[0]);
    if (etas.size() == 1) {
        for (std::size_t n = 0; n < f1.size(); n++) {
            terms.push_back({phonons[0][n], f1[n]});
        }
        return terms;
    }
    auto f2 = factors(etas[1], phonons[1]);
    for (std::size_t n1 = 0; n1 < f1.size(); n1++) {
        double w1 = phonons[0][n1];
        if (w1 == 0) {
            continue;
        }
        for (std::size_t n2 = 0; n2 < f2.size(); n2++) {
            double w = w1 * phonons[1][n2];
            if (w > 1e-13) {
                terms.push_back({w, f1[n1] * f2[n2]});
            }
        }
    }
    return terms;
}

double clamp_probability(double p) {
    return std::clamp(p, 0.0, 1.0);
}

bool uniform_grid(std::span<const double> times) {
    if (times.size() < 3) {
        return false;
    }
    double dt = times[1] - times[0];
    if (!(dt > 0)) {
        return false;
    }
    for (std::size_t i = 1; i < times.size(); i++) {
        if (std::abs(times[i] - times[0] - static_cast<double>(i) * dt) > 1e-9 * dt) {
            return false;
        }
    }
    return true;
}

}  // namespace

std::vector<double> carrier_curve(std::span<const double> times, const DriveParams &drive,
                                  std::span<const double> etas, std::span<const PhononDistribution> phonons,
                                  double rabi_scale) {
    auto terms = carrier_terms(etas, phonons);
    double total = 0;
    for (const auto &term : terms) {
        total += term.weight;
    }
    std::vector<double> out(times.size());
    if (uniform_grid(times)) {
        // cos(2φt) along an even grid by the Chebyshev recurrence; thousands
        // of terms per point make the sin calls the bottleneck otherwise.
        const double dt = times.size() > 1 ? times[1] - times[0] : 0.0;
        const double det2 = drive.detuning * drive.detuning;
        for (const auto &term : terms) {
            double rabi = drive.rabi * term.factor * rabi_scale;
            double g2 = rabi * rabi + det2;
            if (g2 == 0) {
                continue;
            }
            double amp = 0.5 * term.weight * rabi * rabi / g2;
            double w = 2 * std::numbers::pi * std::sqrt(g2);
            double step = 2 * std::cos(w * dt);
            double prev = std::cos(w * (times[0] - dt));
            double cur = std::cos(w * times[0]);
            for (std::size_t i = 0; i < times.size(); i++) {
                out[i] += amp * (1.0 - cur);
                double next = step * cur - prev;
                prev = cur;
                cur = next;
            }
        }
        for (auto &v : out) {
            v = clamp_probability(v / total);
        }
        return out;
    }
    for (std::size_t i = 0; i < times.size(); i++) {
        double p = 0;
        for (const auto &term : terms) {
            p += term.weight * rabi_probability(drive.rabi * term.factor * rabi_scale, drive.detuning, times[i]);
        }
        out[i] = clamp_probability(p / total);
    }
    return out;
}

std::vector<double> rabi_curve(std::span<const double> times, const DriveParams &drive, const RamanGeometry &geometry,
                               std::span<const ModeSpec> modes, std::span<const PhononDistribution> phonons) {
    if (modes.empty() || modes.size() > 2 || modes.size() != phonons.size()) {
        throw DomainError("rabi_curve: need one or two modes with matching distributions");
    }
    std::vector<double> etas;
    for (const auto &mode : modes) {
        etas.push_back(geometry.configuration == BeamConfiguration::co_propagating ? 0.0 : mode.lamb_dicke);
    }
    for (const auto &dist : phonons) {
        dist.check_truncation();
    }
    return carrier_curve(times, drive, etas, phonons);
}

namespace {

constexpr double kLogEpsilon = 1e-6;

// Thermal weights kept until they fall below 1e-12 of the ground level, so
// finite-difference Jacobians never see the cutoff move.
PhononDistribution fit_thermal(double nbar) {
    if (nbar <= 0) {
        return PhononDistribution::ground(1);
    }
    double ratio = nbar / (nbar + 1.0);
    auto n_cut = static_cast<std::size_t>(std::ceil(std::log(1e-12) / std::log(ratio)));
    n_cut = std::clamp<std::size_t>(n_cut, 1, 20000);
    std::vector<double> p(n_cut + 1);
    double term = 1.0 / (nbar + 1.0);
    for (auto &v : p) {
        v = term;
        term *= ratio;
    }
    return PhononDistribution(std::move(p));
}

std::vector<double> binomial_sigmas(const RabiMeasurement &curve) {
    std::vector<double> sigma(curve.p1.size(), 1.0);
    if (curve.shots.empty()) {
        return sigma;
    }
    if (curve.shots.size() != curve.p1.size()) {
        throw DomainError("measurement needs one shot count per point");
    }
    for (std::size_t i = 0; i < sigma.size(); i++) {
        double n = curve.shots[i];
        if (!(n >= 1)) {
            throw DomainError("shot counts must be at least 1");
        }
        if (std::isinf(n)) {
            sigma[i] = 1e-4;
            continue;
        }
        // Laplace-smoothed estimate keeps σ finite at P1 = 0 or 1.
        double p = (curve.p1[i] * n + 1.0) / (n + 2.0);
        sigma[i] = std::sqrt(p * (1.0 - p) / n);
    }
    return sigma;
}

void check_curve(const RabiMeasurement &curve) {
    if (curve.times.size() != curve.p1.size()) {
        throw DomainError("measurement times and probabilities differ in length");
    }
    if (curve.times.size() < 10) {
        throw DomainError("Rabi fit needs at least 10 points");
    }
    auto [lo, hi] = std::minmax_element(curve.p1.begin(), curve.p1.end());
    if (*hi - *lo < 0.05) {
        throw fitkit::FitError("Rabi curve has no contrast; the fit cannot converge");
    }
}

}  // namespace

NbarFit fit_nbar(const RabiMeasurement &curve, const DriveParams &drive_guess, const RamanGeometry &geometry,
                 std::span<const ModeSpec> modes, std::span<const double> nbar_guess) {
    check_curve(curve);
    if (modes.empty() || modes.size() > 2) {
        throw DomainError("fit_nbar: need one or two modes");
    }
    if (geometry.configuration == BeamConfiguration::co_propagating) {
        throw fitkit::FitError("fit_nbar: co-propagating flops carry no phonon information");
    }
    std::vector<double> etas;
    for (const auto &mode : modes) {
        etas.push_back(mode.lamb_dicke);
    }
    const std::size_t n_modes = modes.size();

    fitkit::FitProblem problem;
    problem.y = curve.p1;
    problem.sigma = binomial_sigmas(curve);
    problem.scale_covariance = curve.shots.empty();
    problem.initial.push_back(drive_guess.rabi);
    problem.lower.push_back(0.2 * drive_guess.rabi);
    problem.upper.push_back(5.0 * drive_guess.rabi);
    problem.typical.push_back(drive_guess.rabi);
    problem.names.push_back("rabi");
    for (std::size_t k = 0; k < n_modes; k++) {
        double guess = k < nbar_guess.size() ? nbar_guess[k] : 5.0;
        problem.initial.push_back(std::log(std::max(guess, 0.0) + kLogEpsilon));
        problem.lower.push_back(std::log(kLogEpsilon));
        problem.upper.push_back(std::log(500.0));
        problem.typical.push_back(1.0);
        problem.names.push_back("log_nbar" + std::to_string(k + 1));
    }
    std::vector<double> times = curve.times;
    double detuning = drive_guess.detuning;
    problem.model = [times, etas, detuning, n_modes](std::span<const double> p) {
        std::vector<PhononDistribution> dists;
        for (std::size_t k = 0; k < n_modes; k++) {
            dists.push_back(fit_thermal(std::exp(p[1 + k]) - kLogEpsilon));
        }
        return carrier_curve(times, DriveParams(p[0], 0.0, detuning), etas, dists);
    };

    auto fit = fitkit::lm_fit(problem);

    NbarFit out{};
    out.rabi = fit.params[0];
    out.rabi_error = fit.errors[0];
    out.chi2_reduced = fit.chi2_reduced;
    // Delta method from log(n̄ + ε) to n̄.
    std::vector<double> grad(n_modes);
    for (std::size_t k = 0; k < n_modes; k++) {
        double value = std::exp(fit.params[1 + k]);
        grad[k] = value;
        out.nbar.push_back(std::max(0.0, value - kLogEpsilon));
        out.nbar_error.push_back(value * fit.errors[1 + k]);
        if (fit.params[1 + k] <= problem.lower[1 + k] + 1e-9) {
            out.warnings.push_back("nbar of mode " + to_string(modes[k].mode_id) + " clamped at zero");
        }
    }
    out.nbar_sum = 0;
    double var = 0;
    for (std::size_t a = 0; a < n_modes; a++) {
        out.nbar_sum += out.nbar[a];
        for (std::size_t b = 0; b < n_modes; b++) {
            var += grad[a] * grad[b] * fit.covariance[1 + a][1 + b];
        }
    }
    out.nbar_sum_error = std::sqrt(std::max(0.0, var));
    if (n_modes == 2) {
        double rel = std::abs(etas[0] - etas[1]) / std::max(etas[0], etas[1]);
        double corr = fitkit::correlation(fit, 1, 2);
        if (rel < 0.2 || std::abs(corr) > 0.9) {
            // Near-singular split: take Ω and sum errors from a refit with
            // the fitted split held fixed.
            double sum = out.nbar[0] + out.nbar[1];
            double share = sum > 0 ? out.nbar[0] / sum : 0.5;
            fitkit::FitProblem reduced;
            reduced.y = problem.y;
            reduced.sigma = problem.sigma;
            reduced.scale_covariance = problem.scale_covariance;
            reduced.initial = {fit.params[0], std::log(sum + kLogEpsilon)};
            reduced.lower = {problem.lower[0], std::log(kLogEpsilon)};
            reduced.upper = {problem.upper[0], std::log(1000.0)};
            reduced.typical = {problem.typical[0], 1.0};
            reduced.names = {"rabi", "log_nbar_sum"};
            reduced.model = [times, etas, detuning, share](std::span<const double> p) {
                double total = std::max(0.0, std::exp(p[1]) - kLogEpsilon);
                std::vector<PhononDistribution> dists{fit_thermal(share * total), fit_thermal((1 - share) * total)};
                return carrier_curve(times, DriveParams(p[0], 0.0, detuning), etas, dists);
            };
            auto refit = fitkit::lm_fit(reduced);
            double value = std::exp(refit.params[1]);
            out.rabi = refit.params[0];
            out.rabi_error = refit.errors[0];
            out.nbar_sum = std::max(0.0, value - kLogEpsilon);
            out.nbar_sum_error = value * refit.errors[1];
            out.nbar = {share * out.nbar_sum, (1 - share) * out.nbar_sum};
            out.warnings.push_back(
                "per-mode phonon numbers weakly identifiable from carrier flops (eta ratio difference " +
                std::to_string(rel) + ", correlation " + std::to_string(corr) + "); the sum is well determined");
        }
    }
    return out;
}

ContrastFit fit_carrier_contrast(const RabiMeasurement &curve, double rabi_guess) {
    check_curve(curve);
    fitkit::FitProblem problem;
    problem.y = curve.p1;
    problem.sigma = binomial_sigmas(curve);
    problem.scale_covariance = curve.shots.empty();
    problem.initial = {1.0, rabi_guess};
    problem.lower = {0.0, 0.2 * rabi_guess};
    problem.upper = {1.0, 5.0 * rabi_guess};
    problem.typical = {1.0, rabi_guess};
    problem.names = {"contrast", "rabi"};
    problem.model = fitkit::pointwise(
        [](std::span<const double> p, double t) {
            double s = std::sin(std::numbers::pi * p[1] * t);
            return p[0] * s * s;
        },
        curve.times);
    auto fit = fitkit::lm_fit(problem);
    return {fit.params[0], fit.params[1], fit.chi2_reduced};
}

namespace {

// Excitation of one transition with the probe detuned by `offset` from it.
double transition_probability(Transition transition, std::size_t mode_index, const DriveParams &probe, double offset,
                              std::span<const ModeSpec> modes, std::span<const PhononDistribution> phonons) {
    int s = transition == Transition::carrier ? 0 : (transition == Transition::red_sideband ? -1 : 1);
    const auto &addressed = phonons[mode_index];
    double p_total = 0;
    // At most one spectator mode (≤ 2 modes in total).
    std::size_t other = modes.size() == 2 ? 1 - mode_index : mode_index;
    for (std::size_t n = 0; n < addressed.size(); n++) {
        double w = addressed[n];
        if (w == 0) {
            continue;
        }
        double coupling = matrix_element(static_cast<int>(n), 0, modes[mode_index].lamb_dicke);
        if (s != 0) {
            if (static_cast<int>(n) + s < 0) {
                continue;
            }
            coupling = matrix_element(static_cast<int>(n), s, modes[mode_index].lamb_dicke);
        }
        if (other == mode_index) {
            p_total += w * rabi_probability(probe.rabi * coupling, offset, probe.duration);
            continue;
        }
        for (std::size_t m = 0; m < phonons[other].size(); m++) {
            double wm = phonons[other][m];
            if (wm == 0) {
                continue;
            }
            double rabi = probe.rabi * coupling * matrix_element(static_cast<int>(m), 0, modes[other].lamb_dicke);
            p_total += w * wm * rabi_probability(rabi, offset, probe.duration);
        }
    }
    return clamp_probability(p_total);
}

void check_modes(std::span<const ModeSpec> modes, std::span<const PhononDistribution> phonons) {
    if (modes.empty() || modes.size() > 2 || modes.size() != phonons.size()) {
        throw DomainError("sideband spectrum needs one or two modes with matching distributions");
    }
}

}  // namespace

double sideband_probability(Transition transition, std::size_t mode_index, const DriveParams &probe,
                            std::span<const ModeSpec> modes, std::span<const PhononDistribution> phonons) {
    check_modes(modes, phonons);
    if (mode_index >= modes.size()) {
        throw DomainError("sideband_probability: mode index out of range");
    }
    return transition_probability(transition, mode_index, probe, probe.detuning, modes, phonons);
}

std::vector<double> sideband_spectrum(std::span<const double> detunings, const DriveParams &probe,
                                      std::span<const ModeSpec> modes, std::span<const PhononDistribution> phonons) {
    check_modes(modes, phonons);
    std::vector<double> out;
    out.reserve(detunings.size());
    for (double delta : detunings) {
        Transition best = Transition::carrier;
        std::size_t best_mode = 0;
        double best_offset = delta;
        for (std::size_t k = 0; k < modes.size(); k++) {
            for (auto [tr, center] : {std::pair{Transition::red_sideband, -modes[k].frequency},
                                      std::pair{Transition::blue_sideband, modes[k].frequency}}) {
                if (std::abs(delta - center) < std::abs(best_offset)) {
                    best = tr;
                    best_mode = k;
                    best_offset = delta - center;
                }
            }
        }
        out.push_back(transition_probability(best, best_mode, probe, best_offset, modes, phonons));
    }
    return out;
}

}  // namespace trapsim::raman
