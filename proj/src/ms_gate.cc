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

#include "trapsim/ms_gate.h"

#include <algorithm>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <complex>
#include <numbers>

namespace trapsim::ms {

namespace odeint = boost::numeric::odeint;
using cplx = std::complex<double>;

ModeSpec default_tilt_mode() {
    double f = 2.11e6;
    double eta = lamb_dicke(IonSpecies::yb171(), RamanGeometry::counter_355nm(), f, std::numbers::pi / 4);
    return ModeSpec(f, ModeId::tilt, eta / std::sqrt(2.0));
}

void MSGateParams::validate() const {
    if (!(rabi >= 0) || !std::isfinite(rabi)) throw DomainError("MS gate: rabi must be finite and >= 0");
    if (!std::isfinite(detuning)) throw DomainError("MS gate: detuning must be finite");
    if (!(initial_nbar >= 0) || !std::isfinite(initial_nbar)) {
        throw DomainError("MS gate: initial_nbar must be finite and >= 0");
    }
    if (!(heating_rate >= 0) || !std::isfinite(heating_rate)) {
        throw DomainError("MS gate: heating_rate must be finite and >= 0");
    }
    if (!(gate_duration >= 0) || !std::isfinite(gate_duration)) {
        throw DomainError("MS gate: gate_duration must be finite and >= 0");
    }
    if (n_max != 0 && static_cast<double>(n_max) < 10 * initial_nbar + 20) {
        throw DomainError("MS gate: n_max = " + std::to_string(n_max) + " is below 10*nbar + 20");
    }
}

double MSGateParams::coupling() const {
    return 0.5 * mode.lamb_dicke * constants::two_pi * rabi;
}

std::size_t MSGateParams::effective_n_max(double t_end) const {
    if (n_max != 0) return n_max;
    double g = coupling();
    double delta = constants::two_pi * std::abs(detuning);
    double alpha_max = g * t_end;
    if (delta > 0) alpha_max = std::min(alpha_max, 2 * g / delta);
    double coherent = 4 * alpha_max * alpha_max;  // |Sα|² with |S| = 2
    return static_cast<std::size_t>(std::ceil(10 * (initial_nbar + heating_rate * t_end + coherent) + 20));
}

ConfusionMatrix::ConfusionMatrix(double p10, double p01) : p10(p10), p01(p01) {
    if (!(p10 >= 0 && p10 <= 1) || !(p01 >= 0 && p01 <= 1)) {
        throw DomainError("confusion probabilities must lie in [0, 1]");
    }
}

namespace {

constexpr std::array<int, 3> kSpin = {-2, 0, 2};
constexpr double kTruncationLimit = 1e-5;
constexpr double kNegativeTolerance = 1e-9;

// Degeneracy of each S_x eigenvalue in the two-qubit space: |--⟩, |+-⟩ & |-+⟩, |++⟩.
int spin_index(int s1, int s2) {
    return (s1 + s2) / 2 + 1;
}

void check_times(std::span<const double> times) {
    for (std::size_t i = 0; i < times.size(); i++) {
        if (!(times[i] >= 0) || !std::isfinite(times[i])) throw DomainError("times must be finite and >= 0");
        if (i > 0 && times[i] < times[i - 1]) throw DomainError("times must be non-decreasing");
    }
}

// Populations of |q1 q2⟩ from m(S, S') = tr_motion of the (S, S') block,
// starting from |00⟩ = ½ Σ |s1 s2⟩ in the σx eigenbasis.
std::array<double, 4> spin_populations(const std::array<std::array<cplx, 3>, 3> &m) {
    std::array<double, 4> out{};
    for (int q = 0; q < 4; q++) {
        int q1 = q >> 1, q2 = q & 1;
        cplx acc = 0;
        for (int a1 : {-1, 1}) {
            for (int a2 : {-1, 1}) {
                double ca = 0.5 * (q1 ? a1 : 1) * (q2 ? a2 : 1);
                for (int b1 : {-1, 1}) {
                    for (int b2 : {-1, 1}) {
                        double cb = 0.5 * (q1 ? b1 : 1) * (q2 ? b2 : 1);
                        acc += ca * cb * 0.25 * m[spin_index(a1, a2)][spin_index(b1, b2)];
                    }
                }
            }
        }
        out[q] = acc.real();
    }
    return out;
}

void push_populations(PopulationCurve &curve, double t, std::array<double, 4> p) {
    double worst = 0;
    for (double &v : p) {
        worst = std::min(worst, v);
        v = std::clamp(v, 0.0, 1.0);
    }
    if (worst < -kNegativeTolerance) {
        curve.warnings.push_back("population " + std::to_string(worst) + " clamped to 0 at t = " + std::to_string(t));
    }
    curve.times.push_back(t);
    curve.p00.push_back(p[0]);
    curve.p01.push_back(p[1]);
    curve.p10.push_back(p[2]);
    curve.p11.push_back(p[3]);
}

// Motional blocks M_{SS'}, each evolving as
// dM/dt = -i g (S X M - S' M X) + ṅ (D[a] + D[a†]) M, X = a e^{-iδt} + a† e^{iδt}.
// Hermiticity (M_{S'S} = M_{SS'}†) and motional parity (a -> -a maps
// M_{SS'} to M_{-S,-S'} with the same trace) leave three blocks to evolve:
// (0, 2), (-2, 2) and (2, 2). M_{00} only heats and keeps unit trace.
struct BlockSystem {
    std::size_t dim;
    double g;
    double delta;
    double heat;
    std::vector<std::pair<int, int>> pairs;
    std::vector<double> sq;  // sqrt(n)
    std::vector<double> dn;  // diag(a†a + a a†), truncated

    BlockSystem(std::size_t n_max, double g, double delta, double heat) : dim(n_max + 1), g(g), delta(delta), heat(heat) {
        pairs = {{1, 2}, {0, 2}, {2, 2}};
        for (std::size_t n = 0; n <= dim; n++) sq.push_back(std::sqrt(static_cast<double>(n)));
        for (std::size_t n = 0; n < dim; n++) dn.push_back(static_cast<double>(n) + (n + 1 < dim ? n + 1.0 : 0.0));
    }

    std::size_t block_size() const { return dim * dim; }

    void operator()(const std::vector<cplx> &x, std::vector<cplx> &dx, double t) const {
        cplx em = std::polar(1.0, -delta * t);
        cplx ep = std::conj(em);
        std::size_t bs = block_size();
        std::size_t top = dim - 1;
        for (std::size_t b = 0; b < pairs.size(); b++) {
            const cplx *m = x.data() + b * bs;
            cplx *d = dx.data() + b * bs;
            double s = kSpin[pairs[b].first];
            double sp = kSpin[pairs[b].second];
            auto at = [&](std::size_t n, std::size_t k) { return m[n * dim + k]; };
            for (std::size_t n = 0; n < dim; n++) {
                for (std::size_t k = 0; k < dim; k++) {
                    cplx xm = 0, mx = 0;
                    if (n < top) xm += em * sq[n + 1] * at(n + 1, k);
                    if (n > 0) xm += ep * sq[n] * at(n - 1, k);
                    if (k > 0) mx += em * sq[k] * at(n, k - 1);
                    if (k < top) mx += ep * sq[k + 1] * at(n, k + 1);
                    cplx v = cplx(0, -g) * (s * xm - sp * mx);
                    if (heat > 0) {
                        cplx diss = -0.5 * (dn[n] + dn[k]) * at(n, k);
                        if (n < top && k < top) diss += sq[n + 1] * sq[k + 1] * at(n + 1, k + 1);
                        if (n > 0 && k > 0) diss += sq[n] * sq[k] * at(n - 1, k - 1);
                        v += heat * diss;
                    }
                    d[n * dim + k] = v;
                }
            }
        }
    }
};

}  // namespace

PopulationCurve propagate(const MSGateParams &params, std::span<const double> times) {
    params.validate();
    check_times(times);
    PopulationCurve curve;
    if (times.empty()) return curve;
    std::size_t n_max = params.effective_n_max(times.back());
    PhononDistribution thermal = thermal_pmf(params.initial_nbar, n_max);

    BlockSystem system(n_max, params.coupling(), constants::two_pi * params.detuning, params.heating_rate);
    std::size_t bs = system.block_size();
    std::vector<cplx> state(bs * system.pairs.size(), 0.0);
    for (std::size_t b = 0; b < system.pairs.size(); b++) {
        for (std::size_t n = 0; n <= n_max; n++) state[b * bs + n * system.dim + n] = thermal[n];
    }

    double worst_tail = 0;
    double worst_trace = 0;
    auto observe = [&](const std::vector<cplx> &x, double t) {
        std::array<cplx, 3> tr{};
        for (std::size_t b = 0; b < 3; b++) {
            for (std::size_t n = 0; n <= n_max; n++) tr[b] += x[b * bs + n * system.dim + n];
        }
        worst_tail = std::max(worst_tail, x[3 * bs - 1].real());
        worst_trace = std::max(worst_trace, std::abs(tr[2] - 1.0));
        // Rows/columns S = -2, 0, 2.
        std::array<std::array<cplx, 3>, 3> m{};
        m[1][2] = m[1][0] = tr[0];
        m[2][1] = m[0][1] = std::conj(tr[0]);
        m[0][2] = m[2][0] = tr[1];
        m[2][2] = m[0][0] = tr[2];
        m[1][1] = 1.0;
        push_populations(curve, t, spin_populations(m));
    };

    std::vector<double> grid(times.begin(), times.end());
    bool prepended = grid.front() > 0;
    if (prepended) grid.insert(grid.begin(), 0.0);
    if (grid.back() == 0) {
        for (std::size_t i = 0; i < times.size(); i++) observe(state, 0.0);
    } else {
        double rate = system.g * 2 * std::sqrt(n_max + 1.0) + std::abs(system.delta) + params.heating_rate * 2 * (n_max + 1);
        double dt0 = std::min(1e-3 / std::max(rate, 1.0), grid.back());
        auto stepper = odeint::make_dense_output(1e-10, 1e-10, odeint::runge_kutta_dopri5<std::vector<cplx>>());
        std::size_t seen = 0;
        try {
            odeint::integrate_times(stepper, std::ref(system), state, grid.begin(), grid.end(), dt0,
                                    [&](const std::vector<cplx> &x, double t) {
                                        if (!(prepended && seen++ == 0)) observe(x, t);
                                    });
        } catch (const std::exception &e) {
            throw IntegrationError(std::string("MS propagation failed: ") + e.what());
        }
        for (double v : curve.p00) {
            if (!std::isfinite(v)) throw IntegrationError("MS propagation produced non-finite populations");
        }
    }
    if (worst_tail > kTruncationLimit) {
        throw TruncationError("MS gate: population " + std::to_string(worst_tail) + " reached n_max = " +
                                  std::to_string(n_max) + "; increase n_max to at least " + std::to_string(2 * n_max),
                              2 * n_max);
    }
    if (worst_trace > 1e-8) {
        curve.warnings.push_back("trace drift " + std::to_string(worst_trace));
    }
    return curve;
}

PopulationCurve ms_closed_form(const MSGateParams &params, std::span<const double> times) {
    params.validate();
    check_times(times);
    if (params.heating_rate != 0) {
        throw DomainError("ms_closed_form requires heating_rate = 0");
    }
    double g = params.coupling();
    double delta = constants::two_pi * params.detuning;
    double nb = params.initial_nbar;
    PopulationCurve curve;
    for (double t : times) {
        double x = delta * t;
        cplx alpha;
        double phi;
        if (delta == 0) {
            alpha = cplx(0, -g * t);
            phi = 0;
        } else {
            double h = std::sin(0.5 * x);
            alpha = (g / delta) * cplx(2 * h * h, -std::sin(x));
            // δt - sin δt loses digits for small δt.
            double cubic = std::abs(x) < 1e-3 ? x * x * x / 6 - std::pow(x, 5) / 120 : x - std::sin(x);
            phi = (g / delta) * (g / delta) * cubic;
        }
        double a2 = std::norm(alpha);
        std::array<std::array<cplx, 3>, 3> m{};
        for (int i = 0; i < 3; i++) {
            for (int j = 0; j < 3; j++) {
                double s = kSpin[i], sp = kSpin[j];
                m[i][j] = std::polar(std::exp(-(s - sp) * (s - sp) * a2 * (nb + 0.5)), phi * (s * s - sp * sp));
            }
        }
        push_populations(curve, t, spin_populations(m));
    }
    return curve;
}

PopulationCurve apply_confusion(const PopulationCurve &curve, const ConfusionMatrix &cm) {
    // c[read][true]
    double c[2][2] = {{1 - cm.p10, cm.p01}, {cm.p10, 1 - cm.p01}};
    PopulationCurve out;
    out.times = curve.times;
    out.warnings = curve.warnings;
    for (std::size_t i = 0; i < curve.size(); i++) {
        auto p = curve.at(i);
        std::array<double, 4> r{};
        for (int read = 0; read < 4; read++) {
            for (int truth = 0; truth < 4; truth++) {
                r[read] += c[read >> 1][truth >> 1] * c[read & 1][truth & 1] * p[truth];
            }
        }
        out.p00.push_back(r[0]);
        out.p01.push_back(r[1]);
        out.p10.push_back(r[2]);
        out.p11.push_back(r[3]);
    }
    return out;
}

MSMeasurement sample_curve(const PopulationCurve &curve, std::int64_t shots, std::uint64_t seed) {
    if (shots < 1) throw DomainError("shots must be positive");
    MSMeasurement data;
    data.times = curve.times;
    data.shots = static_cast<double>(shots);
    fitkit::Rng rng(seed);
    for (std::size_t i = 0; i < curve.size(); i++) {
        auto p = curve.at(i);
        double total = p[0] + p[1] + p[2] + p[3];
        for (double &v : p) v /= total;
        auto counts = fitkit::sample_multinomial(rng, shots, p);
        std::array<double, 4> freq{};
        for (int k = 0; k < 4; k++) freq[k] = static_cast<double>(counts[k]) / static_cast<double>(shots);
        data.populations.push_back(freq);
    }
    return data;
}

MSFit fit_ms(const MSMeasurement &data, const MSGateParams &guess, const ConfusionMatrix &confusion_guess) {
    guess.validate();
    if (data.times.size() < 10 || data.populations.size() != data.times.size()) {
        throw DomainError("fit_ms needs at least 10 time points with four populations each");
    }
    check_times(data.times);
    if (guess.detuning == 0 || guess.rabi <= 0) {
        throw DomainError("fit_ms needs a non-zero detuning and positive Rabi frequency guess");
    }
    double contrast = 0;
    for (int k = 0; k < 4; k++) {
        double lo = 1, hi = 0;
        for (const auto &p : data.populations) {
            lo = std::min(lo, p[k]);
            hi = std::max(hi, p[k]);
        }
        contrast = std::max(contrast, hi - lo);
    }
    if (contrast < 0.02) {
        throw fitkit::FitError("fit_ms: populations show no oscillation (contrast " + std::to_string(contrast) + ")");
    }

    // Fixed Fock cutoff for the whole fit so the model stays smooth.
    MSGateParams wide = guess;
    wide.initial_nbar = std::max(3 * guess.initial_nbar, guess.initial_nbar + 1);
    wide.rabi = 1.5 * guess.rabi;
    std::size_t n_max = wide.effective_n_max(data.times.back());
    double nbar_max = (static_cast<double>(n_max) - 20) / 10;

    fitkit::FitProblem problem;
    problem.names = {"rabi", "detuning", "nbar", "p10", "p01"};
    std::vector<double> times = data.times;
    problem.model = [guess, n_max, times](std::span<const double> p) {
        MSGateParams params = guess;
        params.rabi = p[0];
        params.detuning = p[1];
        params.initial_nbar = p[2];
        params.n_max = n_max;
        PopulationCurve curve = apply_confusion(propagate(params, times), ConfusionMatrix(p[3], p[4]));
        std::vector<double> out;
        out.reserve(4 * curve.size());
        for (std::size_t i = 0; i < curve.size(); i++) {
            for (double v : curve.at(i)) out.push_back(v);
        }
        return out;
    };
    bool weighted = data.shots > 0;
    for (const auto &p : data.populations) {
        for (double v : p) {
            problem.y.push_back(v);
            if (weighted) {
                // Add-one smoothing keeps σ finite at 0 and 1.
                double k = v * data.shots;
                double q = (k + 1) / (data.shots + 2);
                problem.sigma.push_back(std::sqrt(q * (1 - q) / data.shots));
            } else {
                problem.sigma.push_back(1.0);
            }
        }
    }
    double d0 = guess.detuning;
    problem.initial = {guess.rabi, d0, std::min(guess.initial_nbar, nbar_max), confusion_guess.p10, confusion_guess.p01};
    problem.lower = {0.05 * guess.rabi, d0 > 0 ? 0.05 * d0 : 20 * d0, 0.0, 0.0, 0.0};
    problem.upper = {20 * guess.rabi, d0 > 0 ? 20 * d0 : 0.05 * d0, nbar_max, 0.5, 0.5};
    problem.typical = {guess.rabi, std::abs(d0), 0.1, 0.01, 0.01};
    problem.scale_covariance = !weighted;
    problem.max_iterations = 100;

    fitkit::FitResult result = fitkit::lm_fit(problem);
    MSFit fit{guess, ConfusionMatrix(result.params[3], result.params[4]), problem.names, result.covariance,
              result.errors, result.chi2_reduced, {}};
    fit.params.rabi = result.params[0];
    fit.params.detuning = result.params[1];
    fit.params.initial_nbar = result.params[2];
    fit.params.n_max = n_max;
    for (std::size_t i = 0; i < result.params.size(); i++) {
        double span = problem.upper[i] - problem.lower[i];
        if (result.params[i] - problem.lower[i] < 1e-9 * span || problem.upper[i] - result.params[i] < 1e-9 * span) {
            fit.warnings.push_back(problem.names[i] + " is at its bound");
        }
    }
    return fit;
}

}  // namespace trapsim::ms
