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

#include "trapsim/core_types.h"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace trapsim {

IonSpecies::IonSpecies(double mass, double charge, std::string label)
    : mass(mass), charge(charge), label(std::move(label)) {
    if (!(mass > 0)) {
        throw DomainError("ion mass must be positive");
    }
    if (charge == 0 || !std::isfinite(charge)) {
        throw DomainError("ion charge must be non-zero");
    }
}

IonSpecies IonSpecies::yb171() {
    return IonSpecies(170.9363258 * constants::atomic_mass_unit - constants::electron_mass,
                      constants::elementary_charge, "171Yb+");
}

RamanGeometry::RamanGeometry(double wavelength, BeamConfiguration configuration,
                             std::vector<double> projection_angles, double normal_angle)
    : wavelength(wavelength),
      configuration(configuration),
      projection_angles(std::move(projection_angles)),
      normal_angle(normal_angle) {
    if (!(wavelength > 0)) {
        throw DomainError("wavelength must be positive");
    }
}

double RamanGeometry::delta_k() const {
    if (configuration == BeamConfiguration::co_propagating) {
        return 0.0;
    }
    return 2.0 * constants::two_pi / wavelength;
}

double RamanGeometry::delta_k_normal() const {
    return std::abs(delta_k() * std::cos(normal_angle));
}

RamanGeometry RamanGeometry::counter_355nm() {
    return RamanGeometry(355e-9, BeamConfiguration::counter_propagating);
}

RamanGeometry RamanGeometry::co_355nm() {
    return RamanGeometry(355e-9, BeamConfiguration::co_propagating);
}

std::string to_string(ModeId id) {
    switch (id) {
        case ModeId::r1:
            return "r1";
        case ModeId::r2:
            return "r2";
        case ModeId::com:
            return "com";
        case ModeId::tilt:
            return "tilt";
        case ModeId::axial:
            return "axial";
    }
    return "?";
}

ModeId mode_id_from_string(const std::string &name) {
    for (ModeId id : {ModeId::r1, ModeId::r2, ModeId::com, ModeId::tilt, ModeId::axial}) {
        if (to_string(id) == name) {
            return id;
        }
    }
    throw DomainError("unknown mode id '" + name + "'");
}

ModeSpec::ModeSpec(double frequency, ModeId mode_id, double lamb_dicke)
    : frequency(frequency), mode_id(mode_id), lamb_dicke(lamb_dicke) {
    if (!(frequency > 0)) {
        throw DomainError("mode frequency must be positive");
    }
    if (!(lamb_dicke >= 0)) {
        throw DomainError("Lamb-Dicke parameter must be non-negative");
    }
}

PhononDistribution::PhononDistribution(std::vector<double> populations) : populations_(std::move(populations)) {
    if (populations_.empty()) {
        throw DomainError("phonon distribution needs at least one level");
    }
    double sum = 0;
    for (double p : populations_) {
        if (!(p >= 0) || !std::isfinite(p)) {
            throw DomainError("phonon populations must be finite and non-negative");
        }
        sum += p;
    }
    if (!(sum > 0)) {
        throw DomainError("phonon distribution has zero total population");
    }
    for (double &p : populations_) {
        p = std::min(1.0, p / sum);
    }
}

PhononDistribution PhononDistribution::ground(std::size_t n_max) {
    return fock(0, n_max);
}

PhononDistribution PhononDistribution::fock(std::size_t n, std::size_t n_max) {
    std::vector<double> p(std::max(n, n_max) + 1, 0.0);
    p[n] = 1.0;
    return PhononDistribution(std::move(p));
}

double PhononDistribution::mean() const {
    double m = 0;
    for (std::size_t n = 0; n < populations_.size(); n++) {
        m += static_cast<double>(n) * populations_[n];
    }
    return m;
}

double PhononDistribution::second_moment() const {
    double m = 0;
    for (std::size_t n = 0; n < populations_.size(); n++) {
        m += static_cast<double>(n * n) * populations_[n];
    }
    return m;
}

double PhononDistribution::total() const {
    return std::accumulate(populations_.begin(), populations_.end(), 0.0);
}

void PhononDistribution::check_truncation(double threshold) const {
    if (populations_.size() > 1 && tail() >= threshold) {
        // Suggest a cutoff for a thermal state of the same mean.
        throw TruncationError("phonon population at n_max = " + std::to_string(n_max()) + " is " +
                                  std::to_string(tail()) + ", above the accepted tail " + std::to_string(threshold),
                              std::max(2 * n_max(), default_n_max(mean())));
    }
}

PhononDistribution PhononDistribution::resized(std::size_t n_max) const {
    std::vector<double> p(populations_.begin(), populations_.begin() + std::min(populations_.size(), n_max + 1));
    p.resize(n_max + 1, 0.0);
    return PhononDistribution(std::move(p));
}

DriveParams::DriveParams(double rabi, double duration, double detuning)
    : rabi(rabi), duration(duration), detuning(detuning) {
    if (!(rabi >= 0)) {
        throw DomainError("Rabi frequency must be non-negative");
    }
    if (!(duration >= 0)) {
        throw DomainError("pulse duration must be non-negative");
    }
}

double zero_point_spread(const IonSpecies &species, double mode_frequency) {
    if (!(mode_frequency > 0)) {
        throw DomainError("mode frequency must be positive");
    }
    double omega = constants::two_pi * mode_frequency;
    return std::sqrt(constants::hbar / (2.0 * species.mass * omega));
}

double lamb_dicke(const IonSpecies &species, const RamanGeometry &geometry, double mode_frequency,
                  double projection_angle) {
    double x0 = zero_point_spread(species, mode_frequency);
    return std::abs(geometry.delta_k() * std::cos(projection_angle)) * x0;
}

std::size_t default_n_max(double nbar) {
    if (!(nbar >= 0)) {
        throw DomainError("mean phonon number must be non-negative");
    }
    std::size_t n = std::max<std::size_t>(30, static_cast<std::size_t>(std::ceil(10.0 * nbar)));
    if (nbar > 0) {
        // Smallest level whose thermal weight drops below a tenth of the tail threshold.
        double target = 0.1 * PhononDistribution::kTailThreshold * (nbar + 1.0);
        double ratio = std::log(nbar / (nbar + 1.0));
        n = std::max(n, static_cast<std::size_t>(std::ceil(std::log(target) / ratio)));
    }
    return n;
}

PhononDistribution thermal_pmf(double nbar, std::size_t n_max) {
    if (!(nbar >= 0) || !std::isfinite(nbar)) {
        throw DomainError("mean phonon number must be non-negative");
    }
    if (n_max < 1) {
        throw DomainError("n_max must be at least 1");
    }
    std::vector<double> p(n_max + 1);
    double ratio = nbar / (nbar + 1.0);
    double term = 1.0 / (nbar + 1.0);
    for (std::size_t n = 0; n <= n_max; n++) {
        p[n] = term;
        term *= ratio;
    }
    PhononDistribution dist(std::move(p));
    dist.check_truncation();
    return dist;
}

PhononDistribution thermal_pmf(double nbar) {
    return thermal_pmf(nbar, default_n_max(nbar));
}

}  // namespace trapsim
