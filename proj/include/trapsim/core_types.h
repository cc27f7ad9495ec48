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

#ifndef TRAPSIM_CORE_TYPES_H
#define TRAPSIM_CORE_TYPES_H

#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace trapsim {

/// CODATA-2018 constants (SI units).
namespace constants {
inline constexpr double hbar = 1.054571817e-34;
inline constexpr double elementary_charge = 1.602176634e-19;
inline constexpr double atomic_mass_unit = 1.660539067e-27;
inline constexpr double electron_mass = 9.109383702e-31;
inline constexpr double two_pi = 2.0 * std::numbers::pi;
}  // namespace constants

// Error hierarchy. Every error thrown by the library derives from Error so the
// CLI can map it to a JSON report and exit code 1.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DomainError : Error {
    using Error::Error;
};
/// Adaptive ODE stepper gave up or produced non-finite values.
struct IntegrationError : Error {
    using Error::Error;
};
/// Thrown when a Fock-space truncation leaves too much population in the tail.
struct TruncationError : Error {
    TruncationError(const std::string &what, std::size_t suggested_n_max)
        : Error(what), suggested_n_max(suggested_n_max) {}
    std::size_t suggested_n_max;
};

struct IonSpecies {
    double mass;    // kg
    double charge;  // C
    std::string label;

    IonSpecies(double mass, double charge, std::string label);

    /// Singly ionized ytterbium-171.
    static IonSpecies yb171();
};

enum class BeamConfiguration { co_propagating, counter_propagating };

/// Raman beam pair. Angles are measured between the wave-vector difference and
/// each radial mode axis; `normal_angle` is measured to the chip normal (y).
struct RamanGeometry {
    double wavelength;  // m
    BeamConfiguration configuration;
    std::vector<double> projection_angles;  // rad, one per radial mode
    double normal_angle = 0.0;

    RamanGeometry(double wavelength, BeamConfiguration configuration,
                  std::vector<double> projection_angles = {std::numbers::pi / 4, std::numbers::pi / 4},
                  double normal_angle = 0.0);

    /// |Δk| in 1/m: zero for co-propagating beams, 4π/λ for counter-propagating.
    double delta_k() const;
    /// Component of Δk along the chip normal.
    double delta_k_normal() const;

    static RamanGeometry counter_355nm();
    static RamanGeometry co_355nm();
};

enum class ModeId { r1, r2, com, tilt, axial };

std::string to_string(ModeId id);
ModeId mode_id_from_string(const std::string &name);

struct ModeSpec {
    double frequency;  // Hz
    ModeId mode_id;
    double lamb_dicke;

    ModeSpec(double frequency, ModeId mode_id, double lamb_dicke);
};

/// Population over Fock states 0..n_max. Normalized on construction.
class PhononDistribution {
   public:
    static constexpr double kSumTolerance = 1e-9;
    static constexpr double kTailThreshold = 1e-6;

    explicit PhononDistribution(std::vector<double> populations);

    static PhononDistribution ground(std::size_t n_max = 1);
    static PhononDistribution fock(std::size_t n, std::size_t n_max);

    std::span<const double> populations() const { return populations_; }
    double operator[](std::size_t n) const { return populations_[n]; }
    std::size_t n_max() const { return populations_.size() - 1; }
    std::size_t size() const { return populations_.size(); }

    double mean() const;
    double second_moment() const;
    double tail() const { return populations_.back(); }
    double total() const;

    /// Throws TruncationError when the last retained level holds more than
    /// the accepted tail mass.
    void check_truncation(double threshold = kTailThreshold) const;

    /// Copy padded with empty levels (or truncated, renormalizing) to n_max.
    PhononDistribution resized(std::size_t n_max) const;

   private:
    std::vector<double> populations_;
};

struct DriveParams {
    double rabi;      // Hz, bare carrier Rabi frequency Ω/2π
    double duration;  // s
    double detuning;  // Hz

    DriveParams(double rabi, double duration, double detuning = 0.0);

    /// Duration of a resonant π pulse at this Rabi frequency.
    double pi_time() const { return 0.5 / rabi; }
};

/// x0 = sqrt(ħ / (2 m ω)).
double zero_point_spread(const IonSpecies &species, double mode_frequency);

/// η = |Δk| cos θ x0.
double lamb_dicke(const IonSpecies &species, const RamanGeometry &geometry, double mode_frequency,
                  double projection_angle);

/// Default Fock cutoff for a thermal state: max(30, ceil(10 n̄)), raised
/// further when needed to keep the thermal tail below a tenth of the
/// accepted tail mass.
std::size_t default_n_max(double nbar);

/// Thermal occupation p(n) = n̄ⁿ/(n̄+1)ⁿ⁺¹ over 0..n_max (renormalized).
/// Throws TruncationError when the truncated tail is not negligible.
PhononDistribution thermal_pmf(double nbar, std::size_t n_max);
PhononDistribution thermal_pmf(double nbar);

}  // namespace trapsim

#endif
