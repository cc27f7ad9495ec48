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

#ifndef TRAPSIM_MICROMOTION_SCAN_H
#define TRAPSIM_MICROMOTION_SCAN_H

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trapsim/core_types.h"
#include "trapsim/fitkit.h"

namespace trapsim::micromotion {

/// Phase-modulation index of the Raman drive for an ion pushed off the RF
/// null by a static field along the chip normal:
/// β = |Δk_y| (q/2) |Δy|, Δy = q_e E / (m ω_y²).
double modulation_index(double e_total_y, const IonSpecies &species, const ModeSpec &normal_mode,
                        const RamanGeometry &geometry, double mathieu_q);

/// Carrier excitation after `pulse` with the drive scaled by J0(β):
/// Σ p(n1) p(n2) sin²(Ω_{n1,n2} J0(β) t / 2).
double carrier_p1(double beta, const DriveParams &pulse, std::span<const double> etas,
                  std::span<const PhononDistribution> phonons);

/// Everything the DC-scan forward model needs besides the field itself.
struct MicromotionSetup {
    IonSpecies species;
    ModeSpec normal_mode;
    double mathieu_q;
    RamanGeometry geometry;
    std::vector<double> etas;
    std::vector<PhononDistribution> phonons;

    /// dβ/d|E| in m/V.
    double modulation_per_field() const;
    /// Resonant π time of the carrier for the ground-state Debye–Waller factor.
    double pi_time(double rabi) const;

    /// 171Yb+, 355 nm counter-propagating beams, radial modes 1.84 / 2.11 MHz
    /// with 45° projections, q of the calibrated default layout, ground state.
    static MicromotionSetup standard();
};

enum class Interpolation { step, linear };

struct FieldSample {
    double t;    // s
    double e_y;  // V/m
};

class StrayFieldTrajectory {
   public:
    StrayFieldTrajectory(std::vector<FieldSample> samples, Interpolation interpolation);

    static StrayFieldTrajectory constant(double e_y);
    /// Charging turn-on model (see charging_field), sampled densely over
    /// [t_start, t_end] with the jump at t_on kept exact.
    static StrayFieldTrajectory charging(double e0, double step, double e_inf, double t_on, double tau,
                                         double t_start, double t_end);

    double at(double t) const;
    std::span<const FieldSample> samples() const { return samples_; }
    Interpolation interpolation() const { return interpolation_; }

   private:
    std::vector<FieldSample> samples_;
    Interpolation interpolation_;
};

/// E0 before t_on; E0 + step + E∞(1 - exp(-(t - t_on)/τ)) from t_on on.
double charging_field(double t, double e0, double step, double e_inf, double t_on, double tau);

enum class ScanAxis { voltage, field };

struct ScanPoint {
    double x;      // ΔV (V) or ΔE (V/m), per the record's axis
    double p1;
    double shots;  // +inf for expected-value records
};

struct ScanRecord {
    double timestamp;  // s
    ScanAxis axis;
    double gain;  // V/m per V, converts a voltage axis to ΔE
    std::vector<ScanPoint> points;

    double delta_e(std::size_t i) const;
    bool expected_value() const;
};

/// One DC scan per entry of `scan_times`. Each grid point gets
/// E_total = E_y(t) + gain·ΔV, the carrier probability, and (unless `shots`
/// is empty) a binomial draw from a per-record stream derived from `seed`.
std::vector<ScanRecord> simulate_scan(const StrayFieldTrajectory &trajectory, std::span<const double> scan_times,
                                      std::span<const double> grid, double gain, const DriveParams &pulse,
                                      const MicromotionSetup &setup, std::optional<std::int64_t> shots,
                                      std::uint64_t seed);

struct OffsetFitResult {
    double delta_e_fit;   // V/m
    double uncertainty;   // V/m
    double modulation_scale;  // m/V
    double contrast;
    double offset;
    double chi2_reduced;
};

/// Fits A sin²((π/2) J0(s (ΔE - ΔE_fit))) + B. Throws FitError for flat
/// (no-contrast) data or non-convergence.
OffsetFitResult fit_offset(const ScanRecord &record);

struct MonitorSample {
    double timestamp;
    double e_y_estimate;  // -ΔE_fit
    double sigma;
    double chi2_reduced;
    std::optional<std::string> error;
};

/// Per-record offset fits; failures are reported inline.
std::vector<MonitorSample> monitor_series(std::span<const ScanRecord> records);

struct ChargingFit {
    double e0, e0_error;
    double step, step_error;
    double e_inf, e_inf_error;
    double tau, tau_error;
    double chi2_reduced;
};

/// Second-stage fit of a monitored series to charging_field with known t_on.
ChargingFit fit_charging(std::span<const MonitorSample> series, double t_on, double tau_guess);

}  // namespace trapsim::micromotion

#endif
