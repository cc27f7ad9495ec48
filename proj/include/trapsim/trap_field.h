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

#ifndef TRAPSIM_TRAP_FIELD_H
#define TRAPSIM_TRAP_FIELD_H

#include <Eigen/Dense>
#include <array>
#include <span>
#include <string>
#include <vector>

#include "trapsim/core_types.h"

namespace trapsim::trap {

// Chip surface is the plane y = 0; x is lateral, z runs along the trap axis.
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

enum class ElectrodeRole { IDC, RF, ODC, GND };

std::string to_string(ElectrodeRole role);
ElectrodeRole electrode_role_from_string(const std::string &name);

/// Rectangular electrode in the chip plane. For RF patches `voltage` is the
/// drive amplitude.
struct ElectrodePatch {
    ElectrodeRole role;
    double x1, x2, z1, z2;  // m
    double voltage;         // V
    std::string name;

    ElectrodePatch(ElectrodeRole role, double x1, double x2, double z1, double z2, double voltage,
                   std::string name = "");
};

struct ElectrodeLayout {
    std::vector<ElectrodePatch> patches;
    double rf_drive_frequency = 20e6;  // Hz

    std::vector<ElectrodePatch> dc_patches() const;
    std::vector<ElectrodePatch> rf_patches() const;
    /// Indices of patches with the given role.
    std::vector<std::size_t> indices(ElectrodeRole role) const;
};

/// Gapless-plane potential of one patch held at its voltage with the rest of
/// the plane grounded: (V/2π) Σ ± arctan(X Z / (y R)) over the four corners.
double patch_potential(const ElectrodePatch &patch, const Vec3 &point);

/// Analytic E = -∇Φ of one patch.
Vec3 patch_field(const ElectrodePatch &patch, const Vec3 &point);

double potential(std::span<const ElectrodePatch> patches, const Vec3 &point);
Vec3 field(std::span<const ElectrodePatch> patches, const Vec3 &point);

/// Field gradient G(i, j) = ∂E_j/∂x_i by central differences of the analytic field.
Mat3 field_gradient(std::span<const ElectrodePatch> patches, const Vec3 &point, double step = 1e-8);

/// Pseudopotential energy q²|E_RF|²/(4 m Ω_RF²) in joules.
double pseudopotential(const ElectrodeLayout &layout, const IonSpecies &species, const Vec3 &point);

/// Total potential energy: pseudopotential plus q Φ_DC.
double total_potential_energy(const ElectrodeLayout &layout, const IonSpecies &species, const Vec3 &point);

struct SearchBox {
    double x_min = -150e-6, x_max = 150e-6;
    double y_min = 10e-6, y_max = 400e-6;
    double z = 0.0;
    int grid = 41;
};

struct TrapOperatingPoint {
    double rf_drive_frequency;  // Hz
    double rf_amplitude;        // V
    std::vector<double> dc_voltages;
    Vec3 rf_null;
    Vec3 ion_position;
    std::array<double, 3> secular_frequencies;  // Hz, ascending
    std::array<Vec3, 3> principal_axes;
    std::array<double, 2> radial_frequencies;  // Hz, ascending
    std::array<Vec3, 2> radial_axes;
    std::array<double, 2> pseudo_frequencies;  // RF-only curvature along the radial axes
    std::array<double, 2> mathieu_q;           // 2√2 ω_pseudo / Ω_RF
    double axial_frequency;
    double ion_height;

    /// Radial frequency whose axis is closest to the chip normal.
    double normal_frequency() const;
    /// Mathieu q along the radial axis closest to the chip normal.
    double normal_mathieu_q() const;
};

struct SearchError : Error {
    using Error::Error;
};
struct InstabilityError : Error {
    using Error::Error;
};

/// Locates the RF null (grid search then Newton on E_RF = 0), the equilibrium
/// of the total potential (Newton on ∇U, 1e-12 m step tolerance), and the
/// secular frequencies from the Hessian there.
TrapOperatingPoint rf_null_and_frequencies(const ElectrodeLayout &layout, const IonSpecies &species,
                                           const SearchBox &box = {});

struct CompensationGain {
    Vec3 field_per_volt;  // V/m per V
    double magnitude;
    Vec3 direction;
};

/// Field produced at `at` by applying +1 V to every probe patch (all other
/// electrodes grounded). Throws DomainError for zero gain.
CompensationGain compensation_gain(const ElectrodeLayout &layout, std::span<const std::size_t> probe_patches,
                                   const Vec3 &at);

/// Δy = q E_y / (m ω_y²).
double displacement_from_field(double e_y, const IonSpecies &species, const ModeSpec &radial_mode);

struct LayoutDimensions {
    double slot_half_width;  // m, grounded strip between the IDC electrodes
    double idc_width;
    double rf_width;
    double odc_width;
    double dc_half_length;     // IDC extent along z
    double rf_half_length;     // RF extent along z
    double odc_center_half_length;
    double odc_endcap_length;
};

struct LayoutVoltages {
    double rf_amplitude;
    double idc;
    double odc_center;
    double odc_endcap;
};

/// Symmetric five-wire layout: slot | IDC | RF | ODC (segmented along z) on
/// both sides of x = 0.
ElectrodeLayout build_symmetric_layout(const LayoutDimensions &dims, const LayoutVoltages &volts,
                                       double rf_drive_frequency);

/// Calibrated stand-in for the experimental chip: ion height 100 µm and
/// radial modes 1.84 / 2.11 MHz for 171Yb+ at a 20 MHz drive. Dimensions and
/// voltages are fitted, not measured.
ElectrodeLayout default_layout();
LayoutDimensions default_dimensions();
LayoutVoltages default_voltages();

}  // namespace trapsim::trap

#endif
