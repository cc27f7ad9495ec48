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

#include "trapsim/trap_field.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace trapsim::trap {

std::string to_string(ElectrodeRole role) {
    switch (role) {
        case ElectrodeRole::IDC:
            return "IDC";
        case ElectrodeRole::RF:
            return "RF";
        case ElectrodeRole::ODC:
            return "ODC";
        case ElectrodeRole::GND:
            return "GND";
    }
    return "?";
}

ElectrodeRole electrode_role_from_string(const std::string &name) {
    for (auto role : {ElectrodeRole::IDC, ElectrodeRole::RF, ElectrodeRole::ODC, ElectrodeRole::GND}) {
        if (to_string(role) == name) {
            return role;
        }
    }
    throw DomainError("unknown electrode role '" + name + "' (expected IDC, RF, ODC or GND)");
}

ElectrodePatch::ElectrodePatch(ElectrodeRole role, double x1, double x2, double z1, double z2, double voltage,
                               std::string name)
    : role(role), x1(x1), x2(x2), z1(z1), z2(z2), voltage(voltage), name(std::move(name)) {
    if (!(x2 > x1) || !(z2 > z1)) {
        throw DomainError("electrode patch needs x2 > x1 and z2 > z1");
    }
}

std::vector<ElectrodePatch> ElectrodeLayout::dc_patches() const {
    std::vector<ElectrodePatch> out;
    std::copy_if(patches.begin(), patches.end(), std::back_inserter(out),
                 [](const ElectrodePatch &p) { return p.role != ElectrodeRole::RF; });
    return out;
}

std::vector<ElectrodePatch> ElectrodeLayout::rf_patches() const {
    std::vector<ElectrodePatch> out;
    std::copy_if(patches.begin(), patches.end(), std::back_inserter(out),
                 [](const ElectrodePatch &p) { return p.role == ElectrodeRole::RF; });
    return out;
}

std::vector<std::size_t> ElectrodeLayout::indices(ElectrodeRole role) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < patches.size(); i++) {
        if (patches[i].role == role) {
            out.push_back(i);
        }
    }
    return out;
}

namespace {

void check_height(const Vec3 &point) {
    if (!(point.y() > 0)) {
        throw DomainError("field point must lie above the chip (y > 0)");
    }
}

// Corner term arctan(X Z / (y R)) with X, Z measured from the point to the corner.
double corner_solid_angle(double dx, double dz, double y) {
    double r = std::sqrt(dx * dx + dz * dz + y * y);
    return std::atan(dx * dz / (y * r));
}

// Gradient of the corner term with respect to (X, y, Z).
Vec3 corner_gradient(double dx, double dz, double y) {
    double r = std::sqrt(dx * dx + dz * dz + y * y);
    double ax = dx * dx + y * y;
    double az = dz * dz + y * y;
    double d_dx = dz * y / (r * ax);
    double d_dz = dx * y / (r * az);
    double d_dy = -dx * dz * (dx * dx + dz * dz + 2.0 * y * y) / (r * ax * az);
    return {d_dx, d_dy, d_dz};
}

}  // namespace

double patch_potential(const ElectrodePatch &patch, const Vec3 &point) {
    check_height(point);
    if (patch.voltage == 0) {
        return 0.0;
    }
    double y = point.y();
    double x1 = patch.x1 - point.x(), x2 = patch.x2 - point.x();
    double z1 = patch.z1 - point.z(), z2 = patch.z2 - point.z();
    double sum = corner_solid_angle(x2, z2, y) - corner_solid_angle(x1, z2, y) - corner_solid_angle(x2, z1, y) +
                 corner_solid_angle(x1, z1, y);
    return patch.voltage / (2.0 * std::numbers::pi) * sum;
}

Vec3 patch_field(const ElectrodePatch &patch, const Vec3 &point) {
    check_height(point);
    if (patch.voltage == 0) {
        return Vec3::Zero();
    }
    double y = point.y();
    double x1 = patch.x1 - point.x(), x2 = patch.x2 - point.x();
    double z1 = patch.z1 - point.z(), z2 = patch.z2 - point.z();
    Vec3 g = corner_gradient(x2, z2, y) - corner_gradient(x1, z2, y) - corner_gradient(x2, z1, y) +
             corner_gradient(x1, z1, y);
    // X = x_corner - x, so ∂/∂x = -∂/∂X (same for z); y enters directly.
    Vec3 grad_phi(-g.x(), g.y(), -g.z());
    return -patch.voltage / (2.0 * std::numbers::pi) * grad_phi;
}

double potential(std::span<const ElectrodePatch> patches, const Vec3 &point) {
    check_height(point);
    double phi = 0;
    for (const auto &p : patches) {
        phi += patch_potential(p, point);
    }
    return phi;
}

Vec3 field(std::span<const ElectrodePatch> patches, const Vec3 &point) {
    check_height(point);
    Vec3 e = Vec3::Zero();
    for (const auto &p : patches) {
        e += patch_field(p, point);
    }
    return e;
}

Mat3 field_gradient(std::span<const ElectrodePatch> patches, const Vec3 &point, double step) {
    Mat3 g;
    for (int i = 0; i < 3; i++) {
        Vec3 plus = point, minus = point;
        plus[i] += step;
        minus[i] -= step;
        g.row(i) = ((field(patches, plus) - field(patches, minus)) / (2.0 * step)).transpose();
    }
    return g;
}

namespace {

double rf_omega(const ElectrodeLayout &layout) {
    if (!(layout.rf_drive_frequency > 0)) {
        throw DomainError("RF drive frequency must be positive");
    }
    return constants::two_pi * layout.rf_drive_frequency;
}

// ∇U with U = q²|E_rf|²/(4mΩ²) + qΦ_dc.
Vec3 energy_gradient(const std::vector<ElectrodePatch> &rf, const std::vector<ElectrodePatch> &dc,
                     const IonSpecies &species, double omega, const Vec3 &r) {
    Vec3 e_rf = field(rf, r);
    Mat3 g = field_gradient(rf, r);
    double scale = species.charge * species.charge / (4.0 * species.mass * omega * omega);
    return scale * 2.0 * g * e_rf - species.charge * field(dc, r);
}

Mat3 energy_hessian(const std::vector<ElectrodePatch> &rf, const std::vector<ElectrodePatch> &dc,
                    const IonSpecies &species, double omega, const Vec3 &r) {
    constexpr double h = 2e-8;
    Mat3 hess;
    for (int i = 0; i < 3; i++) {
        Vec3 plus = r, minus = r;
        plus[i] += h;
        minus[i] -= h;
        hess.row(i) = ((energy_gradient(rf, dc, species, omega, plus) - energy_gradient(rf, dc, species, omega, minus)) /
                       (2.0 * h))
                          .transpose();
    }
    return 0.5 * (hess + hess.transpose());
}

std::string describe(const Vec3 &r) {
    std::ostringstream s;
    s << "(" << r.x() * 1e6 << ", " << r.y() * 1e6 << ", " << r.z() * 1e6 << ") um";
    return s.str();
}

}  // namespace

double pseudopotential(const ElectrodeLayout &layout, const IonSpecies &species, const Vec3 &point) {
    double omega = rf_omega(layout);
    auto rf = layout.rf_patches();
    double e2 = field(rf, point).squaredNorm();
    return species.charge * species.charge * e2 / (4.0 * species.mass * omega * omega);
}

double total_potential_energy(const ElectrodeLayout &layout, const IonSpecies &species, const Vec3 &point) {
    auto dc = layout.dc_patches();
    return pseudopotential(layout, species, point) + species.charge * potential(dc, point);
}

double TrapOperatingPoint::normal_frequency() const {
    return std::abs(radial_axes[0].y()) > std::abs(radial_axes[1].y()) ? radial_frequencies[0]
                                                                       : radial_frequencies[1];
}

double TrapOperatingPoint::normal_mathieu_q() const {
    return std::abs(radial_axes[0].y()) > std::abs(radial_axes[1].y()) ? mathieu_q[0] : mathieu_q[1];
}

TrapOperatingPoint rf_null_and_frequencies(const ElectrodeLayout &layout, const IonSpecies &species,
                                           const SearchBox &box) {
    const double omega = rf_omega(layout);
    const auto rf = layout.rf_patches();
    const auto dc = layout.dc_patches();
    if (rf.empty()) {
        throw SearchError("layout has no RF electrodes");
    }
    if (box.grid < 2 || !(box.y_min > 0) || !(box.x_max > box.x_min) || !(box.y_max > box.y_min)) {
        throw DomainError("invalid search box");
    }

    // Coarse grid for the smallest |E_rf| in the transverse plane.
    Vec3 best(0, 0, box.z);
    double best_e2 = std::numeric_limits<double>::infinity();
    for (int i = 0; i < box.grid; i++) {
        for (int j = 0; j < box.grid; j++) {
            Vec3 r(box.x_min + (box.x_max - box.x_min) * i / (box.grid - 1),
                   box.y_min + (box.y_max - box.y_min) * j / (box.grid - 1), box.z);
            double e2 = field(rf, r).squaredNorm();
            if (e2 < best_e2) {
                best_e2 = e2;
                best = r;
            }
        }
    }

    // Newton on the transverse RF field components.
    Vec3 null = best;
    bool found = false;
    for (int it = 0; it < 100; it++) {
        Vec3 e = field(rf, null);
        Mat3 g = field_gradient(rf, null);
        Eigen::Matrix2d jac;
        jac << g(0, 0), g(1, 0), g(0, 1), g(1, 1);  // ∂E_j/∂x_i transposed
        Eigen::Vector2d step = jac.colPivHouseholderQr().solve(-Eigen::Vector2d(e.x(), e.y()));
        double limit = 0.25 * null.y();
        if (step.norm() > limit) {
            step *= limit / step.norm();
        }
        null.x() += step.x();
        null.y() += step.y();
        if (!(null.y() > 0) || !null.allFinite()) {
            throw SearchError("RF null search left the half-space above the chip from grid seed " + describe(best));
        }
        if (step.norm() < 1e-13) {
            found = true;
            break;
        }
    }
    if (!found || null.x() < box.x_min || null.x() > box.x_max || null.y() < box.y_min || null.y() > box.y_max) {
        throw SearchError("no RF null found inside the search box; last estimate " + describe(null) +
                          ", grid seed " + describe(best));
    }

    // Equilibrium of the full potential, starting from the null.
    Vec3 ion = null;
    found = false;
    for (int it = 0; it < 100; it++) {
        Vec3 grad = energy_gradient(rf, dc, species, omega, ion);
        Mat3 hess = energy_hessian(rf, dc, species, omega, ion);
        Vec3 step = hess.colPivHouseholderQr().solve(-grad);
        double limit = 0.1 * ion.y();
        if (step.norm() > limit) {
            step *= limit / step.norm();
        }
        ion += step;
        if (!(ion.y() > 0) || !ion.allFinite()) {
            throw SearchError("equilibrium search left the half-space above the chip from RF null " + describe(null));
        }
        if (step.norm() < 1e-12) {
            found = true;
            break;
        }
    }
    if (!found) {
        throw SearchError("equilibrium search did not converge near RF null " + describe(null));
    }

    Mat3 hess = energy_hessian(rf, dc, species, omega, ion);
    Eigen::SelfAdjointEigenSolver<Mat3> eig(hess);
    TrapOperatingPoint op{};
    op.rf_drive_frequency = layout.rf_drive_frequency;
    op.rf_amplitude = rf.front().voltage;
    for (const auto &p : dc) {
        op.dc_voltages.push_back(p.voltage);
    }
    op.rf_null = null;
    op.ion_position = ion;
    op.ion_height = ion.y();
    for (int i = 0; i < 3; i++) {
        double k = eig.eigenvalues()[i];
        if (!(k > 0)) {
            throw InstabilityError("potential curvature " + std::to_string(k) +
                                   " J/m^2 along a principal axis is not positive; secular frequency imaginary");
        }
        op.secular_frequencies[i] = std::sqrt(k / species.mass) / constants::two_pi;
        op.principal_axes[i] = eig.eigenvectors().col(i);
    }

    // The axis with the largest z component is axial; the other two are radial.
    int axial = 0;
    for (int i = 1; i < 3; i++) {
        if (std::abs(op.principal_axes[i].z()) > std::abs(op.principal_axes[axial].z())) {
            axial = i;
        }
    }
    op.axial_frequency = op.secular_frequencies[axial];
    int r = 0;
    Mat3 g_null = field_gradient(rf, null);
    double pseudo_scale = species.charge * species.charge / (2.0 * species.mass * omega * omega);
    for (int i = 0; i < 3; i++) {
        if (i == axial) {
            continue;
        }
        op.radial_frequencies[r] = op.secular_frequencies[i];
        op.radial_axes[r] = op.principal_axes[i];
        // RF-only curvature along the radial axis: (q²/2mΩ²)|G u|².
        Vec3 u = op.principal_axes[i];
        double k_pseudo = pseudo_scale * (g_null * u).squaredNorm();
        op.pseudo_frequencies[r] = std::sqrt(k_pseudo / species.mass) / constants::two_pi;
        op.mathieu_q[r] = 2.0 * std::numbers::sqrt2 * op.pseudo_frequencies[r] / layout.rf_drive_frequency;
        r++;
    }
    return op;
}

CompensationGain compensation_gain(const ElectrodeLayout &layout, std::span<const std::size_t> probe_patches,
                                   const Vec3 &at) {
    if (probe_patches.empty()) {
        throw DomainError("compensation_gain: no probe electrodes given");
    }
    Vec3 e = Vec3::Zero();
    for (std::size_t idx : probe_patches) {
        if (idx >= layout.patches.size()) {
            throw DomainError("compensation_gain: probe index out of range");
        }
        ElectrodePatch unit = layout.patches[idx];
        unit.voltage = 1.0;
        e += patch_field(unit, at);
    }
    double mag = e.norm();
    if (!(mag > 1e-9)) {
        throw DomainError("compensation_gain: probe electrodes produce no field at the given point (degenerate geometry)");
    }
    return {e, mag, e / mag};
}

double displacement_from_field(double e_y, const IonSpecies &species, const ModeSpec &radial_mode) {
    double omega = constants::two_pi * radial_mode.frequency;
    return species.charge * e_y / (species.mass * omega * omega);
}

ElectrodeLayout build_symmetric_layout(const LayoutDimensions &d, const LayoutVoltages &v, double rf_drive_frequency) {
    ElectrodeLayout layout;
    layout.rf_drive_frequency = rf_drive_frequency;
    double idc_in = d.slot_half_width;
    double idc_out = idc_in + d.idc_width;
    double rf_out = idc_out + d.rf_width;
    double odc_out = rf_out + d.odc_width;
    double zc = d.odc_center_half_length;
    double ze = zc + d.odc_endcap_length;
    using R = ElectrodeRole;
    auto &p = layout.patches;
    p.emplace_back(R::IDC, -idc_out, -idc_in, -d.dc_half_length, d.dc_half_length, v.idc, "IDC_L");
    p.emplace_back(R::IDC, idc_in, idc_out, -d.dc_half_length, d.dc_half_length, v.idc, "IDC_R");
    p.emplace_back(R::RF, -rf_out, -idc_out, -d.rf_half_length, d.rf_half_length, v.rf_amplitude, "RF_L");
    p.emplace_back(R::RF, idc_out, rf_out, -d.rf_half_length, d.rf_half_length, v.rf_amplitude, "RF_R");
    p.emplace_back(R::ODC, -odc_out, -rf_out, -zc, zc, v.odc_center, "ODC_L_center");
    p.emplace_back(R::ODC, rf_out, odc_out, -zc, zc, v.odc_center, "ODC_R_center");
    p.emplace_back(R::ODC, -odc_out, -rf_out, -ze, -zc, v.odc_endcap, "ODC_L_minus");
    p.emplace_back(R::ODC, -odc_out, -rf_out, zc, ze, v.odc_endcap, "ODC_L_plus");
    p.emplace_back(R::ODC, rf_out, odc_out, -ze, -zc, v.odc_endcap, "ODC_R_minus");
    p.emplace_back(R::ODC, rf_out, odc_out, zc, ze, v.odc_endcap, "ODC_R_plus");
    return layout;
}

LayoutDimensions default_dimensions() {
    // Slot, IDC, ODC and lengths are design choices; the RF width is calibrated
    // (tools/calibrate_layout).
    return LayoutDimensions{
        .slot_half_width = 30e-6,
        .idc_width = 30e-6,
        .rf_width = 106.8379597e-6,
        .odc_width = 400e-6,
        .dc_half_length = 2e-3,
        .rf_half_length = 5e-3,
        .odc_center_half_length = 150e-6,
        .odc_endcap_length = 1e-3,
    };
}

LayoutVoltages default_voltages() {
    return LayoutVoltages{.rf_amplitude = 150.4391152, .idc = 7.191553826, .odc_center = 0.0, .odc_endcap = 7.652554143};
}

ElectrodeLayout default_layout() {
    return build_symmetric_layout(default_dimensions(), default_voltages(), 20e6);
}

}  // namespace trapsim::trap
