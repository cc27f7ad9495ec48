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

#ifndef TRAPSIM_RAMAN_DYNAMICS_H
#define TRAPSIM_RAMAN_DYNAMICS_H

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trapsim/core_types.h"
#include "trapsim/fitkit.h"

namespace trapsim::raman {

/// |<n+s| exp(iη(a + a†)) |n>|, the coupling relative to the bare Rabi
/// frequency for a transition that changes the phonon number by s.
double matrix_element(int n, int s, double eta);

/// Cached matrix elements for s in [-2, 2] and n in [0, n_max].
class CouplingMatrixElements {
   public:
    static constexpr int kMaxOrder = 2;

    CouplingMatrixElements(double eta, int n_max);

    double eta() const { return eta_; }
    int n_max() const { return n_max_; }
    /// Zero when n + s is negative.
    double operator()(int n, int s) const;

   private:
    double eta_;
    int n_max_;
    std::vector<double> table_;  // row n, column s + kMaxOrder
};

/// Two-level transition probability with generalized Rabi frequency:
/// Ω²/(Ω²+Δ²) sin²(√(Ω²+Δ²) t / 2). Frequencies in Hz (ordinary).
double rabi_probability(double rabi, double detuning, double t);

/// Carrier excitation P1(t) = Σ Π_k p_k(n_k) · (Rabi formula at Ω Π_k M(n_k, 0, η_k)),
/// for one or two independent modes. `rabi_scale` multiplies every Rabi
/// frequency (micromotion enters as J0(β)).
std::vector<double> carrier_curve(std::span<const double> times, const DriveParams &drive,
                                  std::span<const double> etas, std::span<const PhononDistribution> phonons,
                                  double rabi_scale = 1.0);

/// Carrier Rabi flops for one or two modes. With co-propagating beams every
/// η is zero and the curve is a pure sinusoid.
std::vector<double> rabi_curve(std::span<const double> times, const DriveParams &drive, const RamanGeometry &geometry,
                               std::span<const ModeSpec> modes, std::span<const PhononDistribution> phonons);

struct RabiMeasurement {
    std::vector<double> times;  // s
    std::vector<double> p1;
    std::vector<double> shots;  // per point; empty = unweighted
};

struct NbarFit {
    double rabi;  // Hz
    double rabi_error;
    std::vector<double> nbar;  // one per mode
    std::vector<double> nbar_error;
    double nbar_sum;
    double nbar_sum_error;
    double chi2_reduced;
    std::vector<std::string> warnings;
};

/// Thermal-state fit of carrier flops over (Ω, n̄₁, n̄₂). Phonon numbers are
/// parameterized as log(n̄ + 1e-6).
NbarFit fit_nbar(const RabiMeasurement &curve, const DriveParams &drive_guess, const RamanGeometry &geometry,
                 std::span<const ModeSpec> modes, std::span<const double> nbar_guess = {});

struct ContrastFit {
    double contrast;
    double rabi;
    double chi2_reduced;
};

/// Fits C · sin²(π Ω t) (Ω in Hz) to a carrier curve.
ContrastFit fit_carrier_contrast(const RabiMeasurement &curve, double rabi_guess);

enum class Transition { carrier, red_sideband, blue_sideband };

/// Weak-probe spectrum. Each detuning (Hz, relative to the carrier) drives the
/// nearest transition among the carrier and the red/blue sidebands of every
/// mode; spectator modes contribute their carrier Debye–Waller factor.
std::vector<double> sideband_spectrum(std::span<const double> detunings, const DriveParams &probe,
                                      std::span<const ModeSpec> modes, std::span<const PhononDistribution> phonons);

/// Excitation probability of one resonantly driven transition of `mode_index`.
double sideband_probability(Transition transition, std::size_t mode_index, const DriveParams &probe,
                            std::span<const ModeSpec> modes, std::span<const PhononDistribution> phonons);

}  // namespace trapsim::raman

#endif
