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

#ifndef TRAPSIM_TESTS_SUPPORT_H
#define TRAPSIM_TESTS_SUPPORT_H

#include <cstdint>
#include <span>
#include <string>

#include "trapsim/core_types.h"
#include "trapsim/fitkit.h"
#include "trapsim/trap_field.h"

namespace trapsim::testing {

std::string fmt(double value);

/// Arbitrary normalized distribution on 0..n_max.
PhononDistribution random_distribution(fitkit::Rng &rng, std::size_t n_max);

/// |∇²Φ| from second differences of the potential, relative to Σ|∂²Φ/∂x_k²|.
double laplace_residual(std::span<const trap::ElectrodePatch> patches, const trap::Vec3 &x);

/// max_k |E_k - (-∂Φ/∂x_k)| / |E| with a Richardson-extrapolated difference.
double field_vs_gradient(std::span<const trap::ElectrodePatch> patches, const trap::Vec3 &x);

struct ConservationReport {
    int cases = 0;
    int failures = 0;
    double worst_error = 0;
    std::string first_failure;
};

/// Randomized normalization/trace checks over every operation that returns
/// a distribution or a set of populations.
ConservationReport run_conservation_suite(std::uint64_t seed);

}  // namespace trapsim::testing

#endif
