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

#ifndef TRAPSIM_FITKIT_H
#define TRAPSIM_FITKIT_H

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "trapsim/core_types.h"

namespace trapsim::fitkit {

/// Bessel function of the first kind J_n(x), integer order n ≥ 0.
///
/// Evaluated with Miller's backward recurrence normalized by
/// J0 + 2 Σ J_2k = 1, which is stable for every finite x.
double bessel_j(int order, double x);

/// Generalized Laguerre polynomial L_n^α(x) by three-term recurrence.
double laguerre(int n, double alpha, double x);

struct FitError : Error {
    using Error::Error;
};

struct DataPoint {
    double x;
    double y;
    double sigma;
};

struct LinearFit {
    double slope;
    double intercept;
    double slope_error;
    double intercept_error;
    double covariance;  // cov(slope, intercept)
    double chi2_reduced;
};

/// Weighted least-squares straight line. Standard errors come from the
/// supplied σ (not rescaled by χ²).
LinearFit linear_fit(std::span<const DataPoint> points);

/// Model evaluated at every data point at once; returns one prediction per
/// observation, in data order.
using BatchModel = std::function<std::vector<double>(std::span<const double> params)>;

/// Wraps a pointwise model f(params, x) into a BatchModel over `xs`.
BatchModel pointwise(std::function<double(std::span<const double>, double)> f, std::vector<double> xs);

struct FitProblem {
    BatchModel model;
    std::vector<double> y;
    std::vector<double> sigma;
    std::vector<double> initial;
    std::vector<double> lower;    // empty = unbounded
    std::vector<double> upper;    // empty = unbounded
    std::vector<double> typical;  // finite-difference scale floor, empty = 1
    std::vector<std::string> names;
    int max_iterations = 200;
    double tolerance = 1e-10;
    // Multiply the covariance by the reduced χ² (σ treated as relative).
    bool scale_covariance = true;
};

struct FitResult {
    std::vector<double> params;
    std::vector<std::vector<double>> covariance;
    std::vector<double> errors;  // sqrt(diag(covariance))
    double chi2 = 0;
    double chi2_reduced = 0;
    int iterations = 0;
    int evaluations = 0;
    std::string status;  // "gradient", "step", "chi2", "stalled"
};

/// Levenberg–Marquardt with Marquardt diagonal scaling, λ₀ = 1e-3 and ×10 / ÷10
/// updates. Parameters are projected onto the box [lower, upper] after every
/// step. Jacobians are forward differences with relative step 1e-6.
///
/// Throws DomainError when the model is non-finite at the initial point and
/// FitError on iteration exhaustion or a singular normal matrix.
FitResult lm_fit(const FitProblem &problem);

/// Forward-difference Jacobian of the model (rows = observations), as used
/// inside lm_fit. Exposed for Jacobian checks.
std::vector<std::vector<double>> forward_jacobian(const FitProblem &problem, std::span<const double> params);

/// Correlation coefficient between two fitted parameters.
double correlation(const FitResult &fit, std::size_t i, std::size_t j);

using Rng = std::mt19937_64;

/// Deterministic per-stream seed derived from a master seed (splitmix64).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

/// Number of successes in `shots` Bernoulli trials of probability p.
std::int64_t sample_binomial(Rng &rng, std::int64_t shots, double p);

/// Multinomial draw over `probabilities` (sums to 1).
std::vector<std::int64_t> sample_multinomial(Rng &rng, std::int64_t shots, std::span<const double> probabilities);

double sample_normal(Rng &rng, double mean, double sigma);

}  // namespace trapsim::fitkit

#endif
