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

#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/laguerre.hpp>
#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "doctest.h"
#include "trapsim/fitkit.h"
#include "trapsim/ms_gate.h"
#include "trapsim/raman_dynamics.h"

using namespace trapsim;
using namespace trapsim::fitkit;

namespace {

std::vector<double> central_column(const FitProblem &p, std::vector<double> x, std::size_t j) {
    double h = 1e-5 * std::max(std::abs(x[j]), p.typical.empty() ? 1.0 : p.typical[j]);
    auto up = x, down = x;
    up[j] += h;
    down[j] -= h;
    auto a = p.model(up), b = p.model(down);
    std::vector<double> col(a.size());
    for (std::size_t i = 0; i < a.size(); i++) {
        col[i] = (a[i] - b[i]) / (2 * h);
    }
    return col;
}

// Forward Jacobian against a central-difference reference, column-wise
// relative to the column norm.
double jacobian_mismatch(const FitProblem &p, const std::vector<double> &x) {
    auto fwd = forward_jacobian(p, x);
    double worst = 0;
    for (std::size_t j = 0; j < x.size(); j++) {
        auto ref = central_column(p, x, j);
        double norm = 0, diff = 0;
        for (std::size_t i = 0; i < ref.size(); i++) {
            norm = std::max(norm, std::abs(ref[i]));
            diff = std::max(diff, std::abs(fwd[i][j] - ref[i]));
        }
        worst = std::max(worst, diff / norm);
    }
    return worst;
}

}  // namespace

TEST_SUITE("fitkit") {
    TEST_CASE("Bessel J0 first zero") {
        CHECK(std::abs(bessel_j(0, 2.404825557695773)) < 1e-14);
        CHECK(bessel_j(0, 0.0) == 1.0);
        CHECK(bessel_j(3, 0.0) == 0.0);
    }

    TEST_CASE("Bessel functions against an independent implementation") {
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> x(0.0, 60.0);
        for (int i = 0; i < 500; i++) {
            double v = x(rng);
            int n = static_cast<int>(rng() % 6);
            CHECK(bessel_j(n, v) == doctest::Approx(boost::math::cyl_bessel_j(n, v)).epsilon(1e-10).scale(1.0));
        }
    }

    TEST_CASE("Laguerre polynomials") {
        CHECK(laguerre(5, 1.0, 0.5) == doctest::Approx(2699.0 / 3840.0).epsilon(1e-15));
        CHECK(laguerre(0, 2.0, 3.0) == 1.0);
        CHECK(laguerre(1, 2.0, 3.0) == doctest::Approx(0.0));
        std::mt19937_64 rng(12);
        std::uniform_real_distribution<double> x(0.0, 2.0);
        for (int i = 0; i < 300; i++) {
            unsigned n = static_cast<unsigned>(rng() % 80);
            unsigned m = static_cast<unsigned>(rng() % 3);
            double v = x(rng);
            double ref = boost::math::laguerre(n, m, v);
            CHECK(laguerre(static_cast<int>(n), m, v) == doctest::Approx(ref).epsilon(1e-9).scale(1.0));
        }
    }

    TEST_CASE("weighted straight line") {
        std::vector<DataPoint> pts;
        for (int i = 0; i < 8; i++) {
            pts.push_back({0.5 * i, 2.0 + 3.0 * 0.5 * i, 0.1});
        }
        auto fit = linear_fit(pts);
        CHECK(fit.slope == doctest::Approx(3.0).epsilon(1e-12));
        CHECK(fit.intercept == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(fit.chi2_reduced == doctest::Approx(0.0).scale(1.0));
        // σ_slope = σ / sqrt(Σ (x - x̄)²)
        double sxx = 0;
        for (const auto &p : pts) sxx += (p.x - 1.75) * (p.x - 1.75);
        CHECK(fit.slope_error == doctest::Approx(0.1 / std::sqrt(sxx)).epsilon(1e-12));
        std::vector<DataPoint> same{{1, 1, 1}, {1, 2, 1}};
        CHECK_THROWS_AS(linear_fit(same), FitError);
    }

    TEST_CASE("Levenberg-Marquardt recovers a decaying cosine") {
        std::vector<double> xs;
        for (int i = 0; i < 60; i++) xs.push_back(0.1 * i);
        auto f = [](std::span<const double> p, double x) { return p[0] * std::exp(-x / p[1]) * std::cos(p[2] * x); };
        FitProblem problem;
        problem.model = pointwise(f, xs);
        std::vector<double> truth{1.3, 2.5, 4.0};
        for (double x : xs) problem.y.push_back(f(truth, x));
        problem.sigma.assign(xs.size(), 0.01);
        problem.initial = {1.0, 2.0, 3.8};
        auto fit = lm_fit(problem);
        for (int k = 0; k < 3; k++) CHECK(fit.params[k] == doctest::Approx(truth[k]).epsilon(1e-8));
    }

    TEST_CASE("bounds are never violated and covariance is symmetric PSD") {
        std::mt19937_64 rng(13);
        std::normal_distribution<double> noise(0.0, 0.05);
        std::vector<double> xs;
        for (int i = 0; i < 40; i++) xs.push_back(0.25 * i);
        auto f = [](std::span<const double> p, double x) { return p[0] * std::sin(p[1] * x) + p[2]; };
        for (int trial = 0; trial < 30; trial++) {
            FitProblem problem;
            problem.model = pointwise(f, xs);
            for (double x : xs) problem.y.push_back(f(std::vector<double>{1.0, 1.2, 0.3}, x) + noise(rng));
            problem.sigma.assign(xs.size(), 0.05);
            problem.initial = {0.8, 1.1, 0.0};
            // Tight box around a wrong value forces the optimum onto the bound.
            problem.lower = {0.5, 1.0, -0.2};
            problem.upper = {0.9, 1.5, 0.25};
            auto fit = lm_fit(problem);
            for (int k = 0; k < 3; k++) {
                CHECK(fit.params[k] >= problem.lower[k]);
                CHECK(fit.params[k] <= problem.upper[k]);
            }
            Eigen::Matrix3d c;
            for (int i = 0; i < 3; i++)
                for (int j = 0; j < 3; j++) c(i, j) = fit.covariance[i][j];
            CHECK((c - c.transpose()).norm() <= 1e-14 * c.norm());
            Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(c);
            CHECK(eig.eigenvalues().minCoeff() >= -1e-12 * eig.eigenvalues().maxCoeff());
        }
    }

    TEST_CASE("non-finite initial model is a domain error") {
        FitProblem problem;
        problem.model = pointwise([](std::span<const double> p, double x) { return std::log(p[0]) * x; }, {1, 2, 3});
        problem.y = {1, 2, 3};
        problem.sigma = {1, 1, 1};
        problem.initial = {-1.0};
        CHECK_THROWS_AS(lm_fit(problem), DomainError);
    }

    TEST_CASE("forward Jacobian agrees with central differences") {
        SUBCASE("carrier flops") {
            std::vector<double> times;
            for (int i = 0; i <= 50; i++) times.push_back(2e-7 * i);
            FitProblem p;
            p.model = [times](std::span<const double> x) {
                std::vector<double> etas{0.1, 0.094};
                std::vector<PhononDistribution> d{thermal_pmf(x[1]), thermal_pmf(x[2])};
                return raman::carrier_curve(times, DriveParams(x[0], 0.0), etas, d);
            };
            p.typical = {5e5, 1, 1};
            p.y = p.model(std::vector<double>{545e3, 4.0, 0.5});
            p.sigma.assign(p.y.size(), 1.0);
            CHECK(jacobian_mismatch(p, {545e3, 4.0, 0.5}) < 1e-4);
        }
        SUBCASE("MS populations") {
            std::vector<double> times;
            for (int i = 0; i <= 30; i++) times.push_back(1e-5 * i);
            FitProblem p;
            p.model = [times](std::span<const double> x) {
                ms::MSGateParams g{x[0], x[1]};
                g.initial_nbar = x[2];
                g.n_max = 40;
                auto c = ms::propagate(g, times);
                std::vector<double> out;
                for (std::size_t i = 0; i < c.size(); i++) {
                    out.push_back(c.p00[i]);
                    out.push_back(c.p11[i]);
                }
                return out;
            };
            p.typical = {5e4, 1e4, 1};
            p.y = p.model(std::vector<double>{49.9e3, -9.4e3, 0.3});
            p.sigma.assign(p.y.size(), 1.0);
            CHECK(jacobian_mismatch(p, {49.9e3, -9.4e3, 0.3}) < 1e-4);
        }
    }

    TEST_CASE("seeded sampling is reproducible") {
        CHECK(derive_seed(42, 3) == derive_seed(42, 3));
        CHECK(derive_seed(42, 3) != derive_seed(42, 4));
        Rng a(derive_seed(9, 1)), b(derive_seed(9, 1));
        for (int i = 0; i < 100; i++) {
            CHECK(sample_binomial(a, 500, 0.3) == sample_binomial(b, 500, 0.3));
        }
        std::vector<double> p{0.1, 0.2, 0.3, 0.4};
        CHECK(sample_multinomial(a, 1000, p) == sample_multinomial(b, 1000, p));
        CHECK(sample_normal(a, 1.0, 2.0) == sample_normal(b, 1.0, 2.0));
    }

    TEST_CASE("binomial sampling mean and edge probabilities") {
        Rng rng(5);
        double sum = 0;
        for (int i = 0; i < 2000; i++) sum += sample_binomial(rng, 100, 0.37);
        CHECK(sum / 2000 == doctest::Approx(37.0).epsilon(0.01));
        CHECK(sample_binomial(rng, 50, 0.0) == 0);
        CHECK(sample_binomial(rng, 50, 1.0) == 50);
        CHECK_THROWS_AS(sample_binomial(rng, 0, 0.5), DomainError);
    }
}
