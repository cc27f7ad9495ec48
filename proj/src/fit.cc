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

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "trapsim/fitkit.h"

namespace trapsim::fitkit {

LinearFit linear_fit(std::span<const DataPoint> points) {
    double s = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto &p : points) {
        if (!(p.sigma > 0)) {
            throw DomainError("linear_fit: sigma must be positive");
        }
        double w = 1.0 / (p.sigma * p.sigma);
        s += w;
        sx += w * p.x;
        sy += w * p.y;
        sxx += w * p.x * p.x;
        sxy += w * p.x * p.y;
    }
    if (points.size() < 2) {
        throw FitError("linear_fit: need at least two points");
    }
    // Centered form keeps the determinant accurate for offset x values.
    double xm = sx / s;
    double sxx_c = sxx - s * xm * xm;
    double spread = 0;
    for (const auto &p : points) {
        spread = std::max(spread, std::abs(p.x - xm));
    }
    if (!(sxx_c > 1e-14 * s * xm * xm) || spread == 0) {
        throw FitError("linear_fit: x values are degenerate (all equal)");
    }
    double delta = s * sxx - sx * sx;
    LinearFit fit{};
    fit.slope = (s * sxy - sx * sy) / delta;
    fit.intercept = (sxx * sy - sx * sxy) / delta;
    fit.slope_error = std::sqrt(s / delta);
    fit.intercept_error = std::sqrt(sxx / delta);
    fit.covariance = -sx / delta;
    double chi2 = 0;
    for (const auto &p : points) {
        double r = (p.y - fit.slope * p.x - fit.intercept) / p.sigma;
        chi2 += r * r;
    }
    fit.chi2_reduced = points.size() > 2 ? chi2 / static_cast<double>(points.size() - 2) : 0.0;
    return fit;
}

BatchModel pointwise(std::function<double(std::span<const double>, double)> f, std::vector<double> xs) {
    return [f = std::move(f), xs = std::move(xs)](std::span<const double> params) {
        std::vector<double> out(xs.size());
        for (std::size_t i = 0; i < xs.size(); i++) {
            out[i] = f(params, xs[i]);
        }
        return out;
    };
}

namespace {

struct Evaluator {
    const FitProblem &problem;
    int evaluations = 0;

    Eigen::VectorXd residuals(const Eigen::VectorXd &p) {
        evaluations++;
        auto pred = problem.model(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())));
        if (pred.size() != problem.y.size()) {
            throw DomainError("lm_fit: model returned " + std::to_string(pred.size()) + " predictions for " +
                              std::to_string(problem.y.size()) + " observations");
        }
        Eigen::VectorXd r(pred.size());
        for (std::size_t i = 0; i < pred.size(); i++) {
            r[i] = (problem.y[i] - pred[i]) / problem.sigma[i];
        }
        return r;
    }
};

double lower_of(const FitProblem &p, std::size_t j) {
    return p.lower.empty() ? -std::numeric_limits<double>::infinity() : p.lower[j];
}
double upper_of(const FitProblem &p, std::size_t j) {
    return p.upper.empty() ? std::numeric_limits<double>::infinity() : p.upper[j];
}

void project(const FitProblem &problem, Eigen::VectorXd &p) {
    for (Eigen::Index j = 0; j < p.size(); j++) {
        p[j] = std::clamp(p[j], lower_of(problem, j), upper_of(problem, j));
    }
}

std::string param_name(const FitProblem &problem, std::size_t j) {
    return j < problem.names.size() ? problem.names[j] : "p" + std::to_string(j);
}

// Jacobian of the residual vector r = (y - f)/σ, i.e. -J_f/σ.
Eigen::MatrixXd residual_jacobian(const FitProblem &problem, Evaluator &eval, const Eigen::VectorXd &p,
                                  const Eigen::VectorXd &r0) {
    Eigen::MatrixXd jac(r0.size(), p.size());
    for (Eigen::Index j = 0; j < p.size(); j++) {
        double typical = problem.typical.empty() ? 1.0 : problem.typical[j];
        double h = 1e-6 * std::max(std::abs(p[j]), typical);
        Eigen::VectorXd q = p;
        if (q[j] + h > upper_of(problem, j)) {
            h = -h;
        }
        q[j] += h;
        double actual = q[j] - p[j];
        jac.col(j) = (eval.residuals(q) - r0) / actual;
    }
    return jac;
}

}  // namespace

std::vector<std::vector<double>> forward_jacobian(const FitProblem &problem, std::span<const double> params) {
    Evaluator eval{problem};
    Eigen::VectorXd p = Eigen::Map<const Eigen::VectorXd>(params.data(), static_cast<Eigen::Index>(params.size()));
    auto r0 = eval.residuals(p);
    auto jr = residual_jacobian(problem, eval, p, r0);
    std::vector<std::vector<double>> out(jr.rows(), std::vector<double>(jr.cols()));
    for (Eigen::Index i = 0; i < jr.rows(); i++) {
        for (Eigen::Index j = 0; j < jr.cols(); j++) {
            out[i][j] = -jr(i, j) * problem.sigma[i];
        }
    }
    return out;
}

FitResult lm_fit(const FitProblem &problem) {
    const std::size_t n_params = problem.initial.size();
    const std::size_t n_data = problem.y.size();
    if (n_params == 0) {
        throw DomainError("lm_fit: no parameters");
    }
    if (n_data == 0 || problem.sigma.size() != n_data) {
        throw DomainError("lm_fit: data must be non-empty with one sigma per observation");
    }
    for (double s : problem.sigma) {
        if (!(s > 0)) {
            throw DomainError("lm_fit: sigma must be positive");
        }
    }
    if ((!problem.lower.empty() && problem.lower.size() != n_params) ||
        (!problem.upper.empty() && problem.upper.size() != n_params)) {
        throw DomainError("lm_fit: bounds must match the parameter count");
    }

    Evaluator eval{problem};
    Eigen::VectorXd p = Eigen::Map<const Eigen::VectorXd>(problem.initial.data(), static_cast<Eigen::Index>(n_params));
    project(problem, p);
    Eigen::VectorXd r = eval.residuals(p);
    if (!r.allFinite()) {
        throw DomainError("lm_fit: model is not finite at the initial parameters");
    }
    double chi2 = r.squaredNorm();

    double lambda = 1e-3;
    FitResult result;
    bool converged = false;
    int iter = 0;
    Eigen::MatrixXd jac;
    for (; iter < problem.max_iterations && !converged; iter++) {
        jac = residual_jacobian(problem, eval, p, r);
        // Residual Jacobian is -J/σ, so the normal equations pick up a sign.
        Eigen::MatrixXd jtj = jac.transpose() * jac;
        Eigen::VectorXd grad = -jac.transpose() * r;
        // Parameters pinned on a bound with the descent direction pointing out are frozen.
        for (Eigen::Index j = 0; j < grad.size(); j++) {
            bool at_lower = !problem.lower.empty() && p[j] <= problem.lower[j] && grad[j] < 0;
            bool at_upper = !problem.upper.empty() && p[j] >= problem.upper[j] && grad[j] > 0;
            if (at_lower || at_upper) {
                grad[j] = 0;
                jtj.row(j).setZero();
                jtj.col(j).setZero();
                jtj(j, j) = 1;
            }
        }

        // Scale-free gradient test: cosine between residual and each column.
        double gnorm = 0;
        for (Eigen::Index j = 0; j < grad.size(); j++) {
            double denom = std::sqrt(jtj(j, j) * std::max(chi2, 1e-300));
            if (denom > 0) {
                gnorm = std::max(gnorm, std::abs(grad[j]) / denom);
            }
        }
        if (gnorm < problem.tolerance) {
            result.status = "gradient";
            converged = true;
            break;
        }

        bool accepted = false;
        while (!accepted) {
            Eigen::MatrixXd a = jtj;
            for (Eigen::Index j = 0; j < a.rows(); j++) {
                a(j, j) += lambda * std::max(jtj(j, j), 1e-300);
            }
            Eigen::VectorXd step = a.ldlt().solve(grad);
            Eigen::VectorXd trial = p + step;
            project(problem, trial);
            Eigen::VectorXd actual = trial - p;
            Eigen::VectorXd r_trial = eval.residuals(trial);
            double chi2_trial = r_trial.allFinite() ? r_trial.squaredNorm() : std::numeric_limits<double>::infinity();
            if (chi2_trial < chi2) {
                double decrease = (chi2 - chi2_trial) / std::max(chi2, 1e-300);
                p = trial;
                r = r_trial;
                chi2 = chi2_trial;
                lambda = std::max(lambda / 10.0, 1e-12);
                accepted = true;
                if (actual.norm() <= problem.tolerance * (p.norm() + problem.tolerance)) {
                    result.status = "step";
                    converged = true;
                } else if (decrease < 1e-3 * problem.tolerance) {
                    result.status = "chi2";
                    converged = true;
                }
            } else {
                lambda *= 10.0;
                if (lambda > 1e16 || actual.norm() <= problem.tolerance * (p.norm() + problem.tolerance)) {
                    // No downhill step exists at machine precision: local minimum.
                    result.status = "stalled";
                    converged = true;
                    break;
                }
            }
        }
    }
    if (!converged) {
        std::ostringstream msg;
        msg << "lm_fit: no convergence after " << problem.max_iterations << " iterations (chi2 = " << chi2
            << ", reduced = " << chi2 / std::max<double>(1.0, static_cast<double>(n_data) - n_params) << ")";
        throw FitError(msg.str());
    }

    jac = residual_jacobian(problem, eval, p, r);
    Eigen::MatrixXd jtj = jac.transpose() * jac;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jtj);
    double max_ev = eig.eigenvalues().maxCoeff();
    if (!(max_ev > 0) || eig.eigenvalues().minCoeff() <= 1e-13 * max_ev) {
        // Name the parameters dominating the null direction.
        Eigen::VectorXd null_dir = eig.eigenvectors().col(0);
        std::ostringstream msg;
        msg << "lm_fit: singular normal matrix; poorly identifiable combination of";
        for (Eigen::Index j = 0; j < null_dir.size(); j++) {
            if (std::abs(null_dir[j]) > 0.3) {
                msg << " " << param_name(problem, j);
            }
        }
        throw FitError(msg.str());
    }
    Eigen::MatrixXd cov = eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() *
                          eig.eigenvectors().transpose();
    double dof = static_cast<double>(n_data) - static_cast<double>(n_params);
    result.chi2 = chi2;
    result.chi2_reduced = dof > 0 ? chi2 / dof : 0.0;
    if (problem.scale_covariance && dof > 0) {
        cov *= result.chi2_reduced;
    }
    cov = 0.5 * (cov + cov.transpose());
    result.params.assign(p.data(), p.data() + p.size());
    result.covariance.assign(n_params, std::vector<double>(n_params));
    result.errors.resize(n_params);
    for (std::size_t i = 0; i < n_params; i++) {
        for (std::size_t j = 0; j < n_params; j++) {
            result.covariance[i][j] = cov(i, j);
        }
        result.errors[i] = std::sqrt(std::max(0.0, cov(i, i)));
    }
    result.iterations = iter;
    result.evaluations = eval.evaluations;
    return result;
}

double correlation(const FitResult &fit, std::size_t i, std::size_t j) {
    double d = std::sqrt(fit.covariance[i][i] * fit.covariance[j][j]);
    return d > 0 ? fit.covariance[i][j] / d : 0.0;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::int64_t sample_binomial(Rng &rng, std::int64_t shots, double p) {
    if (shots < 1) {
        throw DomainError("sample_binomial: shots must be at least 1");
    }
    std::binomial_distribution<std::int64_t> dist(shots, std::clamp(p, 0.0, 1.0));
    return dist(rng);
}

std::vector<std::int64_t> sample_multinomial(Rng &rng, std::int64_t shots, std::span<const double> probabilities) {
    std::vector<std::int64_t> counts(probabilities.size(), 0);
    std::int64_t remaining = shots;
    double mass = 1.0;
    for (std::size_t k = 0; k + 1 < probabilities.size() && remaining > 0; k++) {
        double p = mass > 0 ? std::clamp(probabilities[k] / mass, 0.0, 1.0) : 0.0;
        std::binomial_distribution<std::int64_t> dist(remaining, p);
        counts[k] = dist(rng);
        remaining -= counts[k];
        mass -= probabilities[k];
    }
    if (!probabilities.empty()) {
        counts.back() += remaining;
    }
    return counts;
}

double sample_normal(Rng &rng, double mean, double sigma) {
    std::normal_distribution<double> dist(mean, sigma);
    return dist(rng);
}

}  // namespace trapsim::fitkit
