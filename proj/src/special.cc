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

#include <cmath>
#include <limits>

#include "trapsim/fitkit.h"

namespace trapsim::fitkit {

double bessel_j(int order, double x) {
    if (order < 0) {
        throw DomainError("bessel_j: order must be non-negative");
    }
    if (!std::isfinite(x)) {
        throw DomainError("bessel_j: argument must be finite");
    }
    double sign = (x < 0 && (order % 2) == 1) ? -1.0 : 1.0;
    double ax = std::abs(x);
    if (ax == 0) {
        return order == 0 ? 1.0 : 0.0;
    }

    // Start far enough above max(n, x) that the seed error has decayed below
    // double precision by the time the recurrence reaches the wanted orders.
    double top = std::max(static_cast<double>(order), ax);
    int start = 2 * ((static_cast<int>(top + 20.0 + 2.0 * std::sqrt(40.0 * top)) + 1) / 2);

    constexpr double kBig = 1e250;
    constexpr double kSmall = 1e-250;
    double next = 0.0;   // J_{k+1}
    double curr = kSmall;  // J_k
    double result = 0.0;
    double norm = 0.0;  // J0 + 2 Σ J_2k, accumulated unscaled
    for (int k = start; k > 0; k--) {
        double prev = 2.0 * k / ax * curr - next;  // J_{k-1}
        next = curr;
        curr = prev;
        if (k - 1 == order) {
            result = curr;
        }
        if ((k - 1) % 2 == 0 && k - 1 > 0) {
            norm += 2.0 * curr;
        }
        if (std::abs(curr) > kBig) {
            curr *= kSmall;
            next *= kSmall;
            result *= kSmall;
            norm *= kSmall;
        }
    }
    norm += curr;  // J0
    return sign * result / norm;
}

double laguerre(int n, double alpha, double x) {
    if (n < 0) {
        throw DomainError("laguerre: degree must be non-negative");
    }
    double l_prev = 1.0;
    if (n == 0) {
        return l_prev;
    }
    double l_curr = 1.0 + alpha - x;
    for (int k = 1; k < n; k++) {
        double l_next = ((2.0 * k + 1.0 + alpha - x) * l_curr - (k + alpha) * l_prev) / (k + 1.0);
        l_prev = l_curr;
        l_curr = l_next;
    }
    return l_curr;
}

}  // namespace trapsim::fitkit
