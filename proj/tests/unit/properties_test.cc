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

#include "doctest.h"
#include "support.h"

TEST_SUITE("properties") {
    TEST_CASE("probability is conserved across random inputs") {
        for (std::uint64_t seed : {11u, 12u}) {
            auto report = trapsim::testing::run_conservation_suite(seed);
            INFO("seed " << seed << ": " << report.first_failure);
            CHECK(report.cases > 1000);
            CHECK(report.failures == 0);
        }
    }
}
