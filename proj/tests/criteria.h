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

#ifndef TRAPSIM_TESTS_CRITERIA_H
#define TRAPSIM_TESTS_CRITERIA_H

#include <functional>
#include <string>
#include <vector>

namespace trapsim::acceptance {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    std::string name;
    double budget_s;  // wall-clock limit
    std::function<Outcome()> run;
};

std::vector<Criterion> all_criteria();

}  // namespace trapsim::acceptance

#endif
