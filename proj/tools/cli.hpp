// Copyright 2026 The trotterdiff Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace trotterdiff::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;  // bad arguments or unreadable input
inline constexpr int kExitGate = 2;   // an acceptance gate was not met

inline constexpr const char* kSampleHeader = "index,fidelity,depth,cnots,policy_file";
inline constexpr const char* kConvergenceHeader = "iter,mean_fidelity,mean_depth,hypervolume";
inline constexpr const char* kScatterHeader = "fidelity,depth,cnots,iteration";
inline constexpr const char* kSurvivalHeader = "fidelity,depth,cnots,eps,survival,effective_fidelity";

/** Runs one command; args excludes the program name. */
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace trotterdiff::cli
