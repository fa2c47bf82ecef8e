// Copyright 2026 The MomentKit Authors.
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

#ifndef MOMENTKIT_CLI_H_
#define MOMENTKIT_CLI_H_

#include <ostream>
#include <string>
#include <vector>

#include "absl/status/status.h"

namespace momentkit {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitInternal = 3;

inline constexpr char kToolName[] = "momentkit";
inline constexpr char kToolVersion[] = "0.1.0";

// Exit code for a failed status: internal errors map to kExitInternal,
// everything else to kExitValidation.
int ExitCodeFor(const absl::Status& status);

// Runs the command line `args` (args[0] is the program name).
int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err);

}  // namespace momentkit

#endif  // MOMENTKIT_CLI_H_
