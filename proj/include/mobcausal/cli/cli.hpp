/*
 * Copyright 2026 The mobcausal Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef MOBCAUSAL_CLI_CLI_HPP_
#define MOBCAUSAL_CLI_CLI_HPP_

#include <iosfwd>

namespace mobcausal::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitDivergence = 3,
};

// "causal", or "conventional" for the build without the counterfactual
// branch.
const char* variant_name();

// Parses argv (argv[0] is the program name) and runs one subcommand.
int run(int argc, const char* const* argv, std::ostream& out,
        std::ostream& err);

}  // namespace mobcausal::cli

#endif  // MOBCAUSAL_CLI_CLI_HPP_
