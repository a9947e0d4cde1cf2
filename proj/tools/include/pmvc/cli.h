// Copyright (c) 2026 The PMVC Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PMVC_CLI_H_
#define PMVC_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace pmvc {

inline constexpr char kRunDirEnv[] = "PMVC_RUN_DIR";
inline constexpr char kDefaultRunDir[] = "pmvc_run";

// Runs one `pmvc <verb> ...` invocation. args excludes the program name.
// Returns the process exit code: 0 success, 1 validation/configuration/
// state errors, 2 training or runtime failures, 3 I/O errors. Errors are
// written to `err` as "error[CODE]: message".
int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pmvc

#endif  // PMVC_CLI_H_
