/*
 * Copyright 2026 The locust-sdm Authors.
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

// Subcommands of the locust-sdm tool.
//
// Exit status: 0 on success, 1 for data errors, 2 for usage errors. Every
// failure prints exactly one line "error: <Code>: <message>" to `err`.

#ifndef LOCUST_SDM_TOOLS_COMMANDS_H_
#define LOCUST_SDM_TOOLS_COMMANDS_H_

#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "run_config.h"

namespace locust_sdm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitData = 1;
inline constexpr int kExitUsage = 2;

struct Context {
  std::string subcommand;
  RunConfig config;
  int jobs = 1;
  std::ostream* out = nullptr;
};

const std::vector<std::string_view>& Subcommands();

// Runs one subcommand; errors propagate as exceptions.
void Dispatch(Context& ctx);

// Full command line without the program name.
int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace locust_sdm::cli

#endif  // LOCUST_SDM_TOOLS_COMMANDS_H_
