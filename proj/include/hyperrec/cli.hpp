// Copyright 2026 The hyperrec authors
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

// The command-line harness: prep, train, eval, sweep, compare. Every
// command is deterministic given its config and seeds; apart from the
// wall-time column of training logs, re-running overwrites outputs
// byte-identically.

#pragma once

#include <string>
#include <vector>

namespace hyperrec::cli {

// Parses and runs one command. Returns the process exit code: 0 success,
// 1 user/config error, 2 internal error. Never calls exit().
int run_cli(int argc, const char* const* argv);

// Convenience for in-process callers: args without the program name.
int run_cli(const std::vector<std::string>& args);

// Relative paths that do not exist are retried under $HYPERREC_DATA_DIR.
std::string resolve_data_path(const std::string& path);

// "<model>_<space>_d<dim>_seed<seed>", the basename of one cell's outputs.
std::string cell_name(const std::string& model, const std::string& space, int dim,
                      std::uint64_t seed);

}  // namespace hyperrec::cli
