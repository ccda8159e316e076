// Copyright 2026 The llmplan Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>

namespace llmplan {

// Exit codes of the `llmplan` tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;       // usage, validation or catalog error
inline constexpr int kExitNoFeasible = 2;  // search returned no plan

// Entry point of the command line tool; all output goes to `out` / `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace llmplan
