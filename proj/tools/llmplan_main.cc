// Copyright 2026 The llmplan Authors.
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "llmplan/cli.h"

int main(int argc, char** argv) {
  return llmplan::run_cli(argc, argv, std::cout, std::cerr);
}
