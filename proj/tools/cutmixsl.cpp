// Copyright 2026 The cutmixsl Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "cutmixsl/runner/cli.hpp"

int main(int argc, char** argv) { return cutmixsl::runner::run_cli(argc, argv, std::cout, std::cerr); }
