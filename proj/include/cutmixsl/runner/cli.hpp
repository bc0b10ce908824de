// Copyright 2026 The cutmixsl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ostream>

namespace cutmixsl::runner {

/// Entry point of the `cutmixsl` tool. Subcommands: train, attack, replay,
/// transcript, dump-synthetic. Returns the process exit code: 0 on success,
/// 2 for usage and config errors, 1 for runtime failures.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cutmixsl::runner
