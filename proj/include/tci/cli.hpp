#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "tci/synth.hpp"

namespace tci::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kNumericFailure = 3 };

/// Runs one command line (args[0] is the program name). Diagnostics go to
/// `err`; reports that a subcommand prints go to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Reads a synthetic-data config from JSON. Keys mirror SynthConfig field
/// names; unknown keys are rejected.
SynthConfig parse_synth_config(std::string_view json_text);

}  // namespace tci::cli
