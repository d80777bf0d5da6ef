#pragma once

#include <iosfwd>
#include <string>

#include "spdelab/config.hpp"

namespace spdelab {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFail = 1;
inline constexpr int kExitUsage = 2;

/// Exit status for an error category: configuration-type problems map to
/// kExitUsage, runtime failures to kExitFail.
int exit_code_for(ErrorCode code);

/// Runs one subcommand, writing rows/records to `out` and the summary and
/// diagnostics to `log`. Throws Error on failure.
int run_command(const ModelConfig& config, const std::string& subcommand, std::ostream& out,
                std::ostream& log);

}  // namespace spdelab
