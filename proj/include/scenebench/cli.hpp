#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "scenebench/errors.hpp"

namespace scenebench::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitRuntime = 3;
inline constexpr int kExitPartial = 4;

/// Prefix of the environment variables that override options, e.g.
/// SCENEBENCH_SEED or SCENEBENCH_TAU.
inline constexpr const char* kEnvPrefix = "SCENEBENCH_";

int exit_code_for(ErrorCode code);

/// `args` excludes the program name. Results go to `out`; errors are printed to
/// `err` as one JSON object per line.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace scenebench::cli
