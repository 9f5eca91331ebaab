#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pwinr {

inline constexpr const char* kToolVersion = "0.1.0";

// Parses and runs one command line (program name excluded). Human output
// goes to `out`, diagnostics to `err`. Returns the process exit code:
//   0 success, 1 input/output failure, 2 usage error, 3 numerical failure.
// The PWINR_BACKEND environment variable ("serial" or "openmp") pins the
// kernel backend before the command runs; both produce identical bits, so
// the override only matters for timing experiments.
int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err);

}  // namespace pwinr
