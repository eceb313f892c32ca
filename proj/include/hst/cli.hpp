#pragma once

namespace hst::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;  // unexpected failure
inline constexpr int kExitConfig = 2;    // invalid flags or run config
inline constexpr int kExitData = 3;      // unreadable/malformed input data
inline constexpr int kExitNumeric = 4;   // training diverged

// Full command-line entry point (prepare-data | train | evaluate | synth |
// report). Returns the process exit code.
int run_cli(int argc, const char* const* argv);

}  // namespace hst::cli
