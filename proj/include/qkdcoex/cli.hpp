#pragma once

namespace qkdcoex::app {

// Entry point of the command-line tool. Parses argv, dispatches to one of
// the subcommands (sweep, run, distill, plan, calibrate), and returns the
// process exit code: 0 on success, 2 on invalid input (bad flags,
// malformed scenario, unreadable files), 3 on runtime failure (session
// abort, unreachable endpoint, infeasible calibration).
int run_cli(int argc, const char* const* argv);

} // namespace qkdcoex::app
