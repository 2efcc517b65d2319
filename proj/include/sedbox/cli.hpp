#pragma once

#include <string>
#include <vector>

namespace sedbox {

// Entry point behind the sedbox executable; exposed so tests can drive the
// command surface in-process. Arguments exclude the program name.
//
// Subcommands: decode, fuse, eval, synth, stats, losscheck.
// Exit codes: 0 success, 1 validation/usage error, 2 I/O error.
int run_cli(std::vector<std::string> args);

int run_cli(int argc, const char* const* argv);

}  // namespace sedbox
