#pragma once

// Command-line front end: train, detect, eval, synth, bench.
// Exit codes: 0 success, 1 runtime error, 2 usage error.

#include <iosfwd>
#include <string>
#include <vector>

namespace rbmad {

int run_cli(int argc, char** argv);

// args[0] is the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rbmad
