#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace jetq {

/// Exit codes: 0 success / equivalent, 1 not equivalent (equiv only), 2 any error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitNotEquivalent = 1;
inline constexpr int kExitError = 2;

/// Runs one command line (without the program name). Reports go to `out` unless --out is
/// given; diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace jetq
