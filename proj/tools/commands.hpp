#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lsa::cli {

enum ExitCode : int { kOk = 0, kConfigError = 1, kDivergence = 2, kAssertionFailed = 3 };

/// Parses argv, runs one subcommand and returns its exit code. Tables go to
/// `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lsa::cli
