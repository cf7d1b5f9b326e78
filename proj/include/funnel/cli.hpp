#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace funnel::cli {

enum ExitCode : int { ok = 0, usage = 1, data = 2, upstream = 3 };

/// Subcommands: index, search, expand, ask, eval, estimate-storage, serve.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
/// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace funnel::cli
