#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace portanet::tools {

/// Entry point of the `portanet` command. `args` excludes the program name.
/// Results go to `out` as key=value lines, diagnostics to `err`. Returns the
/// process exit status.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace portanet::tools
