#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace ensemblectl {

// Exit codes of the command-line front end.
enum ExitCode : int {
  kExitUec = 0,
  kExitNotUec = 1,
  kExitTheoremInapplicable = 2,
  kExitInputError = 3,
  kExitInconclusive = 4,
};

// Runs one subcommand. `args` excludes the program name. Reports go to `out`,
// one-line diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace ensemblectl
