#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rcaforge {

/// Command-line front end with subcommands simulate, detect, discover, score,
/// evaluate, bench and serve. Returns 0 on success, 1 on usage or validation
/// errors and 2 on internal errors. `args` excludes the program name.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cli_main(int argc, char** argv);

}  // namespace rcaforge
