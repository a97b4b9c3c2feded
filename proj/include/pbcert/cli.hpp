#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pbcert {

// Subcommands: bounds, atlas, curves, train, certify. `args` excludes the
// program name. Returns the process exit status.
int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pbcert
