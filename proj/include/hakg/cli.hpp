#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hakg::cli {

// Runs one `hakg` invocation; args excludes the program name. Returns the
// process exit code: 0 on success, 2 for usage errors, 1 for pipeline errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hakg::cli
