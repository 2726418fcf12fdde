#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace kgval::cli {

/// Runs the kgval command line. `args` excludes the program name. Returns the
/// process exit code: 0 success, 1 configuration/transport failure or table
/// violations, 2 when more than 10% of triples exhausted their retries.
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
        std::ostream& err);

}  // namespace kgval::cli
