#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cardiocep {

enum ExitCode : int {
    kExitOk = 0,
    kExitRuntime = 1,
    kExitUsage = 2,
    kExitValidation = 3,
};

/// `args` excludes the program name. `in` backs `--source -` and
/// `infer --record -`.
int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

} // namespace cardiocep
