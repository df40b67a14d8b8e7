#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace optpolicy::cli {

/// Exit codes: 0 success (warnings allowed), 2 usage or validation error,
/// 3 internal invariant violation.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitInternal = 3;

/// Runs the command line `args` (without the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace optpolicy::cli
