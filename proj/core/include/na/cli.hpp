// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace na::cli {

inline constexpr const char* kVersion = "0.1.0";

// Runs the command-line tool. Exit code 0 on success, 1 on verification
// failure (or reject, for `asym accept`), 2 on usage errors (or unstable).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace na::cli
