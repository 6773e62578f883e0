#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace zggp {

inline constexpr const char* kToolVersion = "0.1.0";

// Subcommands: generate, train, eval, gradcheck, play. Returns 0 on success,
// 1 on usage errors (flag documentation goes to `err`), 2 on runtime
// failures (including a failed gradient check).
int dispatch(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err);
int dispatch(int argc, const char* const* argv);

// Path of the manifest written next to an artifact.
std::string manifest_path(const std::string& artifact);

}  // namespace zggp
