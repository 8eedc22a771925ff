#pragma once

#include <string>
#include <vector>

namespace sfolab {

constexpr const char* kArtifactVersion = "1.0.0";

// Exit codes: 0 success, 1 usage error, 2 runtime error. Diagnostics go to stderr.
int dispatch(int argc, const char* const* argv);
int dispatch(const std::vector<std::string>& args);  // args[0] is the program name

// --threads default: SFO_LAB_THREADS if set, else 1.
int default_threads();

}  // namespace sfolab
