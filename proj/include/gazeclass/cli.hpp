#pragma once

// Stage-per-subcommand driver. Each stage reads its upstream artifact from
// the output directory and writes its own.
//
// Exit codes: 0 success, 1 usage error or unknown subcommand, 2 missing
// upstream artifact, 3 configuration validation failure, 4 runtime error.

#include <iosfwd>
#include <string>
#include <vector>

namespace gazeclass::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitMissingArtifact = 2;
inline constexpr int kExitInvalidConfig = 3;
inline constexpr int kExitFailure = 4;

const std::vector<std::string>& subcommands();

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gazeclass::cli
