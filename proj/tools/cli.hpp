#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace eesim::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitValidation = 3;
inline constexpr int kExitExplosionCap = 4;
inline constexpr int kExitIo = 5;

inline constexpr const char* kVersion = "0.1.0";

// Runs one command. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

std::string sha256_file(const std::filesystem::path& path);

}  // namespace eesim::cli
