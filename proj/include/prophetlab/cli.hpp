#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>

namespace prophetlab::cli {

// Exit codes of run().
inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 2;    // usage, validation and domain errors
inline constexpr int kExitNumerical = 3;  // LP or root-finding failures

// Runs one subcommand. `args` excludes the program name. Results go to --out when given,
// written through a temporary file and renamed into place, otherwise to `out`.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

void write_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace prophetlab::cli
