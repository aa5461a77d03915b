#pragma once

#include "npgmo/config.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

namespace npgmo {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitMaxIters = 2;
inline constexpr int kExitFailure = 3;
inline constexpr int kExitConfig = 64;

struct CommandOptions {
    std::filesystem::path config;
    std::filesystem::path out = ".";
    std::optional<std::uint64_t> seed_override;
    unsigned threads = 1;
};

int exit_code(TerminalStatus status) noexcept;

/// Each command prints one summary line per run to `log` and diagnostics to
/// `err`; config problems return kExitConfig with the field path in the message.
int cmd_solve(const CommandOptions& options, std::ostream& log, std::ostream& err);
int cmd_bench(const CommandOptions& options, std::ostream& log, std::ostream& err);
int cmd_check(const CommandOptions& options, std::ostream& log, std::ostream& err);

}  // namespace npgmo
