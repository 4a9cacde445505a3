#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

namespace vcat::app {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;
inline constexpr int kExitProtocol = 3;

/// Values given on the command line; each one replaces the matching config key.
struct Overrides {
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> jobs;
  std::optional<std::filesystem::path> out;
  std::optional<std::filesystem::path> data;
  std::optional<std::filesystem::path> schema;
  std::optional<std::size_t> n;
  std::optional<std::size_t> k;
  std::optional<std::size_t> l;
  std::optional<std::string> generator;
};

/// Subcommand names: n-first, sensitivity, simulate, score, tune, impute.
bool is_command(const std::string& name);

/// Config file merged with the overrides. Paths from the file are resolved
/// against the file's directory, paths from flags against the working
/// directory. The seed falls back to VCAT_SEED, then 0.
nlohmann::json effective_config(const std::string& command, const Overrides& overrides);

/// Runs one subcommand and maps failures to exit codes, writing messages to `err`.
int run(const std::string& command, const Overrides& overrides, std::ostream& err);

/// 64-bit FNV-1a of the text, as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

}  // namespace vcat::app
