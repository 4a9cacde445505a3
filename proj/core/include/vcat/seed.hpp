#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace vcat {

using Engine = std::mt19937_64;

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Folds a sequence of 64-bit words into one seed. Task seeds are derived as
/// derive_seed({master, scenario, set, replicate}) so that every task's stream
/// depends only on its coordinates, never on scheduling.
std::uint64_t derive_seed(std::initializer_list<std::uint64_t> words) noexcept;

inline Engine make_engine(std::uint64_t seed) { return Engine(mix64(seed)); }

// Scenario identifiers used as the second coordinate of derive_seed.
namespace scenario_id {
inline constexpr std::uint64_t n_first = 1;
inline constexpr std::uint64_t sensitivity = 2;
inline constexpr std::uint64_t tuning = 3;
inline constexpr std::uint64_t imputation = 4;
inline constexpr std::uint64_t simulation = 5;
}  // namespace scenario_id

}  // namespace vcat
