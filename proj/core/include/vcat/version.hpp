#pragma once

#include <string>

#include <nlohmann/json.hpp>

namespace vcat {

/// Library version, e.g. "0.1.0".
std::string version();

/// Versions of vcat and the libraries it was built against.
nlohmann::json build_info();

}  // namespace vcat
