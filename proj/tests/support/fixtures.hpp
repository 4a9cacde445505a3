#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "vcat/data.hpp"

namespace fixtures {

/// Schema with enrolment order, arm and outcome columns only.
inline vcat::Schema outcome_schema() {
  using vcat::ColumnKind;
  return vcat::Schema({{"order", ColumnKind::enrolment_order, {}},
                       {"arm", ColumnKind::arm, {}},
                       {"y", ColumnKind::outcome, {}}});
}

/// Treated rows first, then controls; enrolment order follows row order.
inline vcat::TrialDataset outcome_trial(const std::vector<int>& treated, const std::vector<int>& control) {
  std::vector<double> cells;
  double order = 0;
  for (int y : treated) cells.insert(cells.end(), {order++, 1.0, static_cast<double>(y)});
  for (int y : control) cells.insert(cells.end(), {order++, 0.0, static_cast<double>(y)});
  return vcat::TrialDataset(outcome_schema(), std::move(cells));
}

/// Fresh empty directory under the build tree.
inline std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::path(VCAT_TEST_TMP) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace fixtures
