#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace vcat {

struct ProcessResult {
  int exit_code = 0;       // 128 + signal number when the child was killed
  std::string stderr_text;
};

/// Runs `executable args...` without a shell, inheriting the environment,
/// and waits for it. stdout is discarded; stderr is captured.
ProcessResult run_process(const std::filesystem::path& executable, const std::vector<std::string>& args);

}  // namespace vcat
