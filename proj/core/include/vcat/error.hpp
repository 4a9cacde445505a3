#pragma once

#include <stdexcept>
#include <string>

namespace vcat {

/// Input or configuration that violates a documented contract.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An external generator executable broke the subprocess protocol.
class ProtocolError : public std::runtime_error {
 public:
  ProtocolError(const std::string& what, std::string child_stderr = {})
      : std::runtime_error(what), child_stderr_(std::move(child_stderr)) {}

  const std::string& child_stderr() const noexcept { return child_stderr_; }

 private:
  std::string child_stderr_;
};

}  // namespace vcat
