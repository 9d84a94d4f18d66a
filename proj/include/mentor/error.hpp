#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace mentor {

/// Exception carrying a stable, machine-readable error code
/// (e.g. "all_tokens_masked", "empty_store", "shape_mismatch").
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

}  // namespace mentor
