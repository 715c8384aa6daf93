#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace mmrag {

// Runtime failure carrying a stable machine-readable code. The CLI prints
// the code verbatim in its single-line error output, so codes are part of
// the external contract and must not be renamed casually.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

}  // namespace mmrag
