#pragma once

#include <stdexcept>
#include <string>

namespace guiyun {

/// Base for every domain error. code() is a short machine-readable reason
/// (e.g. "line_length", "no_template") that the HTTP layer forwards verbatim.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

}  // namespace guiyun
