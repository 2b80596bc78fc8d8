#pragma once

#include <stdexcept>
#include <string>

namespace apcdet {

// Raised for malformed inputs, files, or configuration. The CLI maps these
// to exit code 1; everything else is a runtime error (exit code 2).
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace apcdet
