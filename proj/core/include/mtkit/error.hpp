#pragma once

#include <stdexcept>
#include <string>

namespace mtkit {

// Raised for invalid inputs and malformed data files. Messages reference the
// offending file and line number when one is known.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& message) : std::runtime_error(message) {}
};

}  // namespace mtkit
