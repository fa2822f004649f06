#pragma once

#include <stdexcept>
#include <string>

namespace pgs {

/// Raised by file loaders on malformed input. Carries the 1-based line
/// number, which is also embedded in the message as "<path>:<line>:".
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& path, long line, const std::string& what)
      : std::runtime_error(path + ":" + std::to_string(line) + ": " + what),
        line_(line) {}

  long line() const noexcept { return line_; }

 private:
  long line_;
};

/// Raised when a sampled factor basis is rank deficient and least-squares
/// estimation is therefore impossible. `factor` is 1 or 2.
class SingularSystemError : public std::runtime_error {
 public:
  SingularSystemError(int factor, const std::string& what)
      : std::runtime_error("factor " + std::to_string(factor) + ": " + what),
        factor_(factor) {}

  int factor() const noexcept { return factor_; }

 private:
  int factor_;
};

}  // namespace pgs
