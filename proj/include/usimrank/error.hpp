#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace usimrank {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file; `line()` is 1-based, 0 when not line-oriented.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Raised when materializing the k-step walks would exceed the configured budget.
class BudgetExceeded : public Error {
 public:
  BudgetExceeded(int k, const std::string& what) : Error(what), k_(k) {}
  int k() const noexcept { return k_; }

 private:
  int k_;
};

/// Possible-world enumeration refused: too many arcs.
class CapExceeded : public Error {
 public:
  using Error::Error;
};

}  // namespace usimrank
