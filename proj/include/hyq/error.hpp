#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hyq {

/// Root of all errors raised by the library. The CLI maps NumericError to exit
/// code 2 and everything else to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text. `position` is a 1-based line number for TSV files and
/// a 0-based byte offset for query strings.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : Error(what), position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

class LookupError : public Error {
 public:
  using Error::Error;
};

class BoundsError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class SamplingError : public Error {
 public:
  using Error::Error;
};

/// Raised by the brute-force oracle when an instance exceeds its size guard.
class RefusalError : public Error {
 public:
  using Error::Error;
};

}  // namespace hyq
