#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace clir {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text. Carries the 1-based line number when known (0 otherwise).
class ParseError : public Error {
  public:
    ParseError(const std::string& source, std::size_t line, const std::string& what)
        : Error(source + (line ? ":" + std::to_string(line) : std::string{}) + ": " + what),
          line_(line) {}

    std::size_t line() const noexcept { return line_; }

  private:
    std::size_t line_;
};

/// Well-formed input that breaks a domain invariant.
class ValidationError : public Error {
  public:
    using Error::Error;
};

/// Binary file with a bad magic, version or truncated payload.
class FormatError : public Error {
  public:
    using Error::Error;
};

/// Stored codes that cannot have been produced by the encoder.
class CorruptionError : public Error {
  public:
    using Error::Error;
};

}  // namespace clir
