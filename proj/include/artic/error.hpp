#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace artic {

/// Bad user-supplied data or configuration. The CLI maps these to exit 3.
class InputError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Text input that failed to parse; carries the 1-based line number.
class ParseError : public InputError
{
public:
  ParseError(std::size_t line, const std::string& message)
    : InputError("line " + std::to_string(line) + ": " + message), line_(line)
  {
  }

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

/// Binary input whose size or layout does not match the declared format.
class FormatError : public InputError
{
public:
  using InputError::InputError;
};

/// Stored hash does not match the data on disk.
class IntegrityError : public InputError
{
public:
  using InputError::InputError;
};

class UnsupportedVersionError : public InputError
{
public:
  using InputError::InputError;
};

}  // namespace artic
