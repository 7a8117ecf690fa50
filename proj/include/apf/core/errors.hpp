#pragma once

#include <stdexcept>
#include <string>

namespace apf {

/// Bad argument to an operation (negative radius, threshold out of range, ...).
class InvalidArgument : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Two masks or volumes were combined although their grids differ.
class GeometryMismatch : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Singular or malformed affine transform.
class InvalidTransform : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Input document parsed fine but violates a content rule
/// (empty box, duplicate id, confidence outside [0,1], ...).
class ValidationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed file content. Carries the byte offset when one is meaningful.
class ParseError : public std::runtime_error {
public:
  explicit ParseError(const std::string &what, long long byte_offset = -1)
      : std::runtime_error(byte_offset >= 0 ? what + " (at byte " + std::to_string(byte_offset) + ")" : what),
        offset_(byte_offset) {}

  long long byte_offset() const noexcept { return offset_; }

private:
  long long offset_;
};

/// File system failure (missing file, unwritable directory, ...).
class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace apf
