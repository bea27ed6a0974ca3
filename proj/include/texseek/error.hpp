#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace texseek {

// Base of every data-level failure. The CLI maps these to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " at byte offset " + std::to_string(offset)), offset_(offset) {}

  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class CapacityError : public Error {
 public:
  using Error::Error;
};

class PayloadError : public Error {
 public:
  enum class Kind { NotStego, Corrupted, ShortRead };

  PayloadError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

class ProtocolError : public Error {
 public:
  using Error::Error;
};

}  // namespace texseek
