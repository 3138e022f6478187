#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nosqlab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TypeError : public Error {
 public:
  using Error::Error;
};

class JsonError : public Error {
 public:
  using Error::Error;
};

// Base for parsers that can point at a byte offset in their input.
class OffsetError : public Error {
 public:
  OffsetError(const std::string& what, std::size_t offset)
      : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace nosqlab
