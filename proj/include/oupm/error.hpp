#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace oupm {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// Bad or inconsistent data; `index` is the offending sample/example when known.
class DataError : public Error {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  explicit DataError(const std::string& what, std::size_t index = npos)
      : Error(what), index_(index) {}

  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

}  // namespace oupm
