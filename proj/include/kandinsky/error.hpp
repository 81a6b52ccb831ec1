#pragma once

#include <stdexcept>
#include <string>

namespace kandinsky {

/// Input violated a documented precondition (range, shape, config).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A byte stream could not be parsed in the expected file format.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A domain of the filtration has (numerically) vanishing area.
class DegenerateDomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace kandinsky
