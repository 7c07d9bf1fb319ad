#pragma once

#include <stdexcept>
#include <string>

namespace lswjp {

// Bad configuration or call arguments. The CLI maps this to exit code 2.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Unreadable, malformed or insufficient input data. Exit code 3.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Mismatched matrix/vector widths between pipeline stages.
class ShapeError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Non-finite loss or parameters during training. Exit code 4.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lswjp
