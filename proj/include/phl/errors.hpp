#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace phl {

class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Warnings = std::vector<std::string>;

/// Appends to `sink` when given, otherwise prints to std::clog.
void warn(Warnings* sink, const std::string& message);

}  // namespace phl
