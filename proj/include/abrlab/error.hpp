#pragma once

#include <stdexcept>
#include <string>

namespace abrlab {

// Error categories map onto CLI exit codes: config 2, data 3, invariant 4.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InvariantError : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

}  // namespace abrlab
