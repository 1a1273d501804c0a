#pragma once

#include <stdexcept>
#include <string>

namespace morfo {

// Error taxonomy mirrored by the CLI exit codes:
//   usage -> 1, data -> 2, numeric -> 3.
class data_error : public std::runtime_error {
 public:
  explicit data_error(const std::string& msg) : std::runtime_error(msg) {}
};

class config_error : public std::runtime_error {
 public:
  explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

class numeric_error : public std::runtime_error {
 public:
  explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace morfo
