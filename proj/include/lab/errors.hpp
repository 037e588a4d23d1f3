#pragma once

#include <stdexcept>
#include <string>

namespace lab {

// Error classes map 1:1 onto CLI exit codes (see tools/lab_main.cpp):
// validation 2, resource guard 3, numerical failure 4.

struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ResourceGuardError : std::runtime_error {
  explicit ResourceGuardError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace lab
