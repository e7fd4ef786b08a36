#pragma once

#include <stdexcept>
#include <string>

namespace cmp {

// Bad input: malformed config, infeasible constraints, invalid geometry.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A numerical method failed to meet its tolerance within its iteration cap.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cmp
