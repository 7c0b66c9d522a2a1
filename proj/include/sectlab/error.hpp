#pragma once

#include <stdexcept>
#include <string>

namespace sectlab {

/// Bad arguments: dimension mismatches, out-of-range parameters, malformed specs.
class InputError : public std::invalid_argument {
 public:
  explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

/// An enumeration or search would exceed its configured budget.
class SizeError : public std::runtime_error {
 public:
  explicit SizeError(const std::string& what) : std::runtime_error(what) {}
};

class ConditioningError : public std::runtime_error {
 public:
  explicit ConditioningError(const std::string& what) : std::runtime_error(what) {}
};

/// The requested set is empty, e.g. T intersected with a sphere larger than T.
class EmptySetError : public InputError {
 public:
  explicit EmptySetError(const std::string& what) : InputError(what) {}
};

/// Process exit codes used by the CLI.
enum class ExitCode : int {
  kSuccess = 0,
  kInputError = 1,
  kBudgetError = 2,
  kVerificationFailure = 3,
};

namespace detail {
inline void require(bool cond, const std::string& msg) {
  if (!cond) throw InputError(msg);
}
}  // namespace detail

}  // namespace sectlab
