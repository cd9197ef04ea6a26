#pragma once

#include <stdexcept>
#include <string>

namespace tghcp {

/// Base class for every error raised by the toolkit. `kind()` is a stable
/// short tag used by the CLI when it prints a structured error line.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual const char* kind() const noexcept { return "error"; }
};

#define TGHCP_DEFINE_ERROR(Name, tag)                              \
  class Name : public Error {                                      \
   public:                                                         \
    explicit Name(const std::string& what) : Error(what) {}        \
    const char* kind() const noexcept override { return tag; }     \
  };

TGHCP_DEFINE_ERROR(ConfigError, "config")
TGHCP_DEFINE_ERROR(NumericError, "numeric")
TGHCP_DEFINE_ERROR(UsageError, "usage")
TGHCP_DEFINE_ERROR(ValidationError, "validation")
TGHCP_DEFINE_ERROR(AssemblyError, "assembly")
TGHCP_DEFINE_ERROR(SolverError, "solver")
TGHCP_DEFINE_ERROR(DegeneratePatchError, "degenerate-patch")
TGHCP_DEFINE_ERROR(SingularConstraintError, "singular-constraint")
TGHCP_DEFINE_ERROR(IoError, "io")

#undef TGHCP_DEFINE_ERROR

}  // namespace tghcp
