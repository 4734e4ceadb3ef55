#pragma once

#include <stdexcept>
#include <string>

namespace rehand {

// Error taxonomy shared by the whole library. The C API maps these onto
// numeric status codes, which the CLI reuses as process exit codes.
enum class ErrorKind {
  InvalidInput,   // bad arguments, shape mismatches, malformed files
  InvalidConfig,  // rejected configuration (exit code 2)
  Numerical,      // NaN/Inf losses, divergent optimization (exit code 3)
  Geometry,       // behind-camera points, degenerate alignments
  Io,             // filesystem and codec failures
};

class RehandError : public std::runtime_error {
 public:
  RehandError(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void throw_invalid_input(const std::string& msg) {
  throw RehandError(ErrorKind::InvalidInput, msg);
}
[[noreturn]] inline void throw_invalid_config(const std::string& msg) {
  throw RehandError(ErrorKind::InvalidConfig, msg);
}
[[noreturn]] inline void throw_numerical(const std::string& msg) {
  throw RehandError(ErrorKind::Numerical, msg);
}
[[noreturn]] inline void throw_geometry(const std::string& msg) {
  throw RehandError(ErrorKind::Geometry, msg);
}
[[noreturn]] inline void throw_io(const std::string& msg) {
  throw RehandError(ErrorKind::Io, msg);
}

}  // namespace rehand
