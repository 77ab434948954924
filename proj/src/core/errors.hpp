#pragma once

#include <stdexcept>
#include <string>

namespace pbench {

enum class ErrorKind {
  kRange,
  kConfig,
  kInput,
  kDegenerate,
  kPlanning,
  kIllegalMode,
  kIo,
};

const char* ErrorKindName(ErrorKind kind);

// Single exception type for the core; the kind maps 1:1 onto C API status codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error RangeError(const std::string& m) { return {ErrorKind::kRange, m}; }
inline Error ConfigError(const std::string& m) { return {ErrorKind::kConfig, m}; }
inline Error InputError(const std::string& m) { return {ErrorKind::kInput, m}; }
inline Error DegenerateError(const std::string& m) {
  return {ErrorKind::kDegenerate, m};
}
inline Error PlanningError(const std::string& m) {
  return {ErrorKind::kPlanning, m};
}
inline Error IllegalModeError(const std::string& m) {
  return {ErrorKind::kIllegalMode, m};
}
inline Error IoError(const std::string& m) { return {ErrorKind::kIo, m}; }

}  // namespace pbench
