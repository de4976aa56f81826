#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace physio {

enum class ErrorKind {
  kInvalidArgument,
  kDegenerateSignal,
  kNumericalFailure,
  kSchemaMismatch,
  kDegenerateLabels,
  kModelIncompatible,
  kCapacity,
  kDegenerateComparison,
  kIngestion,
  kIo,
  kConfig,
};

std::string_view to_string(ErrorKind kind);

// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  // Validation failures map to CLI exit code 1, everything else to 2.
  bool is_validation() const noexcept {
    switch (kind_) {
      case ErrorKind::kInvalidArgument:
      case ErrorKind::kSchemaMismatch:
      case ErrorKind::kIngestion:
      case ErrorKind::kConfig:
        return true;
      default:
        return false;
    }
  }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool ok, ErrorKind kind, const std::string& what) {
  if (!ok) fail(kind, what);
}

}  // namespace physio
