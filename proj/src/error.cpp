#include "physio/error.hpp"

namespace physio {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid-argument";
    case ErrorKind::kDegenerateSignal: return "degenerate-signal";
    case ErrorKind::kNumericalFailure: return "numerical-failure";
    case ErrorKind::kSchemaMismatch: return "schema-mismatch";
    case ErrorKind::kDegenerateLabels: return "degenerate-labels";
    case ErrorKind::kModelIncompatible: return "model-incompatible";
    case ErrorKind::kCapacity: return "capacity";
    case ErrorKind::kDegenerateComparison: return "degenerate-comparison";
    case ErrorKind::kIngestion: return "ingestion";
    case ErrorKind::kIo: return "io";
    case ErrorKind::kConfig: return "config";
  }
  return "unknown";
}

}  // namespace physio
