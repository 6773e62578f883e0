#include "zggp/error.hpp"

namespace zggp {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "InvalidArgument";
    case ErrorKind::kUnknownGame: return "UnknownGame";
    case ErrorKind::kIllegalMove: return "IllegalMove";
    case ErrorKind::kNotTerminal: return "NotTerminal";
    case ErrorKind::kPermutationMismatch: return "PermutationMismatch";
    case ErrorKind::kNonTerminalRequired: return "NonTerminalRequired";
    case ErrorKind::kEvaluatorMissing: return "EvaluatorMissing";
    case ErrorKind::kEmptyTree: return "EmptyTree";
    case ErrorKind::kOddDimension: return "OddDimension";
    case ErrorKind::kShapeMismatch: return "ShapeMismatch";
    case ErrorKind::kNoGridTopology: return "NoGridTopology";
    case ErrorKind::kEmptyBatch: return "EmptyBatch";
    case ErrorKind::kCorruptModel: return "CorruptModel";
    case ErrorKind::kCorruptDataset: return "CorruptDataset";
    case ErrorKind::kIoFailure: return "IoFailure";
    case ErrorKind::kEmptyDataset: return "EmptyDataset";
    case ErrorKind::kOddGameCount: return "OddGameCount";
    case ErrorKind::kModelLoadFailure: return "ModelLoadFailure";
  }
  return "Unknown";
}

}  // namespace zggp
