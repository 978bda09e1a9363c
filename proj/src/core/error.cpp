#include "jtreekit/error.hpp"

namespace jtk {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Syntax: return "SyntaxError";
    case ErrorCode::UnsupportedAtom: return "UnsupportedAtom";
    case ErrorCode::Valence: return "ValenceError";
    case ErrorCode::Kekulization: return "KekulizationError";
    case ErrorCode::WidthMismatch: return "WidthMismatch";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::UnencodableTree: return "UnencodableTree";
    case ErrorCode::DanglingPosition: return "DanglingPosition";
    case ErrorCode::UnknownJunctionId: return "UnknownJunctionId";
    case ErrorCode::MissingEOS: return "MissingEOS";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::FeatureOutOfRange: return "FeatureOutOfRange";
    case ErrorCode::BadRange: return "BadRange";
    case ErrorCode::NoValidAttachment: return "NoValidAttachment";
    case ErrorCode::EmptyTree: return "EmptyTree";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::DegenerateData: return "DegenerateData";
    case ErrorCode::MaxLenExceeded: return "MaxLenExceeded";
    case ErrorCode::Io: return "IoError";
    case ErrorCode::Config: return "ConfigError";
    case ErrorCode::MissingArtifact: return "MissingArtifact";
    case ErrorCode::Format: return "FormatError";
  }
  return "Unknown";
}

}  // namespace jtk
