#pragma once

#include <stdexcept>
#include <string>

namespace jtk {

// Error categories. The numeric values are part of the C API (jtk_status).
enum class ErrorCode : int {
  Syntax = 1,
  UnsupportedAtom,
  Valence,
  Kekulization,
  WidthMismatch,
  EmptyDataset,
  UnencodableTree,
  DanglingPosition,
  UnknownJunctionId,
  MissingEOS,
  ShapeMismatch,
  NonFinite,
  FeatureOutOfRange,
  BadRange,
  NoValidAttachment,
  EmptyTree,
  EmptySet,
  DegenerateData,
  MaxLenExceeded,
  Io,
  Config,
  MissingArtifact,
  Format,
};

const char* error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace jtk
