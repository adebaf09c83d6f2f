#pragma once

#include <stdexcept>
#include <string>

namespace nmrt {

enum class ErrKind {
  // bvh / motion data
  MissingSection,
  ChannelMismatch,
  MalformedNumber,
  UnbalancedBraces,
  BadEncoding,
  SkeletonMismatch,
  FrameCountMismatch,
  // configuration
  SchemaError,
  UnknownJoint,
  MissingChest,
  ConfigInvalid,
  // numerics
  LengthMismatch,
  ShapeMismatch,
  NotScalar,
  AlreadyConsumed,
  EmptyCorpus,
  // metrics
  UnknownEndEffector,
  // checkpoints
  BadMagic,
  VersionUnsupported,
  PayloadTruncated,
  HeaderShapeMismatch,
  // filesystem
  DiskWrite,
  IoError,
};

const char* err_kind_name(ErrKind k);

/// All library failures are reported as Error with a machine-readable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrKind kind, const std::string& msg)
      : std::runtime_error(std::string(err_kind_name(kind)) + ": " + msg), kind_(kind) {}

  ErrKind kind() const { return kind_; }

 private:
  ErrKind kind_;
};

[[noreturn]] inline void fail(ErrKind kind, const std::string& msg) { throw Error(kind, msg); }

}  // namespace nmrt
