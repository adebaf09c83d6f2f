#include "nmrt/errors.hpp"

namespace nmrt {

const char* err_kind_name(ErrKind k) {
  switch (k) {
    case ErrKind::MissingSection: return "MissingSection";
    case ErrKind::ChannelMismatch: return "ChannelMismatch";
    case ErrKind::MalformedNumber: return "MalformedNumber";
    case ErrKind::UnbalancedBraces: return "UnbalancedBraces";
    case ErrKind::BadEncoding: return "BadEncoding";
    case ErrKind::SkeletonMismatch: return "SkeletonMismatch";
    case ErrKind::FrameCountMismatch: return "FrameCountMismatch";
    case ErrKind::SchemaError: return "SchemaError";
    case ErrKind::UnknownJoint: return "UnknownJoint";
    case ErrKind::MissingChest: return "MissingChest";
    case ErrKind::ConfigInvalid: return "ConfigInvalid";
    case ErrKind::LengthMismatch: return "LengthMismatch";
    case ErrKind::ShapeMismatch: return "ShapeMismatch";
    case ErrKind::NotScalar: return "NotScalar";
    case ErrKind::AlreadyConsumed: return "AlreadyConsumed";
    case ErrKind::EmptyCorpus: return "EmptyCorpus";
    case ErrKind::UnknownEndEffector: return "UnknownEndEffector";
    case ErrKind::BadMagic: return "BadMagic";
    case ErrKind::VersionUnsupported: return "VersionUnsupported";
    case ErrKind::PayloadTruncated: return "PayloadTruncated";
    case ErrKind::HeaderShapeMismatch: return "HeaderShapeMismatch";
    case ErrKind::DiskWrite: return "DiskWrite";
    case ErrKind::IoError: return "IoError";
  }
  return "Error";
}

}  // namespace nmrt
