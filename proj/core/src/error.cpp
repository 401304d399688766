#include "cdvcs/error.hpp"

namespace cdvcs {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidRoot: return "InvalidRoot";
    case ErrorCode::NoSuchBranch: return "NoSuchBranch";
    case ErrorCode::ConflictPending: return "ConflictPending";
    case ErrorCode::StaleParent: return "StaleParent";
    case ErrorCode::BranchExists: return "BranchExists";
    case ErrorCode::UnknownCommit: return "UnknownCommit";
    case ErrorCode::StaleMerge: return "StaleMerge";
    case ErrorCode::NothingToMerge: return "NothingToMerge";
    case ErrorCode::MissingDependency: return "MissingDependency";
    case ErrorCode::NoCommonAncestor: return "NoCommonAncestor";
    case ErrorCode::NotPresent: return "NotPresent";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::IntegrityError: return "IntegrityError";
    case ErrorCode::StorageError: return "StorageError";
    case ErrorCode::ProtocolError: return "ProtocolError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::NonQuiescent: return "NonQuiescent";
    case ErrorCode::UnknownCrdt: return "UnknownCrdt";
  }
  return "Unknown";
}

}  // namespace cdvcs
