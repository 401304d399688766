#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cdvcs {

enum class ErrorCode {
  InvalidRoot,
  NoSuchBranch,
  ConflictPending,
  StaleParent,
  BranchExists,
  UnknownCommit,
  StaleMerge,
  NothingToMerge,
  MissingDependency,
  NoCommonAncestor,
  NotPresent,
  NotFound,
  IntegrityError,
  StorageError,
  ProtocolError,
  ConfigError,
  NonQuiescent,
  UnknownCrdt,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so that
// callers can branch on the kind without parsing messages.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

}  // namespace cdvcs
