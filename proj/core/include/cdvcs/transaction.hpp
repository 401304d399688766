#pragma once

#include <map>
#include <span>
#include <string>

#include "cdvcs/digest.hpp"

namespace cdvcs {

/// An application-level transaction: an operation name and its parameters.
/// Commits reference these by hash; interpretation is up to the application.
struct Transaction {
  std::string op;
  std::map<std::string, std::string> params;

  Bytes encode() const;
  static Transaction decode(std::span<const std::uint8_t> bytes);
  bool operator==(const Transaction&) const = default;
};

}  // namespace cdvcs
