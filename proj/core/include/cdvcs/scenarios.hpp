#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "cdvcs/peer.hpp"

namespace cdvcs::scenario {

struct StepCheck {
  std::string description;
  bool passed = false;
};

struct ScenarioReport {
  std::string name;
  std::uint64_t seed = 0;
  bool converged = false;
  std::size_t conflicts_observed = 0;
  std::vector<StepCheck> checks;
  /// Per peer: linearized history (short hex ids) of the scenario's main branch.
  std::map<PeerId, std::vector<std::string>> histories;
  std::map<std::string, std::int64_t> metrics;

  bool passed() const;
  void check(std::string description, bool ok) { checks.push_back({std::move(description), ok}); }

  void write_text(std::ostream& out) const;
  void write_json(std::ostream& out) const;
};

/// Shared lunch appointment edited concurrently by two peers, resolved by a
/// user merge; each peer also keeps a private appointment branch.
ScenarioReport calendar(std::uint64_t seed = 1);

/// One committing peer, `observers` read-only peers in a chain behind it.
ScenarioReport single_writer(std::size_t n_commits, std::size_t observers = 1, std::uint64_t seed = 1);

/// `requests` clients book optimistically; a moderator's pull hook admits
/// bookings to its branch only while the count stays within `capacity`.
ScenarioReport booking(std::size_t capacity, std::size_t requests, std::uint64_t seed = 1);

}  // namespace cdvcs::scenario
