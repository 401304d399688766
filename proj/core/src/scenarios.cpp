#include "cdvcs/scenarios.hpp"

#include <algorithm>
#include <ostream>
#include <set>

#include <nlohmann/json.hpp>

#include "cdvcs/error.hpp"
#include "cdvcs/simnet.hpp"
#include "cdvcs/transaction.hpp"

namespace cdvcs::scenario {
namespace {

constexpr Tick kBudget = 100'000;

Bytes txn(std::string op, std::map<std::string, std::string> params) {
  return Transaction{std::move(op), std::move(params)}.encode();
}

CommitNode root_node(const std::string& name) { return CommitNode{{}, {}, {{"name", name}}}; }

// Visible history of a branch: each head's linearization in id order, first
// occurrence wins.
std::vector<CommitId> branch_history(const CdvcsState& state, const BranchId& branch) {
  std::vector<CommitId> out;
  std::set<CommitId> seen;
  for (const auto& h : state.heads(branch)) {
    for (const auto& c : commit_history(state.graph(), h)) {
      if (seen.insert(c).second) out.push_back(c);
    }
  }
  return out;
}

std::vector<std::string> short_ids(const std::vector<CommitId>& ids) {
  std::vector<std::string> out;
  for (const auto& c : ids) out.push_back(c.short_hex());
  return out;
}

std::vector<Transaction> transactions_of(const ValueStore& store, const CommitId& c) {
  std::vector<Transaction> out;
  if (!store.has(c)) return out;
  const auto node = CommitNode::decode(store.get(c));
  for (const auto& ref : node.txn_refs) out.push_back(Transaction::decode(store.get(ref)));
  return out;
}

const CommitId& only_head(const CdvcsState& state, const BranchId& branch) {
  const auto& heads = state.heads(branch);
  if (heads.size() != 1) throw Error(ErrorCode::ConflictPending, branch + " has " + std::to_string(heads.size()) + " heads");
  return *heads.begin();
}

}  // namespace

bool ScenarioReport::passed() const {
  return converged && std::all_of(checks.begin(), checks.end(), [](const StepCheck& c) { return c.passed; });
}

void ScenarioReport::write_text(std::ostream& out) const {
  out << "scenario " << name << " seed " << seed << '\n';
  for (const auto& c : checks) out << (c.passed ? "  ok   " : "  FAIL ") << c.description << '\n';
  out << "  converged: " << (converged ? "yes" : "no") << '\n';
  out << "  conflicts observed: " << conflicts_observed << '\n';
  for (const auto& [k, v] : metrics) out << "  " << k << ": " << v << '\n';
  for (const auto& [peer, hist] : histories) {
    out << "  history " << peer << ':';
    for (const auto& h : hist) out << ' ' << h;
    out << '\n';
  }
  out << (passed() ? "PASSED" : "FAILED") << '\n';
}

void ScenarioReport::write_json(std::ostream& out) const {
  nlohmann::json j;
  j["name"] = name;
  j["seed"] = seed;
  j["converged"] = converged;
  j["conflicts_observed"] = conflicts_observed;
  j["passed"] = passed();
  j["checks"] = nlohmann::json::array();
  for (const auto& c : checks) j["checks"].push_back({{"description", c.description}, {"passed", c.passed}});
  j["histories"] = histories;
  j["metrics"] = metrics;
  out << j.dump(2) << '\n';
}

ScenarioReport calendar(std::uint64_t seed) {
  const CrdtId cal = "calendar";
  const BranchId lunch = "lunch";
  const std::vector<std::pair<PeerId, BranchId>> people = {{"alice", "alice/work"}, {"bob", "bob/soccer"}};

  ScenarioReport report;
  report.name = "calendar";
  report.seed = seed;

  sim::Simnet net({.seed = seed, .latency_min = 1, .latency_max = 3, .drop_prob = 0.0, .partitions = {}});
  const auto root = root_node("calendar");
  for (const auto& [p, priv] : people) {
    net.add_peer(p).create_cdvcs(cal, root, lunch);
    net.local(p, cal, upstream::Branch{priv, root.id()});
  }

  // Every (peer, branch) pair ever seen with more than one head.
  std::set<Heads> conflicted_sets;
  std::size_t private_conflicts = 0;
  net.set_observer([&](sim::Simnet& n) {
    for (const auto& p : n.peer_ids()) {
      const auto& st = n.peer(p).cdvcs(cal);
      for (const auto& [b, heads] : st.branches()) {
        if (heads.size() < 2) continue;
        conflicted_sets.insert(heads);
        if (b != lunch) ++private_conflicts;
      }
    }
  });

  // Offline edits: private appointments and two different lunch times.
  net.local("alice", cal, upstream::Commit{"alice/work", {txn("set", {{"what", "standup"}, {"time", "9am"}})}, {}});
  net.local("bob", cal, upstream::Commit{"bob/soccer", {txn("set", {{"what", "soccer"}, {"time", "6pm"}})}, {}});
  net.local("alice", cal, upstream::Commit{lunch, {txn("set", {{"what", "lunch"}, {"time", "1pm"}})}, {}});
  net.local("bob", cal, upstream::Commit{lunch, {txn("set", {{"what", "lunch"}, {"time", "2pm"}})}, {}});
  const CommitId alice_lunch = only_head(net.peer("alice").cdvcs(cal), lunch);
  const CommitId bob_lunch = only_head(net.peer("bob").cdvcs(cal), lunch);

  net.connect("alice", "bob");
  const auto first = net.run_until_quiescent(kBudget);

  const Heads both{alice_lunch, bob_lunch};
  for (const auto& [p, priv] : people) {
    const auto c = conflicts(net.peer(p).cdvcs(cal), lunch);
    report.check(p + " sees the lunch conflict", c && *c == both);
  }

  // Alice resolves, keeping her time.
  net.local("alice", cal, upstream::Merge{lunch, {txn("set", {{"what", "lunch"}, {"time", "1pm"}})}, {}, {}});
  const auto second = net.run_until_quiescent(kBudget);

  const auto& a = net.peer("alice").cdvcs(cal);
  const auto& b = net.peer("bob").cdvcs(cal);
  report.converged = a.encode() == b.encode();
  report.conflicts_observed = conflicted_sets.size();

  const CommitId merged = only_head(a, lunch);
  for (const auto& [p, priv] : people) {
    const auto& st = net.peer(p).cdvcs(cal);
    const auto hist = branch_history(st, lunch);
    report.histories[p] = short_ids(hist);
    report.check(p + " has a single lunch head", st.heads(lunch) == Heads{merged});
    const bool keeps_both = std::find(hist.begin(), hist.end(), alice_lunch) != hist.end() &&
                            std::find(hist.begin(), hist.end(), bob_lunch) != hist.end();
    report.check(p + " history keeps both lunch edits", keeps_both);
    std::string time;
    for (const auto& c : hist) {
      for (const auto& t : transactions_of(net.peer(p).store(), c)) {
        if (t.op == "set") time = t.params.at("time");
      }
    }
    report.check(p + " reads lunch at 1pm", time == "1pm");
    for (const auto& [q, other_priv] : people) {
      report.check(p + " holds " + other_priv + " without conflict",
                   st.has_branch(other_priv) && st.heads(other_priv).size() == 1);
    }
  }
  report.check("lunch histories identical", report.histories["alice"] == report.histories["bob"]);
  report.check("private branches never conflicted", private_conflicts == 0);
  report.check("exactly one conflict observed", conflicted_sets.size() == 1);

  report.metrics["ticks"] = static_cast<std::int64_t>(net.now());
  report.metrics["events"] = static_cast<std::int64_t>(first.events + second.events);
  report.metrics["messages"] = static_cast<std::int64_t>(net.counters().delivered);
  return report;
}

ScenarioReport single_writer(std::size_t n_commits, std::size_t observers, std::uint64_t seed) {
  if (observers == 0) throw Error(ErrorCode::ConfigError, "need at least one observer");
  const CrdtId doc = "log";
  const BranchId main = "main";

  ScenarioReport report;
  report.name = "single-writer";
  report.seed = seed;

  sim::Simnet net({.seed = seed, .latency_min = 1, .latency_max = 4, .drop_prob = 0.0, .partitions = {}});
  const auto root = root_node("log");
  std::vector<PeerId> ids{"writer"};
  for (std::size_t i = 1; i <= observers; ++i) ids.push_back("observer-" + std::to_string(i));
  for (const auto& id : ids) net.add_peer(id).create_cdvcs(doc, root, main);
  for (std::size_t i = 1; i < ids.size(); ++i) net.connect(ids[i - 1], ids[i]);
  net.run_until_quiescent(kBudget);

  std::size_t conflicted_events = 0;
  net.set_observer([&](sim::Simnet& n) {
    for (const auto& id : ids) {
      if (n.peer(id).cdvcs(doc).heads(main).size() != 1) ++conflicted_events;
    }
  });

  sim::Rng rng(seed);
  for (std::size_t i = 0; i < n_commits; ++i) {
    net.local("writer", doc, upstream::Commit{main, {txn("append", {{"line", std::to_string(i)}})}, {}});
    net.run_until(net.now() + rng.below(3));
  }
  net.run_until_quiescent(kBudget);

  const Bytes reference = net.peer("writer").cdvcs(doc).encode();
  report.converged = true;
  for (const auto& id : ids) {
    const auto& st = net.peer(id).cdvcs(doc);
    report.converged = report.converged && st.encode() == reference;
    const auto hist = branch_history(st, main);
    report.histories[id] = short_ids(hist);
    report.check(id + " history has " + std::to_string(n_commits + 1) + " commits", hist.size() == n_commits + 1);
  }
  for (const auto& id : ids) {
    report.check(id + " history matches writer", report.histories[id] == report.histories["writer"]);
  }
  report.check("no conflict at any event", conflicted_events == 0);
  report.conflicts_observed = conflicted_events;
  report.metrics["ticks"] = static_cast<std::int64_t>(net.now());
  report.metrics["messages"] = static_cast<std::int64_t>(net.counters().delivered);
  return report;
}

ScenarioReport booking(std::size_t capacity, std::size_t requests, std::uint64_t seed) {
  const CrdtId hotel = "hotel";
  const BranchId booked = "booked";
  const PeerId moderator = "moderator";

  ScenarioReport report;
  report.name = "booking";
  report.seed = seed;

  sim::Simnet net({.seed = seed, .latency_min = 1, .latency_max = 6, .drop_prob = 0.0, .partitions = {}});
  const auto root = root_node("hotel");
  std::vector<PeerId> clients;
  for (std::size_t i = 1; i <= requests; ++i) clients.push_back("client-" + std::to_string(i));
  net.add_peer(moderator).create_cdvcs(hotel, root, booked);
  for (const auto& c : clients) {
    net.add_peer(c).create_cdvcs(hotel, root, booked);
    net.connect(moderator, c);
  }
  net.run_until_quiescent(kBudget);

  auto guests_booked = [&](const CdvcsState& st, const ValueStore& store) {
    std::set<std::string> guests;
    for (const auto& c : branch_history(st, booked)) {
      for (const auto& t : transactions_of(store, c)) {
        if (t.op == "book") guests.insert(t.params.at("guest"));
      }
    }
    return guests;
  };

  // Order in which booking commits reach the moderator, and what it decided.
  std::vector<std::string> arrivals;
  net.peer(moderator).add_pull_hook([&](const HookContext& ctx) {
    const auto* op = std::get_if<DownstreamOp>(&ctx.op);
    if (!op || op->branch != booked) return HookDecision::accept();
    const auto& current = std::get<CdvcsState>(ctx.state);
    const auto before = guests_booked(current, ctx.store);
    const auto after = guests_booked(apply_downstream(current, *op), ctx.store);
    for (const auto& g : after) {
      if (!before.contains(g) && std::find(arrivals.begin(), arrivals.end(), g) == arrivals.end()) arrivals.push_back(g);
    }
    if (after.size() > capacity) return HookDecision::reject();
    return HookDecision::accept();
  });

  std::size_t max_booked = 0;
  std::size_t conflicts_seen = 0;
  net.set_observer([&](sim::Simnet& n) {
    auto& mod = n.peer(moderator);
    max_booked = std::max(max_booked, guests_booked(mod.cdvcs(hotel), mod.store()).size());
    if (mod.cdvcs(hotel).heads(booked).size() > 1) {
      ++conflicts_seen;
      n.local(moderator, hotel, upstream::Merge{booked, {}, {}, {}});
    }
  });

  std::map<PeerId, CommitId> requested;
  for (const auto& c : clients) {
    net.local(c, hotel, upstream::Commit{booked, {txn("book", {{"guest", c}, {"room", "1"}})}, {}});
    requested[c] = only_head(net.peer(c).cdvcs(hotel), booked);
  }
  const auto run = net.run_until_quiescent(kBudget);

  auto& mod = net.peer(moderator);
  const auto& final_state = mod.cdvcs(hotel);
  const auto final_guests = guests_booked(final_state, mod.store());
  const std::size_t expected = std::min(capacity, requests);

  report.check("moderator never holds more than " + std::to_string(capacity) + " bookings", max_booked <= capacity);
  report.check("moderator holds " + std::to_string(expected) + " bookings", final_guests.size() == expected);
  report.check("moderator branch has a single head", final_state.heads(booked).size() == 1);
  const std::set<std::string> first_arrivals(arrivals.begin(),
                                             arrivals.begin() + static_cast<std::ptrdiff_t>(std::min(expected, arrivals.size())));
  report.check("earliest arrivals are the admitted ones", final_guests == first_arrivals);
  report.check("every request reached the moderator", arrivals.size() == requests);

  // Moderator decisions reach every client; rejected clients keep their own commit.
  bool reached = true;
  for (const auto& c : clients) {
    const auto& st = net.peer(c).cdvcs(hotel);
    for (const auto& h : final_state.heads(booked)) reached = reached && st.graph().contains(h);
    const bool accepted = final_guests.contains(c);
    if (!accepted) {
      report.check(c + " (rejected) keeps its booking commit", st.graph().contains(requested[c]) &&
                                                                    !final_state.graph().contains(requested[c]));
    } else {
      report.check(c + " (accepted) matches the moderator", st.heads(booked) == final_state.heads(booked));
    }
    report.histories[c] = short_ids(branch_history(st, booked));
  }
  report.histories[moderator] = short_ids(branch_history(final_state, booked));
  report.converged = reached;
  report.conflicts_observed = conflicts_seen;

  report.metrics["capacity"] = static_cast<std::int64_t>(capacity);
  report.metrics["requests"] = static_cast<std::int64_t>(requests);
  report.metrics["accepted"] = static_cast<std::int64_t>(final_guests.size());
  report.metrics["rejected"] = static_cast<std::int64_t>(requests - final_guests.size());
  report.metrics["rejected_ops"] = static_cast<std::int64_t>(mod.stats().rejected_ops);
  report.metrics["ticks"] = static_cast<std::int64_t>(run.ticks());
  return report;
}

}  // namespace cdvcs::scenario
