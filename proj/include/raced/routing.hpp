/**
 * Copyright 2026 The RACED Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "raced/common.hpp"
#include "raced/dht.hpp"
#include "raced/identity.hpp"
#include "raced/ledger.hpp"

namespace raced::routing {

using dht::RingId;
using ledger::TxId;
using PathId = std::array<std::uint8_t, 32>;

enum class TieBreak : std::uint8_t { lowest_id, seeded_random };

struct RoutingConfig {
  /// Fee each intermediary keeps.
  Amount fee = 1;
  /// Timeout step between consecutive HTLCs of one chain.
  Tick htlc_delta = 10;
  TieBreak tie_break = TieBreak::lowest_id;

  void validate() const;
};

/// Sender's request to nearRH. Carries only the temporary key.
struct PathRequest {
  TxId txid{};
  Amount amt = 0;
  identity::Signature sigma_amt;
  identity::VerifyKey vk_sender;

  Bytes signed_message() const;
};

PathRequest make_request(const identity::Identity& sender, const TxId& txid, Amount amt);
bool verify_request(const PathRequest& req);

/// Copy of one attestation as handed to the sender.
struct QTuple {
  RingId i = 0;
  RingId next = 0;
  Amount max = 0;
  identity::Signature sigma_i;
  identity::Signature sigma_next;
  Tick tc = 0;
  Tick tv = 0;

  Bytes message() const { return dht::attestation_message(i, next, max, tc, tv); }
  bool operator==(const QTuple&) const = default;
};

QTuple tuple_from(const dht::MaxAmountRecord& rec);

struct PathCandidate {
  TxId txid{};
  PathId pathid{};
  RingId start = 0;
  RingId end_rh = 0;
  std::vector<QTuple> hops;

  bool operator==(const PathCandidate&) const = default;
};

using CandidateStack = std::vector<PathCandidate>;

enum class Status : std::uint8_t { success, no_path, validation_failed, liquidity_failed, timeout };
inline constexpr std::size_t kStatusCount = 5;
const char* status_name(Status s) noexcept;

struct TransactionOutcome {
  TxId txid{};
  Status status = Status::no_path;
  std::vector<NodeRef> path;
  std::size_t path_len = 0;
  std::size_t ring_len = 0;
  Tick t_pathfind = 0;
  Tick t_route = 0;
  std::vector<std::uint64_t> disputes;
};

// Wire encodings of everything that travels beyond direct neighbours.
Bytes encode_request(const PathRequest& req);
Bytes encode_stack(const CandidateStack& stack);
CandidateStack decode_stack(ByteView raw);
Bytes encode_end_rh_list(const std::vector<RingId>& list);

/// Hop-count-shortest path from `from` to any node of `targets` where every
/// edge can carry `amt` plus the fees of all intermediaries after it.
/// `downstream` is the number of hops that follow the target on the full path.
/// Ties: larger bottleneck, then lexicographically smallest node sequence (or a
/// seeded random choice).
std::optional<std::vector<NodeRef>> find_path_to_rh(const ledger::ChannelTable& table,
                                                    NodeRef from,
                                                    const std::set<NodeRef>& targets, Amount amt,
                                                    Amount fee, std::size_t downstream,
                                                    TieBreak tie = TieBreak::lowest_id,
                                                    DetRng* rng = nullptr);

/// Feasible hop counts from every node to `to`, for a path ending at `to`.
/// Unreachable nodes hold SIZE_MAX.
std::vector<std::size_t> hop_counts_to(const ledger::ChannelTable& table, NodeRef to, Amount amt,
                                       Amount fee);

/// Two-phase ring search run by nearRH. Empty optional means the request
/// signature failed somewhere on the ring.
std::optional<CandidateStack> find_path(const dht::Ring& ring, const PathRequest& req,
                                        RingId near, DetRng& rng);

enum class DisputeReason : std::uint8_t {
  capacity = 1,
  signature = 2,
  chain = 3,
  duplicate_pathid = 4,
};

struct ValidationReport {
  std::vector<PathCandidate> accepted;
  std::vector<std::uint64_t> disputes;
  std::size_t rejected = 0;
  std::size_t expired = 0;
};

Bytes dispute_payload(DisputeReason reason, const identity::VerifyKey& vk_sender, const TxId& txid,
                      const PathId& pathid, std::uint32_t index, const QTuple* tuple);

/// Sender-side checks on a candidate stack. Every failure except an expired window is
/// written to the ledger as a dispute.
ValidationReport validate_paths(const CandidateStack& stack, const PathRequest& req, RingId near,
                                Tick now, const dht::Ring& ring, ledger::Ledger& ledger);

/// endRH with the fewest feasible hops to the receiver; ties go to the lowest
/// ring id (or a seeded random choice).
std::optional<RingId> select_end_rh(const dht::Ring& ring, const std::vector<std::size_t>& hops,
                                    const std::vector<RingId>& offered,
                                    TieBreak tie = TieBreak::lowest_id, DetRng* rng = nullptr);

/// Shortest accepted candidate ending at `end_rh`.
std::optional<PathCandidate> choose_path(const std::vector<PathCandidate>& accepted, RingId end_rh);

/// Everything the pathfinding phase settles before any funds move.
struct Plan {
  TxId txid{};
  NodeRef sender = kNoNode;
  NodeRef receiver = kNoNode;
  Amount amt = 0;
  RingId near = 0;
  RingId end = 0;
  std::vector<NodeRef> path;
  std::size_t sender_len = 0;
  std::size_t ring_len = 0;
  std::size_t receiver_len = 0;
  Tick pathfind_ticks = 0;
};

struct PlanResult {
  Status status = Status::no_path;
  std::optional<Plan> plan;
  std::vector<std::uint64_t> disputes;
  Tick pathfind_ticks = 0;
};

/// Hook standing in for a misbehaving nearRH.
using StackTamper = std::function<void(CandidateStack&)>;

class Router {
 public:
  Router(RoutingConfig cfg, ledger::Ledger& ledger, const identity::Directory& ids,
         const dht::Ring& ring);

  const RoutingConfig& config() const { return cfg_; }

  PlanResult plan(NodeRef sender, NodeRef receiver, Amount amt, DetRng& rng,
                  const StackTamper& tamper = {}) const;

 private:
  RoutingConfig cfg_;
  ledger::Ledger* ledger_;
  const identity::Directory* ids_;
  const dht::Ring* ring_;
};

enum class FaultKind : std::uint8_t { none, wrong_preimage, abandon, deplete };

struct Fault {
  FaultKind kind = FaultKind::none;
  /// Hop index of the misbehaving edge, 0-based from the sender.
  std::size_t hop = 0;
};

/// HTLC chain of one transaction. Each step() sends at most one message.
class Payment {
 public:
  Payment(ledger::Ledger& ledger, const RoutingConfig& cfg, const Plan& plan, DetRng& rng,
          Fault fault = {});

  /// Advances the chain at the ledger's current tick. Returns done().
  bool step();
  bool done() const { return phase_ == Phase::done; }
  TransactionOutcome outcome() const;
  /// Amount locked on hop t.
  Amount hop_amount(std::size_t t) const;

 private:
  enum class Phase : std::uint8_t { locking, revealing, unwinding, done };

  void fail(Status s);
  void step_lock();
  void step_reveal();
  void step_unwind();

  ledger::Ledger* ledger_;
  RoutingConfig cfg_;
  Plan plan_;
  Fault fault_;
  std::vector<std::uint8_t> preimage_;
  Digest digest_{};
  Phase phase_ = Phase::locking;
  Status status_ = Status::success;
  std::size_t next_ = 0;
  std::vector<ledger::HtlcId> locks_;
  std::vector<ledger::HtlcId> stray_;
  std::vector<std::uint64_t> disputes_;
  Tick started_ = 0;
  Tick finished_ = 0;
};

/// Runs a planned payment to completion, advancing the ledger clock.
TransactionOutcome route_payment(ledger::Ledger& ledger, const RoutingConfig& cfg,
                                 const Plan& plan, DetRng& rng, Fault fault = {});

}  // namespace raced::routing
