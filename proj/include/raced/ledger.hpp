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
#include <iosfwd>
#include <map>
#include <optional>
#include <shared_mutex>
#include <span>
#include <utility>
#include <vector>

#include "raced/common.hpp"
#include "raced/identity.hpp"

namespace raced::ledger {

using ChannelId = std::uint32_t;
using HtlcId = std::uint32_t;
using TxId = std::array<std::uint8_t, 32>;

enum class ChannelState : std::uint8_t { open, closed };

struct PaymentChannel {
  ChannelId id = 0;
  NodeRef a = kNoNode;
  NodeRef b = kNoNode;
  Amount lw_ab = 0;
  Amount lw_ba = 0;
  Amount locked_ab = 0;
  Amount locked_ba = 0;
  ChannelState state = ChannelState::open;
  std::uint32_t pending_htlcs = 0;

  Amount total() const { return lw_ab + lw_ba + locked_ab + locked_ba; }
  bool has(NodeRef n) const { return n == a || n == b; }
  NodeRef peer(NodeRef n) const { return n == a ? b : a; }
  /// Spendable balance of `from` toward its peer.
  Amount free_from(NodeRef from) const { return from == a ? lw_ab : lw_ba; }
  Amount locked_from(NodeRef from) const { return from == a ? locked_ab : locked_ba; }
};

enum class HtlcState : std::uint8_t { pending, fulfilled, refunded };

struct Htlc {
  HtlcId id = 0;
  ChannelId channel = 0;
  NodeRef payer = kNoNode;
  NodeRef payee = kNoNode;
  TxId txid{};
  Amount amount = 0;
  Digest digest{};
  Tick timeout = 0;
  HtlcState state = HtlcState::pending;
};

enum class RecordKind : std::uint8_t { channel_open = 1, channel_close = 2, dispute = 3 };

const char* record_kind_name(RecordKind kind) noexcept;

struct LedgerRecord {
  std::uint64_t seq = 0;
  RecordKind kind = RecordKind::dispute;
  Bytes payload;

  bool operator==(const LedgerRecord&) const = default;
};

/// Decoded channel_open / channel_close payloads.
struct ChannelRecord {
  ChannelId channel = 0;
  identity::VerifyKey vk_a;
  identity::VerifyKey vk_b;
  Amount lw_ab = 0;
  Amount lw_ba = 0;
};

ChannelRecord decode_channel_record(const LedgerRecord& record);

struct Settlement {
  ChannelId channel = 0;
  Amount lw_ab = 0;
  Amount lw_ba = 0;
  std::uint64_t seq = 0;
};

enum class FulfillResult : std::uint8_t { success, wrong_preimage };

struct BalanceEntry {
  Amount lw_ab = 0;
  Amount lw_ba = 0;
  Amount locked_ab = 0;
  Amount locked_ba = 0;

  bool operator==(const BalanceEntry&) const = default;
};
using BalanceVector = std::vector<BalanceEntry>;

/// Channel graph as seen by path searches. Only open channels appear in the
/// adjacency lists.
class ChannelTable {
 public:
  struct Adjacent {
    NodeRef peer;
    ChannelId channel;
  };

  std::span<const Adjacent> adjacent(NodeRef node) const;
  const PaymentChannel& channel(ChannelId id) const;
  std::size_t channel_count() const { return channels_.size(); }
  std::size_t node_bound() const { return adj_.size(); }
  std::optional<ChannelId> between(NodeRef x, NodeRef y) const;

 private:
  friend class Ledger;

  void ensure_node(NodeRef n);
  static std::pair<NodeRef, NodeRef> key(NodeRef x, NodeRef y) {
    return x < y ? std::pair{x, y} : std::pair{y, x};
  }

  std::vector<PaymentChannel> channels_;
  std::vector<std::vector<Adjacent>> adj_;
  std::map<std::pair<NodeRef, NodeRef>, ChannelId> open_by_pair_;
};

/// Simulated blockchain plus off-chain channel state. Every mutation takes the
/// exclusive lock, so operations on any channel are atomic and totally ordered.
class Ledger {
 public:
  explicit Ledger(Tick start = 0) : now_(start) {}

  Ledger(const Ledger&) = delete;
  Ledger& operator=(const Ledger&) = delete;

  Tick now() const;
  void advance_to(Tick t);

  /// Genesis endowment of on-chain funds; deposits are drawn from here.
  void mint(NodeRef node, Amount amount);
  Amount wallet(NodeRef node) const;

  void register_party(const identity::PublicIdentity& id);

  ChannelId pc_open(const identity::Identity& i, const identity::Identity& j, Amount lw_ij,
                    Amount lw_ji);
  Settlement pc_close(ChannelId id);

  std::optional<ChannelId> channel_between(NodeRef x, NodeRef y) const;
  PaymentChannel channel(ChannelId id) const;
  Amount free_balance(ChannelId id, NodeRef from) const;
  std::size_t channel_count() const;

  HtlcId htlc_lock(ChannelId channel, NodeRef payer, Amount amount, const Digest& digest,
                   Tick timeout, const TxId& txid);
  FulfillResult htlc_fulfill(HtlcId id, ByteView preimage);
  void htlc_refund(HtlcId id);
  Htlc htlc(HtlcId id) const;
  std::size_t pending_htlcs_of(NodeRef node) const;

  std::uint64_t bc_write(Bytes payload);
  std::vector<LedgerRecord> records() const;
  std::vector<LedgerRecord> records_of_kind(RecordKind kind) const;
  std::size_t record_count() const;
  /// Hash chain over records [0, upto).
  Digest transcript_hash(std::size_t upto) const;
  /// `seq,kind,hex(payload)` per line.
  void export_records(std::ostream& out) const;

  std::vector<identity::VerifyKey> retrieve_neighbors(const identity::VerifyKey& vk) const;

  BalanceVector balance_vector() const;
  /// Sum of every channel's free+locked total plus all wallets.
  Amount total_value() const;

  /// Runs `fn(const ChannelTable&)` under the shared lock.
  template <class F>
  decltype(auto) read(F&& fn) const {
    std::shared_lock lock(mu_);
    return fn(static_cast<const ChannelTable&>(table_));
  }

 private:
  PaymentChannel& open_channel(ChannelId id);
  std::uint64_t append(RecordKind kind, Bytes payload);

  mutable std::shared_mutex mu_;
  Tick now_;
  ChannelTable table_;
  std::vector<Htlc> htlcs_;
  std::vector<LedgerRecord> records_;
  std::vector<Amount> wallets_;
  std::map<NodeRef, identity::PublicIdentity> parties_;
  /// Identities whose link signature already checked out.
  std::map<NodeRef, identity::PublicIdentity> verified_;
  std::map<identity::VerifyKey, NodeRef> by_vk_;
};

}  // namespace raced::ledger
