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
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "raced/common.hpp"
#include "raced/identity.hpp"
#include "raced/ledger.hpp"

namespace raced::dht {

/// Identifier on the Chord circle, in [0, 2^m).
using RingId = std::uint64_t;

struct RingConfig {
  unsigned m_bits = 6;
  /// Epoch length in ticks.
  Tick delta = 100;
  /// Attested maxima are balances rounded down to a multiple of this.
  Amount max_bucket = 10;
  /// Symmetric deposit for each channel the overlay has to open.
  Amount channel_deposit = 1000;

  void validate() const;
  RingId space() const { return RingId{1} << m_bits; }
};

RingId node_id_from_address(std::string_view address, const RingConfig& cfg);

/// (node + 2^(j-1)) mod 2^m for j = 1..m.
std::vector<RingId> finger_targets(RingId node, unsigned m_bits);

/// Clockwise distance from `from` to `to`.
RingId ring_distance(RingId from, RingId to, unsigned m_bits);

/// Smallest live id strictly greater than `id`, wrapping around zero.
RingId succ_lookup(RingId id, const std::set<RingId>& ring);

/// Live id equal to or following `target`; the owner of a finger target.
RingId resolve_owner(RingId target, const std::set<RingId>& ring);

/// Keeps the first occurrence of every id.
std::vector<RingId> remove_duplicates(std::span<const RingId> stack);

Amount attestable_max(Amount lw, Amount bucket);

/// Canonical bytes both parties sign for an attestation.
Bytes attestation_message(RingId i, RingId k, Amount max, Tick tc, Tick tv);

/// Dual-signed routable-capacity attestation from RH i to finger entry k.
struct MaxAmountRecord {
  RingId i = 0;
  RingId k = 0;
  Amount max = 0;
  identity::Signature sigma_i;
  identity::Signature sigma_k;
  Tick tc = 0;
  Tick tv = 0;

  Bytes message() const { return attestation_message(i, k, max, tc, tv); }
  bool operator==(const MaxAmountRecord&) const = default;
};

struct RoutingHelper {
  RingId id = 0;
  NodeRef node = kNoNode;
  std::string address;
  std::vector<RingId> finger_raw;     ///< one resolved entry per finger target
  std::vector<RingId> finger_unique;  ///< distinct entries, self excluded
  std::map<RingId, MaxAmountRecord> attest;
};

struct Volunteer {
  NodeRef node = kNoNode;
  std::string address;
};

struct SetupReport {
  std::vector<std::pair<NodeRef, Errc>> excluded;
};

struct RefreshStats {
  std::size_t resigned_depleted = 0;
  std::size_t extended = 0;
  std::size_t replaced = 0;
  std::size_t dropped = 0;
  bool repaired = false;
};

enum class LeaveResult { left, deferred };

/// Decides whether `signer` co-signs the attestation for edge (i, k).
using CosignPolicy = std::function<bool(RingId signer, RingId i, RingId k)>;

/// Chord overlay of routing helpers. Lookups are const; setup, join, leave and
/// refresh_attestations need exclusive access to the ring.
class Ring {
 public:
  Ring(RingConfig cfg, ledger::Ledger& ledger, const identity::Directory& ids);

  SetupReport setup(std::span<const Volunteer> volunteers);

  const RingConfig& config() const { return cfg_; }
  std::size_t size() const { return members_.size(); }
  bool contains(RingId id) const { return members_.contains(id); }
  const std::set<RingId>& membership() const { return members_; }
  const RoutingHelper& helper(RingId id) const;
  std::optional<RingId> id_of(NodeRef node) const;
  std::vector<NodeRef> helper_nodes() const;
  /// Long-term key broadcast by the RH at setup.
  const identity::VerifyKey& vk_of(RingId id) const;
  std::optional<identity::VerifyKey> find_vk(RingId id) const;

  RingId succ(RingId id) const;
  std::vector<RingId> ft_retrieve(RingId i) const;
  bool ft_search(RingId i, RingId j) const;
  /// Finger entry of i with the largest clockwise distance not exceeding j's.
  RingId ft_lookup(RingId i, RingId j) const;
  /// Greedy finger walk from `from` to `to`; stops after m steps.
  std::vector<RingId> lookup_walk(RingId from, RingId to) const;

  const MaxAmountRecord* attestation(RingId i, RingId k) const;
  std::optional<ledger::ChannelId> backing_channel(RingId i, RingId k) const;

  /// Epoch work runs once per crossed boundary, even if ticks were skipped.
  RefreshStats refresh_attestations(Tick now);
  void set_cosign_policy(CosignPolicy policy) { cosign_ = std::move(policy); }

  RingId node_join(const Volunteer& v);
  LeaveResult node_leave(RingId id);
  bool repair_pending() const { return repair_pending_; }
  std::size_t deferred_leaves() const { return deferred_leaves_.size(); }

  /// `node_id,j,expected,actual` for every finger entry that disagrees with a
  /// linear-scan successor over the live membership. Empty means consistent.
  std::vector<std::string> finger_oracle_diff() const;
  /// `node_id,address,finger_ids` per RH, fingers semicolon-separated.
  void dump(std::ostream& out) const;

 private:
  RingId admit(const Volunteer& v);
  std::vector<RingId> compute_fingers(RingId id) const;
  void rebuild_fingers(RoutingHelper& rh) const;
  std::size_t channels_needed(const RoutingHelper& rh) const;
  bool ensure_channel(RingId i, RingId k);
  bool sign_record(RoutingHelper& rh, RingId k, Tick now);
  void repair(Tick now);
  bool try_leave(RingId id);
  Tick now() const { return ledger_->now(); }

  RingConfig cfg_;
  ledger::Ledger* ledger_;
  const identity::Directory* ids_;
  std::set<RingId> members_;
  std::map<RingId, RoutingHelper> helpers_;
  std::map<NodeRef, RingId> by_node_;
  std::map<RingId, identity::VerifyKey> broadcast_vk_;
  std::set<ledger::ChannelId> overlay_channels_;
  std::vector<RingId> deferred_leaves_;
  bool repair_pending_ = false;
  Tick last_refresh_ = 0;
  CosignPolicy cosign_;
};

}  // namespace raced::dht
