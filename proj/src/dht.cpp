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
#include "raced/dht.hpp"

#include <algorithm>
#include <ostream>
#include <sstream>

namespace raced::dht {

void RingConfig::validate() const {
  if (m_bits < 3 || m_bits > 63) throw Error(Errc::config, "m_bits must lie in [3, 63]");
  if (delta < 1) throw Error(Errc::config, "epoch length delta must be >= 1");
  if (max_bucket < 1) throw Error(Errc::config, "max bucket must be >= 1");
  if (channel_deposit < 0) throw Error(Errc::config, "channel deposit must be >= 0");
}

RingId node_id_from_address(std::string_view address, const RingConfig& cfg) {
  if (address.empty()) throw Error(Errc::invalid_argument, "empty address");
  auto digest = sha256(ByteView(reinterpret_cast<const std::uint8_t*>(address.data()), address.size()));
  RingId v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | digest[static_cast<std::size_t>(i)];
  return v & (cfg.space() - 1);
}

std::vector<RingId> finger_targets(RingId node, unsigned m_bits) {
  const RingId mask = (RingId{1} << m_bits) - 1;
  std::vector<RingId> out;
  out.reserve(m_bits);
  for (unsigned j = 1; j <= m_bits; ++j) {
    out.push_back((node + (RingId{1} << (j - 1))) & mask);
  }
  return out;
}

RingId ring_distance(RingId from, RingId to, unsigned m_bits) {
  const RingId mask = (RingId{1} << m_bits) - 1;
  return (to - from) & mask;
}

RingId succ_lookup(RingId id, const std::set<RingId>& ring) {
  if (ring.empty()) throw Error(Errc::ring_empty, "successor lookup on an empty ring");
  auto it = ring.upper_bound(id);
  return it == ring.end() ? *ring.begin() : *it;
}

RingId resolve_owner(RingId target, const std::set<RingId>& ring) {
  if (ring.empty()) throw Error(Errc::ring_empty, "owner lookup on an empty ring");
  auto it = ring.lower_bound(target);
  return it == ring.end() ? *ring.begin() : *it;
}

std::vector<RingId> remove_duplicates(std::span<const RingId> stack) {
  std::vector<RingId> out;
  std::set<RingId> seen;
  for (auto id : stack) {
    if (seen.insert(id).second) out.push_back(id);
  }
  return out;
}

Amount attestable_max(Amount lw, Amount bucket) {
  if (lw <= 0) return 0;
  return (lw / bucket) * bucket;
}

Bytes attestation_message(RingId i, RingId k, Amount max, Tick tc, Tick tv) {
  Encoder enc;
  enc.str("max-amount").u64(i).u64(k).i64(max).i64(tc).i64(tv);
  return std::move(enc).take();
}

Ring::Ring(RingConfig cfg, ledger::Ledger& ledger, const identity::Directory& ids)
    : cfg_(cfg), ledger_(&ledger), ids_(&ids) {
  cfg_.validate();
}

const RoutingHelper& Ring::helper(RingId id) const {
  auto it = helpers_.find(id);
  if (it == helpers_.end()) throw Error(Errc::lookup, "unknown routing helper " + std::to_string(id));
  return it->second;
}

std::optional<RingId> Ring::id_of(NodeRef node) const {
  auto it = by_node_.find(node);
  if (it == by_node_.end()) return std::nullopt;
  return it->second;
}

std::vector<NodeRef> Ring::helper_nodes() const {
  std::vector<NodeRef> out;
  for (const auto& [id, rh] : helpers_) out.push_back(rh.node);
  return out;
}

const identity::VerifyKey& Ring::vk_of(RingId id) const {
  auto it = broadcast_vk_.find(id);
  if (it == broadcast_vk_.end()) throw Error(Errc::lookup, "no key broadcast for " + std::to_string(id));
  return it->second;
}

std::optional<identity::VerifyKey> Ring::find_vk(RingId id) const {
  auto it = broadcast_vk_.find(id);
  if (it == broadcast_vk_.end()) return std::nullopt;
  return it->second;
}

RingId Ring::succ(RingId id) const { return succ_lookup(id, members_); }

std::vector<RingId> Ring::ft_retrieve(RingId i) const { return helper(i).finger_raw; }

bool Ring::ft_search(RingId i, RingId j) const {
  const auto& raw = helper(i).finger_raw;
  return std::find(raw.begin(), raw.end(), j) != raw.end();
}

RingId Ring::ft_lookup(RingId i, RingId j) const {
  const auto& rh = helper(i);
  const auto target = ring_distance(i, j, cfg_.m_bits);
  std::optional<RingId> best;
  RingId best_dist = 0;
  std::optional<RingId> first;
  for (auto e : rh.finger_raw) {
    if (e == i) continue;
    if (!first) first = e;
    auto d = ring_distance(i, e, cfg_.m_bits);
    if (d <= target && (!best || d > best_dist)) {
      best = e;
      best_dist = d;
    }
  }
  if (best) return *best;
  if (first) return *first;
  throw Error(Errc::overlay_degenerate, "finger table of " + std::to_string(i) + " is empty");
}

std::vector<RingId> Ring::lookup_walk(RingId from, RingId to) const {
  std::vector<RingId> path{from};
  auto cur = from;
  for (unsigned step = 0; step < cfg_.m_bits && cur != to; ++step) {
    auto next = ft_lookup(cur, to);
    if (next == cur || !contains(next)) break;
    path.push_back(next);
    cur = next;
  }
  return path;
}

const MaxAmountRecord* Ring::attestation(RingId i, RingId k) const {
  auto it = helpers_.find(i);
  if (it == helpers_.end()) return nullptr;
  auto rec = it->second.attest.find(k);
  return rec == it->second.attest.end() ? nullptr : &rec->second;
}

std::optional<ledger::ChannelId> Ring::backing_channel(RingId i, RingId k) const {
  auto a = helpers_.find(i);
  auto b = helpers_.find(k);
  if (a == helpers_.end() || b == helpers_.end()) return std::nullopt;
  return ledger_->channel_between(a->second.node, b->second.node);
}

std::vector<RingId> Ring::compute_fingers(RingId id) const {
  std::vector<RingId> out;
  for (auto t : finger_targets(id, cfg_.m_bits)) out.push_back(resolve_owner(t, members_));
  return out;
}

void Ring::rebuild_fingers(RoutingHelper& rh) const {
  rh.finger_raw = compute_fingers(rh.id);
  rh.finger_unique.clear();
  for (auto k : remove_duplicates(rh.finger_raw)) {
    if (k != rh.id) rh.finger_unique.push_back(k);
  }
}

RingId Ring::admit(const Volunteer& v) {
  auto id = node_id_from_address(v.address, cfg_);
  if (members_.contains(id)) {
    throw Error(Errc::collision, "node id " + std::to_string(id) + " already taken");
  }
  if (by_node_.contains(v.node)) {
    throw Error(Errc::duplicate, "node " + std::to_string(v.node) + " is already a routing helper");
  }
  const auto& identity = ids_->at(v.node);
  RoutingHelper rh;
  rh.id = id;
  rh.node = v.node;
  rh.address = v.address;
  members_.insert(id);
  helpers_.emplace(id, std::move(rh));
  by_node_.emplace(v.node, id);
  broadcast_vk_[id] = identity.vk;
  return id;
}

bool Ring::ensure_channel(RingId i, RingId k) {
  const auto& a = helpers_.at(i);
  const auto& b = helpers_.at(k);
  if (ledger_->channel_between(a.node, b.node)) return true;
  try {
    auto ch = ledger_->pc_open(ids_->at(a.node), ids_->at(b.node), cfg_.channel_deposit,
                               cfg_.channel_deposit);
    overlay_channels_.insert(ch);
    return true;
  } catch (const Error& e) {
    if (e.code() == Errc::insufficient_funds) return false;
    throw;
  }
}

bool Ring::sign_record(RoutingHelper& rh, RingId k, Tick now) {
  auto ch = backing_channel(rh.id, k);
  if (!ch) {
    rh.attest.erase(k);
    return false;
  }
  MaxAmountRecord rec;
  rec.i = rh.id;
  rec.k = k;
  rec.max = attestable_max(ledger_->free_balance(*ch, rh.node), cfg_.max_bucket);
  rec.tc = now;
  rec.tv = now + cfg_.delta;
  if (cosign_ && (!cosign_(rh.id, rh.id, k) || !cosign_(k, rh.id, k))) {
    rh.attest.erase(k);
    return false;
  }
  auto msg = rec.message();
  rec.sigma_i = identity::sign_detached(ids_->at(rh.node).sk, msg);
  rec.sigma_k = identity::sign_detached(ids_->at(helpers_.at(k).node).sk, msg);
  rh.attest[k] = rec;
  return true;
}

std::size_t Ring::channels_needed(const RoutingHelper& rh) const {
  std::set<RingId> peers;
  for (auto k : rh.finger_unique) peers.insert(k);
  for (const auto& [id, other] : helpers_) {
    if (id == rh.id) continue;
    if (std::find(other.finger_unique.begin(), other.finger_unique.end(), rh.id) !=
        other.finger_unique.end()) {
      peers.insert(id);
    }
  }
  std::size_t n = 0;
  for (auto k : peers) {
    if (!ledger_->channel_between(rh.node, helpers_.at(k).node)) ++n;
  }
  return n;
}

SetupReport Ring::setup(std::span<const Volunteer> volunteers) {
  if (volunteers.size() < 2) {
    throw Error(Errc::config, "DHT setup needs at least two volunteers");
  }
  SetupReport report;
  for (const auto& v : volunteers) {
    try {
      admit(v);
    } catch (const Error& e) {
      if (e.code() != Errc::collision && e.code() != Errc::duplicate) throw;
      report.excluded.emplace_back(v.node, e.code());
    }
  }

  // drop volunteers that cannot fund their deposits until the set is stable
  for (bool changed = true; changed;) {
    changed = false;
    for (auto& [id, rh] : helpers_) rebuild_fingers(rh);
    for (auto it = helpers_.begin(); it != helpers_.end(); ++it) {
      auto need = static_cast<Amount>(channels_needed(it->second)) * cfg_.channel_deposit;
      if (ledger_->wallet(it->second.node) < need) {
        report.excluded.emplace_back(it->second.node, Errc::insufficient_funds);
        members_.erase(it->first);
        by_node_.erase(it->second.node);
        broadcast_vk_.erase(it->first);
        helpers_.erase(it);
        changed = true;
        break;
      }
    }
  }

  const auto t = now();
  last_refresh_ = t;
  for (auto& [id, rh] : helpers_) {
    for (auto k : rh.finger_unique) ensure_channel(id, k);
  }
  for (auto& [id, rh] : helpers_) {
    for (auto k : rh.finger_unique) sign_record(rh, k, t);
  }
  return report;
}

RefreshStats Ring::refresh_attestations(Tick now) {
  RefreshStats stats;
  if (!deferred_leaves_.empty()) {
    auto pending = std::move(deferred_leaves_);
    deferred_leaves_.clear();
    for (auto id : pending) {
      if (contains(id) && !try_leave(id)) deferred_leaves_.push_back(id);
    }
  }

  if (now < last_refresh_) throw Error(Errc::invalid_argument, "refresh clock moved backwards");
  const bool boundary = now / cfg_.delta > last_refresh_ / cfg_.delta;
  last_refresh_ = now;
  if (boundary && repair_pending_) {
    repair(now);
    stats.repaired = true;
  }

  for (auto& [id, rh] : helpers_) {
    for (auto k : rh.finger_unique) {
      auto ch = backing_channel(id, k);
      auto it = rh.attest.find(k);
      if (!ch) {
        if (it != rh.attest.end()) {
          rh.attest.erase(it);
          ++stats.dropped;
        }
        continue;
      }
      if (it == rh.attest.end()) {
        if (boundary && sign_record(rh, k, now)) ++stats.replaced;
        continue;
      }
      auto lw = ledger_->free_balance(*ch, rh.node);
      if (boundary) {
        auto fresh = attestable_max(lw, cfg_.max_bucket);
        if (fresh == it->second.max && it->second.tv + cfg_.delta > now) {
          // same capacity: only the validity window moves, both parties re-sign it
          auto& rec = it->second;
          if (cosign_ && (!cosign_(id, id, k) || !cosign_(k, id, k))) {
            rh.attest.erase(it);
            ++stats.dropped;
            continue;
          }
          rec.tv += cfg_.delta;
          auto msg = rec.message();
          rec.sigma_i = identity::sign_detached(ids_->at(rh.node).sk, msg);
          rec.sigma_k = identity::sign_detached(ids_->at(helpers_.at(k).node).sk, msg);
          ++stats.extended;
        } else if (sign_record(rh, k, now)) {
          ++stats.replaced;
        } else {
          ++stats.dropped;
        }
      } else if (it->second.max > lw) {
        if (sign_record(rh, k, now)) {
          ++stats.resigned_depleted;
        } else {
          ++stats.dropped;
        }
      }
    }
  }
  return stats;
}

void Ring::repair(Tick now) {
  (void)now;
  for (auto& [id, rh] : helpers_) {
    rebuild_fingers(rh);
    for (auto k : rh.finger_unique) ensure_channel(id, k);
    std::erase_if(rh.attest, [&rh](const auto& kv) {
      return std::find(rh.finger_unique.begin(), rh.finger_unique.end(), kv.first) ==
             rh.finger_unique.end();
    });
  }
  repair_pending_ = false;
}

RingId Ring::node_join(const Volunteer& v) {
  auto id = admit(v);
  auto& rh = helpers_.at(id);
  rebuild_fingers(rh);
  std::vector<ledger::ChannelId> opened;
  for (auto k : rh.finger_unique) {
    bool existed = ledger_->channel_between(rh.node, helpers_.at(k).node).has_value();
    if (!ensure_channel(id, k)) {
      for (auto ch : opened) {
        ledger_->pc_close(ch);
        overlay_channels_.erase(ch);
      }
      members_.erase(id);
      by_node_.erase(v.node);
      broadcast_vk_.erase(id);
      helpers_.erase(id);
      throw Error(Errc::insufficient_funds, "join of node " + std::to_string(v.node) +
                                                " rolled back: channel open failed");
    }
    if (!existed) opened.push_back(*ledger_->channel_between(rh.node, helpers_.at(k).node));
  }
  const auto t = now();
  for (auto k : rh.finger_unique) sign_record(rh, k, t);
  repair_pending_ = true;
  return id;
}

bool Ring::try_leave(RingId id) {
  const auto node = helpers_.at(id).node;
  if (ledger_->pending_htlcs_of(node) > 0) return false;
  for (auto it = overlay_channels_.begin(); it != overlay_channels_.end();) {
    auto ch = ledger_->channel(*it);
    if (ch.has(node) && ch.state == ledger::ChannelState::open) {
      ledger_->pc_close(*it);
      it = overlay_channels_.erase(it);
    } else {
      ++it;
    }
  }
  members_.erase(id);
  helpers_.erase(id);
  by_node_.erase(node);
  for (auto& [other, rh] : helpers_) rh.attest.erase(id);
  repair_pending_ = true;
  return true;
}

LeaveResult Ring::node_leave(RingId id) {
  if (!contains(id)) throw Error(Errc::lookup, "unknown routing helper " + std::to_string(id));
  if (try_leave(id)) return LeaveResult::left;
  if (std::find(deferred_leaves_.begin(), deferred_leaves_.end(), id) == deferred_leaves_.end()) {
    deferred_leaves_.push_back(id);
  }
  return LeaveResult::deferred;
}

std::vector<std::string> Ring::finger_oracle_diff() const {
  std::vector<RingId> live(members_.begin(), members_.end());
  std::vector<std::string> diff;
  for (const auto& [id, rh] : helpers_) {
    auto targets = finger_targets(id, cfg_.m_bits);
    for (std::size_t j = 0; j < targets.size(); ++j) {
      // linear scan: smallest live id >= target, else the smallest id overall
      std::optional<RingId> expected;
      RingId smallest = live.front();
      for (auto x : live) {
        smallest = std::min(smallest, x);
        if (x >= targets[j] && (!expected || x < *expected)) expected = x;
      }
      auto want = expected.value_or(smallest);
      auto have = j < rh.finger_raw.size() ? rh.finger_raw[j] : ~RingId{0};
      if (want != have) {
        std::ostringstream line;
        line << id << ',' << (j + 1) << ',' << want << ',' << have;
        diff.push_back(line.str());
      }
    }
  }
  return diff;
}

void Ring::dump(std::ostream& out) const {
  for (const auto& [id, rh] : helpers_) {
    out << id << ',' << rh.address << ',';
    for (std::size_t j = 0; j < rh.finger_raw.size(); ++j) {
      if (j) out << ';';
      out << rh.finger_raw[j];
    }
    out << '\n';
  }
}

}  // namespace raced::dht
