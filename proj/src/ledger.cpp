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
#include "raced/ledger.hpp"

#include <algorithm>
#include <mutex>
#include <ostream>

namespace raced::ledger {

namespace {

Bytes channel_tuple(const identity::VerifyKey& vk_i, const identity::VerifyKey& vk_j, Amount lw_ij,
                    Amount lw_ji) {
  Encoder enc;
  enc.str("pc-open").bytes(vk_i.bytes).bytes(vk_j.bytes).i64(lw_ij).i64(lw_ji);
  return std::move(enc).take();
}

}  // namespace

const char* record_kind_name(RecordKind kind) noexcept {
  switch (kind) {
    case RecordKind::channel_open: return "channel_open";
    case RecordKind::channel_close: return "channel_close";
    case RecordKind::dispute: return "dispute";
  }
  return "unknown";
}

ChannelRecord decode_channel_record(const LedgerRecord& record) {
  if (record.kind != RecordKind::channel_open && record.kind != RecordKind::channel_close) {
    throw Error(Errc::decode, "not a channel record");
  }
  Decoder dec(record.payload);
  ChannelRecord out;
  out.channel = dec.u32();
  out.vk_a = identity::decode_verify_key(dec.bytes());
  out.vk_b = identity::decode_verify_key(dec.bytes());
  out.lw_ab = dec.i64();
  out.lw_ba = dec.i64();
  return out;
}

std::span<const ChannelTable::Adjacent> ChannelTable::adjacent(NodeRef node) const {
  if (node >= adj_.size()) return {};
  return adj_[node];
}

const PaymentChannel& ChannelTable::channel(ChannelId id) const {
  if (id >= channels_.size()) {
    throw Error(Errc::lookup, "unknown channel " + std::to_string(id));
  }
  return channels_[id];
}

std::optional<ChannelId> ChannelTable::between(NodeRef x, NodeRef y) const {
  auto it = open_by_pair_.find(key(x, y));
  if (it == open_by_pair_.end()) return std::nullopt;
  return it->second;
}

void ChannelTable::ensure_node(NodeRef n) {
  if (n >= adj_.size()) adj_.resize(static_cast<std::size_t>(n) + 1);
}

Tick Ledger::now() const {
  std::shared_lock lock(mu_);
  return now_;
}

void Ledger::advance_to(Tick t) {
  std::unique_lock lock(mu_);
  if (t < now_) throw Error(Errc::invalid_argument, "clock cannot move backwards");
  now_ = t;
}

void Ledger::mint(NodeRef node, Amount amount) {
  if (amount < 0) throw Error(Errc::invalid_argument, "negative mint");
  std::unique_lock lock(mu_);
  if (node >= wallets_.size()) wallets_.resize(static_cast<std::size_t>(node) + 1, 0);
  wallets_[node] += amount;
}

Amount Ledger::wallet(NodeRef node) const {
  std::shared_lock lock(mu_);
  return node < wallets_.size() ? wallets_[node] : 0;
}

void Ledger::register_party(const identity::PublicIdentity& id) {
  const bool ok = identity::verify_neighbor_identity(id);
  std::unique_lock lock(mu_);
  if (ok) verified_[id.node] = id;
  parties_[id.node] = id;
  by_vk_[id.vk] = id.node;
  table_.ensure_node(id.node);
}

ChannelId Ledger::pc_open(const identity::Identity& i, const identity::Identity& j, Amount lw_ij,
                          Amount lw_ji) {
  if (lw_ij < 0 || lw_ji < 0) {
    throw Error(Errc::invalid_argument, "channel deposits must be non-negative");
  }
  if (i.node == j.node) {
    throw Error(Errc::invalid_argument, "channel endpoints must differ");
  }
  const auto pub_i = i.public_identity();
  const auto pub_j = j.public_identity();
  auto checked = [this](const identity::PublicIdentity& p) {
    std::shared_lock lock(mu_);
    auto it = verified_.find(p.node);
    return it != verified_.end() && it->second == p;
  };
  for (const auto* p : {&pub_i, &pub_j}) {
    if (!checked(*p) && !identity::verify_neighbor_identity(*p)) {
      throw Error(Errc::invalid_argument, "neighbor identity verification failed");
    }
  }
  // both parties sign the same tuple with their temporary keys (2-of-2)
  auto tuple = channel_tuple(i.temp_vk, j.temp_vk, lw_ij, lw_ji);
  auto sig_i = identity::sign_detached(i.temp_sk, tuple);
  auto sig_j = identity::sign_detached(j.temp_sk, tuple);

  std::unique_lock lock(mu_);
  if (table_.open_by_pair_.contains(ChannelTable::key(i.node, j.node))) {
    throw Error(Errc::duplicate, "channel already open between " + std::to_string(i.node) +
                                     " and " + std::to_string(j.node));
  }
  auto wallet_of = [this](NodeRef n) { return n < wallets_.size() ? wallets_[n] : 0; };
  if (wallet_of(i.node) < lw_ij || wallet_of(j.node) < lw_ji) {
    throw Error(Errc::insufficient_funds, "insufficient on-chain funds for channel deposit");
  }
  if (lw_ij > 0) wallets_[i.node] -= lw_ij;
  if (lw_ji > 0) wallets_[j.node] -= lw_ji;

  for (const auto* p : {&pub_i, &pub_j}) {
    parties_[p->node] = *p;
    verified_[p->node] = *p;
    by_vk_[p->vk] = p->node;
  }
  table_.ensure_node(std::max(i.node, j.node));

  PaymentChannel ch;
  ch.id = static_cast<ChannelId>(table_.channels_.size());
  ch.a = i.node;
  ch.b = j.node;
  ch.lw_ab = lw_ij;
  ch.lw_ba = lw_ji;
  table_.channels_.push_back(ch);
  table_.open_by_pair_.emplace(ChannelTable::key(i.node, j.node), ch.id);
  table_.adj_[i.node].push_back({j.node, ch.id});
  table_.adj_[j.node].push_back({i.node, ch.id});

  Encoder enc;
  enc.u32(ch.id).bytes(i.temp_vk.bytes).bytes(j.temp_vk.bytes).i64(lw_ij).i64(lw_ji);
  enc.bytes(sig_i.bytes).bytes(sig_j.bytes);
  append(RecordKind::channel_open, std::move(enc).take());
  return ch.id;
}

PaymentChannel& Ledger::open_channel(ChannelId id) {
  if (id >= table_.channels_.size()) {
    throw Error(Errc::lookup, "unknown channel " + std::to_string(id));
  }
  auto& ch = table_.channels_[id];
  if (ch.state != ChannelState::open) {
    throw Error(Errc::terminal_state, "channel " + std::to_string(id) + " is closed");
  }
  return ch;
}

Settlement Ledger::pc_close(ChannelId id) {
  std::unique_lock lock(mu_);
  auto& ch = open_channel(id);
  if (ch.pending_htlcs > 0) {
    throw Error(Errc::close_blocked, "channel " + std::to_string(id) + " has pending HTLCs");
  }
  ch.state = ChannelState::closed;
  table_.open_by_pair_.erase(ChannelTable::key(ch.a, ch.b));
  for (auto n : {ch.a, ch.b}) {
    auto& list = table_.adj_[n];
    std::erase_if(list, [id](const ChannelTable::Adjacent& e) { return e.channel == id; });
  }
  auto need = static_cast<std::size_t>(std::max(ch.a, ch.b)) + 1;
  if (wallets_.size() < need) wallets_.resize(need, 0);
  wallets_[ch.a] += ch.lw_ab;
  wallets_[ch.b] += ch.lw_ba;

  Encoder enc;
  enc.u32(ch.id).bytes(parties_.at(ch.a).temp_vk.bytes).bytes(parties_.at(ch.b).temp_vk.bytes);
  enc.i64(ch.lw_ab).i64(ch.lw_ba);
  auto seq = append(RecordKind::channel_close, std::move(enc).take());
  return {ch.id, ch.lw_ab, ch.lw_ba, seq};
}

std::optional<ChannelId> Ledger::channel_between(NodeRef x, NodeRef y) const {
  std::shared_lock lock(mu_);
  return table_.between(x, y);
}

PaymentChannel Ledger::channel(ChannelId id) const {
  std::shared_lock lock(mu_);
  return table_.channel(id);
}

Amount Ledger::free_balance(ChannelId id, NodeRef from) const {
  std::shared_lock lock(mu_);
  const auto& ch = table_.channel(id);
  if (!ch.has(from)) throw Error(Errc::invalid_argument, "node is not a channel endpoint");
  return ch.free_from(from);
}

std::size_t Ledger::channel_count() const {
  std::shared_lock lock(mu_);
  return table_.channels_.size();
}

HtlcId Ledger::htlc_lock(ChannelId channel, NodeRef payer, Amount amount, const Digest& digest,
                         Tick timeout, const TxId& txid) {
  if (amount <= 0) throw Error(Errc::invalid_argument, "HTLC amount must be positive");
  std::unique_lock lock(mu_);
  auto& ch = open_channel(channel);
  if (!ch.has(payer)) throw Error(Errc::invalid_argument, "payer is not a channel endpoint");
  if (timeout <= now_) throw Error(Errc::invalid_argument, "HTLC timeout must lie in the future");
  auto& free = payer == ch.a ? ch.lw_ab : ch.lw_ba;
  auto& locked = payer == ch.a ? ch.locked_ab : ch.locked_ba;
  if (free < amount) {
    throw Error(Errc::liquidity, "insufficient free balance on channel " + std::to_string(channel));
  }
  free -= amount;
  locked += amount;
  ++ch.pending_htlcs;

  Htlc h;
  h.id = static_cast<HtlcId>(htlcs_.size());
  h.channel = channel;
  h.payer = payer;
  h.payee = ch.peer(payer);
  h.txid = txid;
  h.amount = amount;
  h.digest = digest;
  h.timeout = timeout;
  htlcs_.push_back(h);
  return h.id;
}

FulfillResult Ledger::htlc_fulfill(HtlcId id, ByteView preimage) {
  std::unique_lock lock(mu_);
  if (id >= htlcs_.size()) throw Error(Errc::lookup, "unknown HTLC");
  auto& h = htlcs_[id];
  if (h.state != HtlcState::pending) throw Error(Errc::terminal_state, "HTLC already settled");
  if (now_ >= h.timeout) throw Error(Errc::timeout, "HTLC expired; refund instead");
  if (sha256(preimage) != h.digest) return FulfillResult::wrong_preimage;

  auto& ch = table_.channels_[h.channel];
  auto& locked = h.payer == ch.a ? ch.locked_ab : ch.locked_ba;
  auto& payee_free = h.payer == ch.a ? ch.lw_ba : ch.lw_ab;
  locked -= h.amount;
  payee_free += h.amount;
  --ch.pending_htlcs;
  h.state = HtlcState::fulfilled;
  return FulfillResult::success;
}

void Ledger::htlc_refund(HtlcId id) {
  std::unique_lock lock(mu_);
  if (id >= htlcs_.size()) throw Error(Errc::lookup, "unknown HTLC");
  auto& h = htlcs_[id];
  if (h.state != HtlcState::pending) throw Error(Errc::terminal_state, "HTLC already settled");
  if (now_ < h.timeout) throw Error(Errc::too_early, "HTLC has not expired yet");

  auto& ch = table_.channels_[h.channel];
  auto& locked = h.payer == ch.a ? ch.locked_ab : ch.locked_ba;
  auto& payer_free = h.payer == ch.a ? ch.lw_ab : ch.lw_ba;
  locked -= h.amount;
  payer_free += h.amount;
  --ch.pending_htlcs;
  h.state = HtlcState::refunded;
}

Htlc Ledger::htlc(HtlcId id) const {
  std::shared_lock lock(mu_);
  if (id >= htlcs_.size()) throw Error(Errc::lookup, "unknown HTLC");
  return htlcs_[id];
}

std::size_t Ledger::pending_htlcs_of(NodeRef node) const {
  std::shared_lock lock(mu_);
  std::size_t n = 0;
  for (const auto& e : table_.adjacent(node)) n += table_.channels_[e.channel].pending_htlcs;
  return n;
}

std::uint64_t Ledger::append(RecordKind kind, Bytes payload) {
  LedgerRecord r;
  r.seq = records_.size();
  r.kind = kind;
  r.payload = std::move(payload);
  records_.push_back(std::move(r));
  return records_.back().seq;
}

std::uint64_t Ledger::bc_write(Bytes payload) {
  std::unique_lock lock(mu_);
  return append(RecordKind::dispute, std::move(payload));
}

std::vector<LedgerRecord> Ledger::records() const {
  std::shared_lock lock(mu_);
  return records_;
}

std::vector<LedgerRecord> Ledger::records_of_kind(RecordKind kind) const {
  std::shared_lock lock(mu_);
  std::vector<LedgerRecord> out;
  for (const auto& r : records_) {
    if (r.kind == kind) out.push_back(r);
  }
  return out;
}

std::size_t Ledger::record_count() const {
  std::shared_lock lock(mu_);
  return records_.size();
}

Digest Ledger::transcript_hash(std::size_t upto) const {
  std::shared_lock lock(mu_);
  if (upto > records_.size()) throw Error(Errc::invalid_argument, "transcript prefix too long");
  Digest h = sha256({});
  for (std::size_t k = 0; k < upto; ++k) {
    const auto& r = records_[k];
    Encoder enc;
    enc.bytes(h).u64(r.seq).u8(static_cast<std::uint8_t>(r.kind)).bytes(r.payload);
    h = sha256(enc.buffer());
  }
  return h;
}

void Ledger::export_records(std::ostream& out) const {
  std::shared_lock lock(mu_);
  for (const auto& r : records_) {
    out << r.seq << ',' << record_kind_name(r.kind) << ',' << to_hex(r.payload) << '\n';
  }
}

std::vector<identity::VerifyKey> Ledger::retrieve_neighbors(const identity::VerifyKey& vk) const {
  std::shared_lock lock(mu_);
  auto it = by_vk_.find(vk);
  if (it == by_vk_.end()) throw Error(Errc::lookup, "unknown verification key");
  std::vector<identity::VerifyKey> out;
  for (const auto& e : table_.adjacent(it->second)) {
    out.push_back(parties_.at(e.peer).vk);
  }
  return out;
}

BalanceVector Ledger::balance_vector() const {
  std::shared_lock lock(mu_);
  BalanceVector out;
  out.reserve(table_.channels_.size());
  for (const auto& ch : table_.channels_) {
    out.push_back({ch.lw_ab, ch.lw_ba, ch.locked_ab, ch.locked_ba});
  }
  return out;
}

Amount Ledger::total_value() const {
  std::shared_lock lock(mu_);
  Amount sum = 0;
  for (const auto& ch : table_.channels_) {
    if (ch.state == ChannelState::open) sum += ch.total();
  }
  for (auto w : wallets_) sum += w;
  return sum;
}

}  // namespace raced::ledger
